"""Certified envelopes ``||x(t)|| <= D ||x(0)|| e^{alpha t} + C_ub`` and inter-event bounds.

Inapplicable bounds are returned as data (``applicable=False`` with a
reason) rather than raised, so parameter sweeps can evaluate them across
regimes where the hypotheses fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .exceptions import NoEventsEver, NotHurwitz
from .model import RectifiedProjection, is_sign_partitioned

_LEAK_EPS = 1e-12


@dataclass
class BoundReport:
    theorem: str
    applicable: bool
    reason: str
    prefactor: float = math.nan
    decay_rate: float = math.nan
    ultimate_bound: float = math.nan
    aux: dict[str, float] = field(default_factory=dict)

    def envelope(self, t, x0_norm: float):
        """Evaluate ``D ||x0|| e^{alpha t} + C_ub`` (scalar or array ``t``)."""
        t = np.asarray(t, dtype=float)
        return self.prefactor * x0_norm * np.exp(self.decay_rate * t) + self.ultimate_bound

    def bound_at_zero(self, x0_norm: float) -> float:
        return self.prefactor * x0_norm + self.ultimate_bound

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "applicable": self.applicable,
            "reason": self.reason,
            "prefactor": self.prefactor,
            "decay_rate": self.decay_rate,
            "ultimate_bound": self.ultimate_bound,
            "aux": dict(self.aux),
        }


def _row(B) -> np.ndarray:
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.shape != (1, 2):
        raise ValueError(f"scalar bounds need B of shape (1, 2), got {B.shape}")
    return B


def thm1_bound(a: float, b: float, lam: float, B) -> BoundReport:
    """Scalar linear plant with linear analogue gain ``k(x) = -b x``."""
    B = _row(B)
    cube = linalg.cube_norm(B)
    d = a - b + lam
    aux = {"cube_norm_B": cube, "d": d}
    if not b > a:
        return BoundReport("thm1", False, f"requires b > a (b = {b:g}, a = {a:g})", aux=aux)
    return BoundReport(
        "thm1", True, "b > a",
        prefactor=1.0,
        decay_rate=(a - b) / 2.0,
        ultimate_bound=cube * (1.0 + abs(d) / abs(a - b)),
        aux=aux,
    )


def cor1_bound(a: float, b: float, lam: float, B) -> BoundReport:
    B = _row(B)
    cube = linalg.cube_norm(B)
    aux = {"cube_norm_B": cube}
    if not b > a:
        return BoundReport("cor1", False, f"requires b > a (b = {b:g}, a = {a:g})", aux=aux)
    if not b >= a + lam:
        return BoundReport("cor1", False, f"requires b >= a + lambda ({b:g} < {a + lam:g})", aux=aux)
    return BoundReport("cor1", True, "b >= a + lambda", prefactor=1.0,
                       decay_rate=(a - b) / 2.0, ultimate_bound=2.0 * cube, aux=aux)


def thm2_bound(a: float, b: float, lam: float, B, g: RectifiedProjection) -> BoundReport:
    """Tighter scalar bound for sign-partitioned inputs: rate ``a - b``, ultimate bound ``||B||_cube``."""
    B = _row(B)
    cube = linalg.cube_norm(B)
    aux = {"cube_norm_B": cube}
    if not b > a:
        return BoundReport("thm2", False, f"requires b > a (b = {b:g}, a = {a:g})", aux=aux)
    if not b >= a + lam:
        return BoundReport("thm2", False, f"requires b >= a + lambda ({b:g} < {a + lam:g})", aux=aux)
    if not is_sign_partitioned(g):
        return BoundReport("thm2", False, "input function is not sign-partitioned", aux=aux)
    return BoundReport("thm2", True, "b >= a + lambda and g sign-partitioned", prefactor=1.0,
                       decay_rate=a - b, ultimate_bound=cube, aux=aux)


def _lyapunov_or_none(M):
    try:
        return linalg.solve_lyapunov(M, np.eye(M.shape[0]))
    except NotHurwitz:
        return None


def thm3_bound(A, K_g, B, Lam) -> BoundReport:
    """Multidimensional linear plant; certificate from ``P (A - K) + (A - K)^T P = -I``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    K_g = np.atleast_2d(np.asarray(K_g, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Lam = np.atleast_2d(np.asarray(Lam, dtype=float))
    if Lam.shape[0] == 1 and B.shape[1] > 1 and Lam.size == B.shape[1]:
        Lam = np.diag(Lam.ravel())
    k, n = B.shape
    if A.shape != (k, k) or K_g.shape != (k, k) or Lam.shape != (n, n):
        raise ValueError(f"shape mismatch: A {A.shape}, K_g {K_g.shape}, B {B.shape}, Lambda {Lam.shape}")
    M = A - K_g
    cube = linalg.cube_norm(B)
    P = _lyapunov_or_none(M)
    if P is None:
        return BoundReport("thm3", False, "A - K is not Hurwitz", aux={"cube_norm_B": cube})
    eig = linalg.sym_eig(P)
    lmin, lmax = float(eig[0]), float(eig[-1])
    PE = linalg.cube_norm(P @ (M @ B + B @ Lam))
    return BoundReport(
        "thm3", True, "A - K is Hurwitz",
        prefactor=math.sqrt(lmax / lmin),
        decay_rate=-1.0 / (4.0 * lmin),
        ultimate_bound=cube + 2.0 * PE,
        aux={"lambda_min_P": lmin, "lambda_max_P": lmax, "kappa_P": lmax / lmin,
             "cube_norm_B": cube, "cube_norm_PE": PE},
    )


def cor4_bound(A, K_g, B, lam: float) -> BoundReport:
    """Equal-leak simplification ``2 (1 + ||S||) ||B||_cube`` with ``S`` the P-skew part of ``A - K``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    base = thm3_bound(A, K_g, B, lam * np.eye(B.shape[1]))
    if not base.applicable:
        return BoundReport("cor4", False, base.reason, aux=base.aux)
    M = np.atleast_2d(np.asarray(A, dtype=float)) - np.atleast_2d(np.asarray(K_g, dtype=float))
    P = linalg.solve_lyapunov(M, np.eye(M.shape[0]))
    S = 0.5 * (P @ M - M.T @ P)
    s_norm = linalg.spectral_norm(S)
    aux = dict(base.aux, norm_S=s_norm)
    if lam > 0:
        margin = float(linalg.sym_eig(np.eye(P.shape[0]) / (2.0 * lam) - P)[0])
        aux["psd_margin"] = margin
        if margin < -1e-12:
            return BoundReport("cor4", False, "requires I/(2 lambda) - P to be positive semidefinite", aux=aux)
    return BoundReport(
        "cor4", True, "A - K is Hurwitz and I/(2 lambda) - P >= 0",
        prefactor=base.prefactor,
        decay_rate=base.decay_rate,
        ultimate_bound=2.0 * (1.0 + s_norm) * base.aux["cube_norm_B"],
        aux=aux,
    )


def _log_bound(theta: float, lam: float, g: float) -> float:
    """``-(1/lam) log(1 - theta lam / g)`` with the ``lam -> 0`` limit ``theta / g``."""
    if lam < _LEAK_EPS:
        return theta / g
    return -math.log1p(-theta * lam / g) / lam


def inter_event_bounds(theta: float, lam: float, g_minus: float, g_plus: float) -> tuple[float, float]:
    """Lower and upper bound on the gap between consecutive events of one unit.

    Assumes ``g_minus <= g_i(t) <= g_plus`` throughout. The upper bound is
    ``inf`` when the weakest input cannot overcome the leak.

    Raises
    ------
    NoEventsEver
        If even ``g_plus`` cannot drive the unit to threshold.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not g_plus >= g_minus >= 0:
        raise ValueError("need g_plus >= g_minus >= 0")
    if g_plus <= 0 or lam * theta >= g_plus:
        raise NoEventsEver(f"input bound {g_plus:g} cannot reach threshold {theta:g} against leak {lam:g}")
    lower = _log_bound(theta, lam, g_plus)
    if g_minus <= 0 or lam * theta >= g_minus:
        upper = math.inf
    else:
        upper = _log_bound(theta, lam, g_minus)
    return lower, upper


def min_inter_event_global(thetas: Sequence[float], lams: Sequence[float],
                           alpha_fn: Callable[[float], float] | RectifiedProjection, C: float) -> float:
    """Uniform lower bound on all inter-event times given ``||x(t)|| <= C`` and ``g_i(x) <= alpha_fn(||x||)``.

    Passing the input function itself uses :func:`rectified_envelope`.
    """
    if isinstance(alpha_fn, RectifiedProjection):
        alpha_fn = rectified_envelope(alpha_fn)
    theta_min = float(np.min(thetas))
    lam_min = float(np.min(lams))
    if C < 0:
        raise ValueError("C must be nonnegative")
    g_max = float(alpha_fn(C))
    if C == 0 or g_max <= 0 or lam_min * theta_min >= g_max:
        return math.inf
    return _log_bound(theta_min, lam_min, g_max)


def rectified_envelope(g: RectifiedProjection) -> Callable[[float], float]:
    """Linear class-K-infinity envelope ``r -> (max_i c_i ||V_i||) r``."""
    slope = g.envelope_slope()
    return lambda r: slope * r
