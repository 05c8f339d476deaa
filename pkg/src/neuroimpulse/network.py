"""Support for projection-coupled (connected) units.

Provides the strictly positive null-weight vector ``w`` with ``B w = 0``,
the elementwise bounds on the neuronal variables it implies, runtime
monitors for those bounds and a Lyapunov-type envelope for the connected
closed loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .bounds import BoundReport
from .exceptions import Infeasible, NotHurwitz, SteeringFailed, UnsupportedLeak
from .hybridsim import HybridTrajectory
from .model import Connected


@dataclass(frozen=True)
class NullWeight:
    w: np.ndarray
    residual: float


@dataclass(frozen=True)
class ZBounds:
    lower: np.ndarray
    upper: np.ndarray
    regime: str  # "equal" or "spread"
    lam_min: float
    lam_max: float
    gamma: float = 0.0


@dataclass
class MonitorReport:
    max_abs_wz: float
    wz_min: float
    wz_max: float
    wz_lower_limit: float
    wz_upper_limit: float
    max_lower_violation: float
    max_upper_violation: float
    max_d1: float
    max_d2: float
    d1_bound: float
    d2_bound: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def compute_null_weight(B) -> NullWeight:
    """Build ``w = sum_i (e_i + q_i)`` where ``B q_i = -B_i`` with ``q_i >= 0``.

    Every entry is at least one and ``B w = 0`` up to the NNLS residual.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = B.shape[1]
    if np.any(np.linalg.norm(B, axis=0) == 0):
        raise SteeringFailed("B has a zero column")
    w = np.ones(n)
    try:
        for i in range(n):
            w += linalg.nnls(B, -B[:, i])
    except Infeasible as exc:
        raise SteeringFailed(f"column {i} cannot be cancelled by nonnegative combinations") from exc
    return NullWeight(w=w, residual=float(np.linalg.norm(B @ w)))


def z_bounds(B, lams, w: NullWeight) -> ZBounds:
    B = np.atleast_2d(np.asarray(B, dtype=float))
    lams = np.ravel(np.asarray(lams, dtype=float))
    n = B.shape[1]
    if lams.size == 1:
        lams = np.full(n, lams[0])
    d = np.einsum("ki,ki->i", B, B)
    wv = w.w
    # sum_{j != i} w_j d_j / w_i
    others = (wv @ d - wv * d) / wv
    lam_min, lam_max = float(lams.min()), float(lams.max())
    if lam_max == lam_min:
        return ZBounds(lower=-others, upper=d, regime="equal", lam_min=lam_min, lam_max=lam_max)
    if lam_min <= 0:
        raise UnsupportedLeak("unequal leaks require every leak constant to be positive")
    gamma = 1.0 - lam_max / lam_min
    lower = gamma * (wv @ d) / wv - others
    return ZBounds(lower=lower, upper=d, regime="spread", lam_min=lam_min, lam_max=lam_max, gamma=gamma)


def _projection(ctrl: Connected) -> np.ndarray:
    return ctrl.auxiliary_matrix()


def monitor_connected(traj: HybridTrajectory, w: NullWeight, zb: ZBounds) -> MonitorReport:
    ctrl = traj.ctrl
    if not isinstance(ctrl, Connected):
        raise TypeError("monitor_connected needs a trajectory of a connected controller")
    z = traj.z
    wz = z @ w.w
    scale = float(w.w @ zb.upper)
    if zb.regime == "equal":
        lo_lim, hi_lim = 0.0, 0.0
    else:
        lo_lim, hi_lim = zb.gamma * scale, scale
    R = _projection(ctrl)
    RL = R * ctrl.lambdas
    d1 = np.linalg.norm(z @ R.T, axis=1)
    d2 = np.linalg.norm(z @ RL.T, axis=1)
    return MonitorReport(
        max_abs_wz=float(np.max(np.abs(wz))),
        wz_min=float(wz.min()),
        wz_max=float(wz.max()),
        wz_lower_limit=lo_lim,
        wz_upper_limit=hi_lim,
        max_lower_violation=float(max(0.0, np.max(zb.lower - z))),
        max_upper_violation=float(max(0.0, np.max(z - zb.upper))),
        max_d1=float(d1.max()),
        max_d2=float(d2.max()),
        d1_bound=linalg.box_norm(R, zb.lower, zb.upper),
        d2_bound=linalg.box_norm(RL, zb.lower, zb.upper),
    )


def connected_bound(A, ctrl: Connected, zb: ZBounds | None = None) -> BoundReport:
    """Practical-stability envelope for a linear plant under connected units.

    With ``R = (B B^T)^-1 B`` the auxiliary variable obeys
    ``dx_c/dt = (A - K) x_c - ((A - K) R + R Lambda) z``; bounding ``z`` by the
    box ``zb`` and repeating the quadratic-certificate argument with
    ``Q = I`` gives

        ||x(t)|| <= sqrt(kappa(P)) ||x0|| e^{-t / (4 lambda_min(P))}
                    + sup ||R z|| + 2 sup ||P ((A - K) R + R Lambda) z||.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if zb is None:
        zb = z_bounds(ctrl.B, ctrl.lambdas, compute_null_weight(ctrl.B))
    M = A - ctrl.gain
    try:
        P = linalg.solve_lyapunov(M, np.eye(M.shape[0]))
    except NotHurwitz:
        return BoundReport("connected", False, "A - K is not Hurwitz")
    eig = linalg.sym_eig(P)
    lmin, lmax = float(eig[0]), float(eig[-1])
    R = _projection(ctrl)
    E = P @ (M @ R + R * ctrl.lambdas)
    d1 = linalg.box_norm(R, zb.lower, zb.upper)
    pe = linalg.box_norm(E, zb.lower, zb.upper)
    return BoundReport(
        "connected", True, "A - K is Hurwitz and z stays in the null-weight box",
        prefactor=math.sqrt(lmax / lmin),
        decay_rate=-1.0 / (4.0 * lmin),
        ultimate_bound=d1 + 2.0 * pe,
        aux={"lambda_min_P": lmin, "kappa_P": lmax / lmin, "sup_Rz": d1, "sup_PEz": pe},
    )
