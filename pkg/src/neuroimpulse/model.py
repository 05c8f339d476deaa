"""Plant, input-function and controller specifications.

Specifications are plain immutable containers. Structural mistakes (wrong
shapes, unknown drift names) raise at construction time; violations of the
closed-loop modelling assumptions are collected by :func:`validate` so a
caller can report all of them at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .exceptions import Infeasible, NotLinear, SingularGram

# Numeric codes understood by the compiled integrator.
DRIFT_LINEAR = 0
DRIFT_CUBIC = 1


def _frozen(a, dtype=float, ndim=None, name="array") -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def _per_unit(values, n: int, name: str) -> np.ndarray:
    """Scalars broadcast to every unit; sequences must have one entry per unit."""
    v = np.ravel(np.asarray(values, dtype=float))
    if v.size == 1:
        v = np.full(n, v[0])
    if v.size != n:
        raise ValueError(f"B has {n} columns but {name} has {v.size} entries")
    return _frozen(v, name=name)


@dataclass(frozen=True)
class DriftDef:
    """Entry of the drift registry.

    ``matrix`` returns the linear representation ``A`` (or ``None`` for a
    genuinely nonlinear drift); ``func`` evaluates the drift.
    """

    name: str
    n_params: Callable[[int], int]
    matrix: Callable[[int, np.ndarray], np.ndarray | None]
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dims: tuple[int, ...] | None = None
    check: Callable[[np.ndarray], str | None] = lambda p: None


def _rotation_matrix(dim, p):
    a, omega = p
    return np.array([[a, omega], [-omega, a]])


def _cubic_check(p):
    return None if p[1] > 0 else "cubic_damped requires c > 0"


DRIFTS: dict[str, DriftDef] = {
    "linear": DriftDef(
        name="linear",
        n_params=lambda k: k * k,
        matrix=lambda k, p: p.reshape(k, k),
        func=lambda x, p: p.reshape(x.size, x.size) @ x,
    ),
    "rotation_scaling": DriftDef(
        name="rotation_scaling",
        n_params=lambda k: 2,
        matrix=_rotation_matrix,
        func=lambda x, p: _rotation_matrix(2, p) @ x,
        dims=(2,),
    ),
    "cubic_damped": DriftDef(
        name="cubic_damped",
        n_params=lambda k: 2,
        matrix=lambda k, p: None,
        func=lambda x, p: p[0] * x - p[1] * x**3,
        check=_cubic_check,
    ),
}


@dataclass(frozen=True, eq=False)
class PlantSpec:
    """Plant ``dx/dt = f(x)`` with ``f`` taken from :data:`DRIFTS`."""

    dim: int
    drift: str = "linear"
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("plant dimension must be at least 1")
        object.__setattr__(self, "dim", int(self.dim))
        if self.drift not in DRIFTS:
            raise ValueError(f"unknown drift {self.drift!r}; known: {sorted(DRIFTS)}")
        d = DRIFTS[self.drift]
        params = _frozen(np.ravel(self.params), name="drift params")
        if params.size != d.n_params(self.dim):
            raise ValueError(
                f"drift {self.drift!r} with dim {self.dim} takes {d.n_params(self.dim)} params, got {params.size}"
            )
        if d.dims is not None and self.dim not in d.dims:
            raise ValueError(f"drift {self.drift!r} only supports dim in {d.dims}")
        object.__setattr__(self, "params", params)

    @classmethod
    def linear(cls, A) -> "PlantSpec":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        return cls(A.shape[0], "linear", A.ravel())

    @property
    def matrix(self) -> np.ndarray | None:
        """Matrix ``A`` with ``f(x) = A x``, or ``None`` for nonlinear drifts."""
        return DRIFTS[self.drift].matrix(self.dim, self.params)

    @property
    def is_linear(self) -> bool:
        return self.matrix is not None

    def f(self, x) -> np.ndarray:
        return DRIFTS[self.drift].func(np.asarray(x, dtype=float), self.params)

    def kernel_args(self):
        A = self.matrix
        if A is not None:
            return DRIFT_LINEAR, np.ascontiguousarray(A), np.zeros(2)
        if self.drift == "cubic_damped":
            return DRIFT_CUBIC, np.zeros((self.dim, self.dim)), np.array(self.params)
        raise NotImplementedError(self.drift)


@dataclass(frozen=True, eq=False)
class RectifiedProjection:
    """Input function ``g_i(x) = c_i * max(V_i . x, 0)``."""

    directions: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        V = _frozen(np.atleast_2d(self.directions), ndim=2, name="directions")
        c = _frozen(np.ravel(self.scales), name="scales")
        if c.size != V.shape[0]:
            raise ValueError(f"{V.shape[0]} directions but {c.size} scales")
        object.__setattr__(self, "directions", V)
        object.__setattr__(self, "scales", c)

    @property
    def n_units(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        proj = x @ self.directions.T
        return self.scales * np.maximum(proj, 0.0)

    def envelope_slope(self) -> float:
        """Smallest ``L`` with ``g_i(x) <= L ||x||`` for every unit."""
        return float(np.max(np.abs(self.scales) * np.linalg.norm(self.directions, axis=1)))


@dataclass(frozen=True, eq=False)
class Independent:
    """Uncoupled LIF units: ``dz = -Lambda z + g(x) - Theta s``."""

    B: np.ndarray
    thetas: np.ndarray
    lambdas: np.ndarray
    g: RectifiedProjection

    topology = "independent"

    def __post_init__(self):
        B = _frozen(np.atleast_2d(self.B), ndim=2, name="B")
        n = B.shape[1]
        thetas = _per_unit(self.thetas, n, "thetas")
        lambdas = _per_unit(self.lambdas, n, "lambdas")
        if not isinstance(self.g, RectifiedProjection):
            raise TypeError("input function must be a RectifiedProjection")
        if self.g.n_units != n or self.g.dim != B.shape[0]:
            raise ValueError(
                f"input function maps R^{self.g.dim} -> R^{self.g.n_units}, expected R^{B.shape[0]} -> R^{n}"
            )
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "lambdas", lambdas)

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    @property
    def n_units(self) -> int:
        return self.B.shape[1]

    @property
    def thresholds(self) -> np.ndarray:
        return self.thetas

    @property
    def reset_matrix(self) -> np.ndarray:
        return np.diag(self.thetas)

    def input(self, x) -> np.ndarray:
        return self.g(x)

    def auxiliary_matrix(self) -> np.ndarray:
        """Matrix ``M`` with ``x_c = x + M z``."""
        return self.B / self.thetas

    def analogue(self, x) -> np.ndarray:
        """``k(x) = B Theta^-1 g(x)``."""
        return self.auxiliary_matrix() @ self.g(x)


@dataclass(frozen=True, eq=False)
class Connected:
    """Projection-coupled units driven by ``B^T k(x)`` with ``k(x) = -K_g x``."""

    B: np.ndarray
    lambdas: np.ndarray
    gain: np.ndarray

    topology = "connected"

    def __post_init__(self):
        B = _frozen(np.atleast_2d(self.B), ndim=2, name="B")
        n = B.shape[1]
        lambdas = _per_unit(self.lambdas, n, "lambdas")
        gain = _frozen(np.atleast_2d(self.gain), ndim=2, name="gain")
        if gain.shape != (B.shape[0], B.shape[0]):
            raise ValueError(f"gain must be {B.shape[0]}x{B.shape[0]}, got {gain.shape}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "gain", gain)

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    @property
    def n_units(self) -> int:
        return self.B.shape[1]

    @property
    def thresholds(self) -> np.ndarray:
        return np.einsum("ki,ki->i", self.B, self.B)

    @property
    def reset_matrix(self) -> np.ndarray:
        return self.B.T @ self.B

    def input(self, x) -> np.ndarray:
        return self.B.T @ self.analogue(x)

    def analogue(self, x) -> np.ndarray:
        return -self.gain @ np.asarray(x, dtype=float)

    def auxiliary_matrix(self) -> np.ndarray:
        gram = self.B @ self.B.T
        if np.linalg.matrix_rank(gram) < self.dim:
            raise SingularGram("B B^T is singular; the steering condition is violated")
        return np.linalg.solve(gram, self.B)


ControllerSpec = Independent | Connected


def axis_pair_controller(dim: int, theta: float, lam: float, alpha: float = 1.0) -> Independent:
    """Per-axis pair of opposing units: impulses ``-alpha e_k`` and ``+alpha e_k``.

    Unit ``2k`` integrates ``[x_k]_+`` and unit ``2k+1`` integrates
    ``[-x_k]_+``, giving the analogue gain ``(alpha / theta) I``.
    """
    B = np.zeros((dim, 2 * dim))
    V = np.zeros((2 * dim, dim))
    for k in range(dim):
        B[k, 2 * k], B[k, 2 * k + 1] = -alpha, alpha
        V[2 * k, k], V[2 * k + 1, k] = 1.0, -1.0
    return Independent(B, np.full(2 * dim, theta), np.full(2 * dim, lam),
                       RectifiedProjection(V, np.ones(2 * dim)))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def steering_holds(B) -> bool:
    """True when the nonnegative combinations of the columns cover ``R^K``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if np.linalg.matrix_rank(B) < B.shape[0]:
        return False
    try:
        for i in range(B.shape[1]):
            linalg.nnls(B, -B[:, i])
    except Infeasible:
        return False
    return True


def validate(plant: PlantSpec, ctrl: ControllerSpec) -> ValidationReport:
    report = ValidationReport()
    v = report.violations
    if ctrl.dim != plant.dim:
        v.append(f"dimension mismatch: plant has dim {plant.dim}, controller B has {ctrl.dim} rows")
    check = DRIFTS[plant.drift].check(plant.params)
    if check:
        v.append(check)
    if np.any(ctrl.lambdas < 0):
        v.append("leak constants must be nonnegative")
    if isinstance(ctrl, Independent):
        if np.any(ctrl.thetas <= 0):
            v.append("threshold must be positive")
        if np.any(ctrl.g.scales < 0):
            v.append("input function scales must be nonnegative so that g(x) >= 0")
    else:
        if np.any(ctrl.thresholds <= 0):
            v.append("every column of B must be nonzero (threshold B_i^T B_i must be positive)")
        elif not steering_holds(ctrl.B):
            v.append("steering condition fails: columns of B do not conically span R^K")
    return report


def derive_linear_gain(ctrl: Independent, n_probe: int = 100, seed: int = 0) -> np.ndarray:
    """Return ``K_g`` with ``B Theta^-1 g(x) = -K_g x``.

    ``k(x)`` is positively homogeneous, so when it is linear it equals its
    odd part. The odd part of ``[v.x]_+`` is ``v.x / 2``, which yields the
    candidate gain in closed form; it is then checked on random probes.

    Raises
    ------
    NotLinear
        If the probes show that ``k`` is only piecewise linear.
    """
    if not isinstance(ctrl, Independent):
        raise TypeError("derive_linear_gain needs an Independent controller")
    if np.any(ctrl.thetas <= 0):
        raise ValueError("thresholds must be positive")
    g = ctrl.g
    M = ctrl.auxiliary_matrix()
    K_g = -0.5 * (M * g.scales) @ g.directions

    rng = np.random.default_rng(seed)
    probes = rng.standard_normal((n_probe, ctrl.dim)) * rng.uniform(0.1, 10.0, (n_probe, 1))
    for x in probes:
        err = np.linalg.norm(ctrl.analogue(x) + K_g @ x)
        if err > 1e-10 * (1.0 + np.linalg.norm(x)):
            raise NotLinear(f"B Theta^-1 g(x) is not linear (probe error {err:.3e})")
    return K_g


def is_sign_partitioned(g: RectifiedProjection) -> bool:
    """Scalar two-unit check: ``g_1`` vanishes for ``x <= 0``, ``g_2`` for ``x >= 0``."""
    if g.dim != 1 or g.n_units != 2:
        return False
    (v1,), (v2,) = g.directions
    c1, c2 = g.scales
    return (c1 == 0 or v1 >= 0) and (c2 == 0 or v2 <= 0)


def as_matrix_rows(values: Sequence[Sequence[float]] | Sequence[float], rows: int | None = None) -> np.ndarray:
    """Accept a nested row list or a flat row-major list with a known row count."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1 and rows is not None:
        if arr.size % rows:
            raise ValueError(f"{arr.size} entries cannot be split into {rows} rows")
        arr = arr.reshape(rows, -1)
    return np.atleast_2d(arr)
