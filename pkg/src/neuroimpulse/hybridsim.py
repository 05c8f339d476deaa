"""Simulation of the coupled plant / LIF-unit hybrid system.

:func:`simulate` integrates the smooth flow with fixed-step RK4, localizes
threshold crossings by bisection and applies impulses and resets with
right-continuous semantics. :func:`exact_sim_1d` is an independent
piecewise closed-form integrator for the scalar two-unit case, used as an
oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import _kernel
from .exceptions import Diverged, NoEvent, StepTooCoarse, ZeroInitial
from .model import (
    ControllerSpec,
    Independent,
    PlantSpec,
    RectifiedProjection,
    validate,
)

DEFAULT_GUARD = 1e12


@dataclass(frozen=True)
class EventRecord:
    t: float
    unit: int
    seq: int


@dataclass(eq=False)
class HybridTrajectory:
    """Sampled hybrid trajectory.

    Rows are ordered in time. Every event contributes two rows with the
    same timestamp: the pre-event limit (``kind == 1``) followed by the
    post-event value (``kind == 2``). Grid samples have ``kind == 0``.
    """

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    xc: np.ndarray
    kind: np.ndarray
    event_t: np.ndarray
    event_unit: np.ndarray
    ctrl: ControllerSpec
    plant: PlantSpec | None = None
    diverged: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def n_events(self) -> int:
        return int(self.event_t.size)

    @property
    def events(self) -> list[EventRecord]:
        return [EventRecord(float(t), int(u), k) for k, (t, u) in enumerate(zip(self.event_t, self.event_unit))]

    @property
    def pre_index(self) -> np.ndarray:
        return np.flatnonzero(self.kind == _kernel.ROW_PRE)

    @property
    def post_index(self) -> np.ndarray:
        return np.flatnonzero(self.kind == _kernel.ROW_POST)

    @property
    def grid_index(self) -> np.ndarray:
        return np.flatnonzero(self.kind == _kernel.ROW_GRID)

    def unit_event_times(self, unit: int) -> np.ndarray:
        return self.event_t[self.event_unit == unit]

    def inter_event_gaps(self, unit: int) -> np.ndarray:
        return np.diff(self.unit_event_times(unit))

    def inter_event_stats(self) -> dict[int, tuple[float, float]]:
        """Per-unit ``(min, max)`` gap between consecutive events; NaN with fewer than two events."""
        stats = {}
        for i in range(self.ctrl.n_units):
            gaps = self.inter_event_gaps(i)
            stats[i] = (float(gaps.min()), float(gaps.max())) if gaps.size else (math.nan, math.nan)
        return stats

    def event_counts(self) -> np.ndarray:
        return np.bincount(self.event_unit, minlength=self.ctrl.n_units)

    def input_values(self) -> np.ndarray:
        """Unit inputs ``g(x(t))`` (or ``B^T k(x)`` when connected) at every row."""
        return np.array([self.ctrl.input(xi) for xi in self.x]).reshape(len(self.t), -1)


def auxiliary(x, z, ctrl: ControllerSpec) -> np.ndarray:
    """Continuous auxiliary variable ``x_c = x + M z``.

    ``M`` is ``B Theta^-1`` for independent units and ``(B B^T)^-1 B`` for
    connected ones. Accepts single states or row-stacked batches.
    """
    M = ctrl.auxiliary_matrix()
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape[-1] != ctrl.dim or z.shape[-1] != ctrl.n_units:
        raise ValueError(f"state shapes {x.shape}, {z.shape} do not match controller ({ctrl.dim}, {ctrl.n_units})")
    return x + z @ M.T


def _time_grid(T: float, dt: float) -> np.ndarray:
    n = int(math.ceil(T / dt - 1e-9))
    grid = np.arange(n + 1) * dt
    grid[-1] = T
    return grid


def _flatten(plant: PlantSpec, ctrl: ControllerSpec):
    drift_kind, A, dp = plant.kernel_args()
    if isinstance(ctrl, Independent):
        W = ctrl.g.scales[:, None] * ctrl.g.directions
        rectify = True
        reset_zero = True
    else:
        W = -ctrl.B.T @ ctrl.gain
        rectify = False
        reset_zero = False
    return dict(
        drift_kind=drift_kind,
        A=np.ascontiguousarray(A, dtype=float),
        dp=np.ascontiguousarray(dp, dtype=float),
        W=np.ascontiguousarray(W, dtype=float),
        rectify=rectify,
        lams=np.ascontiguousarray(ctrl.lambdas, dtype=float),
        thr=np.ascontiguousarray(ctrl.thresholds, dtype=float),
        B=np.ascontiguousarray(ctrl.B, dtype=float),
        G=np.ascontiguousarray(ctrl.reset_matrix, dtype=float),
        reset_zero=reset_zero,
    )


def simulate(
    plant: PlantSpec,
    ctrl: ControllerSpec,
    x0,
    T: float,
    dt: float,
    event_tol: float = 1e-9,
    *,
    guard: float = DEFAULT_GUARD,
    store_rows: bool = True,
) -> HybridTrajectory:
    """Integrate the closed loop from ``x(0) = x0``, ``z(0) = 0`` up to ``T``.

    Samples are taken on the uniform grid ``0, dt, 2 dt, ..., T`` plus both
    one-sided values at every event. With ``store_rows=False`` only the
    initial and final states are kept, which is what parameter sweeps need.

    Raises
    ------
    Diverged
        ``||x||`` exceeded ``guard``; the truncated trajectory is attached.
    StepTooCoarse
        Coupled resets kept re-triggering units at a single instant.
    """
    report = validate(plant, ctrl)
    if not report.ok:
        raise ValueError("invalid configuration: " + "; ".join(report.violations))
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not 0 < event_tol <= dt:
        raise ValueError("event_tol must satisfy 0 < event_tol <= dt")
    if not T > 0:
        raise ValueError("T must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (plant.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({plant.dim},)")

    grid = _time_grid(float(T), float(dt))
    z0 = np.zeros(ctrl.n_units)
    out = _kernel.integrate(
        grid, x0, z0, float(event_tol), float(guard),
        store_rows=store_rows, max_cascade=4 * ctrl.n_units + 4, **_flatten(plant, ctrl),
    )
    status, t_end, x_end, z_end, rows_t, rows_x, rows_z, rows_kind, n_rows, ev_t, ev_unit, n_ev = out

    if store_rows:
        t = rows_t[:n_rows].copy()
        x = rows_x[:n_rows].copy()
        z = rows_z[:n_rows].copy()
        kind = rows_kind[:n_rows].copy()
    else:
        t = np.array([0.0, t_end])
        x = np.vstack([x0, x_end])
        z = np.vstack([z0, z_end])
        kind = np.array([_kernel.ROW_GRID, _kernel.ROW_GUARD if status == _kernel.STATUS_DIVERGED
                         else _kernel.ROW_GRID], dtype=np.int8)
    traj = HybridTrajectory(
        t=t, x=x, z=z, xc=auxiliary(x, z, ctrl), kind=kind,
        event_t=ev_t[:n_ev].copy(), event_unit=ev_unit[:n_ev].copy(),
        ctrl=ctrl, plant=plant, diverged=status == _kernel.STATUS_DIVERGED,
        meta=dict(T=float(T), dt=float(dt), event_tol=float(event_tol), x0=x0.tolist()),
    )
    if status == _kernel.STATUS_DIVERGED:
        raise Diverged(f"||x|| exceeded {guard:g} at t = {t_end:.6g}", traj)
    if status == _kernel.STATUS_CASCADE:
        raise StepTooCoarse(f"units kept re-triggering each other at t = {t_end:.6g}")
    return traj


def _integral_factor(rate: float, s: float) -> float:
    """``(exp(rate s) - 1) / rate`` with the ``rate -> 0`` limit ``s``."""
    if abs(rate * s) < 1e-300 or rate == 0.0:
        return s
    return math.expm1(rate * s) / rate


def exact_sim_1d(
    a: float,
    b1: float,
    b2: float,
    theta: float,
    lam: float,
    x0: float,
    T: float,
    *,
    gains: tuple[float, float] = (1.0, 1.0),
    dt: float | None = None,
) -> HybridTrajectory:
    """Piecewise closed-form trajectory of the scalar plant ``dx/dt = a x``.

    Two units with ``g_1 = c_1 [x]_+`` and ``g_2 = c_2 [-x]_+`` and impulses
    ``b1``, ``b2``. Between events the sign of ``x`` is fixed, so exactly one
    unit integrates while the other sits at zero; starting from ``z = 0``
    the active potential is

        z(s) = c |x(t0)| e^{-lam s} (e^{(a + lam) s} - 1) / (a + lam)

    and the next event time solves ``z(s) = theta`` by bracketed root
    finding. ``dt`` adds uniform samples between events.

    Raises
    ------
    NoEvent
        If no unit reaches its threshold on ``[0, T]``. The event-free
        trajectory is attached to the exception.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    c1, c2 = gains
    ctrl = Independent(np.array([[b1, b2]]), theta, lam,
                       RectifiedProjection(np.array([[1.0], [-1.0]]), np.array([c1, c2])))
    rate = a + lam

    def z_active(xs, s):
        c = c1 if xs > 0 else c2
        return c * abs(xs) * math.exp(-lam * s) * _integral_factor(rate, s)

    seg_start, seg_x = [0.0], [float(x0)]
    ev_t, ev_unit = [], []
    t0, xs = 0.0, float(x0)
    while t0 < T and xs != 0.0:
        c = c1 if xs > 0 else c2
        s_max = T - t0
        s_hi = s_max
        if a < 0 < lam:
            # potential peaks where a e^{a s} = -lam e^{-lam s}
            s_peak = math.log(-lam / a) / rate if rate != 0 else 1.0 / lam
            s_hi = min(s_hi, s_peak)
        if c <= 0 or z_active(xs, s_hi) < theta:
            break
        s1 = optimize.brentq(lambda s: z_active(xs, s) - theta, 0.0, s_hi, xtol=1e-15, rtol=1e-14)
        unit = 0 if xs > 0 else 1
        t0 = t0 + s1
        xs = xs * math.exp(a * s1) + (b1 if unit == 0 else b2)
        ev_t.append(t0)
        ev_unit.append(unit)
        seg_start.append(t0)
        seg_x.append(xs)

    def state_at(t, seg):
        s = t - seg_start[seg]
        xs_ = seg_x[seg]
        zz = np.zeros(2)
        if xs_ != 0.0:
            zz[0 if xs_ > 0 else 1] = z_active(xs_, s)
        return xs_ * math.exp(a * s), zz

    rows = []  # (t, x, z, kind)
    grid = _time_grid(T, dt) if dt else np.array([0.0, T])
    ev_iter = 0
    for tg in grid:
        while ev_iter < len(ev_t) and ev_t[ev_iter] <= tg:
            te = ev_t[ev_iter]
            xp, zp = state_at(te, ev_iter)
            rows.append((te, xp, zp, _kernel.ROW_PRE))
            rows.append((te, seg_x[ev_iter + 1], np.zeros(2), _kernel.ROW_POST))
            ev_iter += 1
        seg = ev_iter
        rows.append((tg, *state_at(tg, seg), _kernel.ROW_GRID))

    t = np.array([r[0] for r in rows])
    x = np.array([[r[1]] for r in rows])
    z = np.array([r[2] for r in rows])
    kind = np.array([r[3] for r in rows], dtype=np.int8)
    traj = HybridTrajectory(
        t=t, x=x, z=z, xc=auxiliary(x, z, ctrl), kind=kind,
        event_t=np.array(ev_t, dtype=float), event_unit=np.array(ev_unit, dtype=np.int64),
        ctrl=ctrl, plant=PlantSpec.linear([[a]]),
        meta=dict(T=float(T), x0=[float(x0)], exact=True),
    )
    if not ev_t:
        raise NoEvent("threshold is never reached on [0, T]", traj)
    return traj


def stability_measure(traj: HybridTrajectory) -> float:
    """Finite-horizon growth exponent ``log(|x(T)| / |x(0)|) / T`` of a scalar run.

    ``T`` is the time of the final sample, so truncated (diverged) runs are
    measured over the horizon they actually covered.
    """
    if traj.x.shape[1] != 1:
        raise ValueError("stability measure is defined for scalar plants only")
    x_first = float(traj.x[0, 0])
    x_last = float(traj.x[-1, 0])
    if x_first == 0.0:
        raise ZeroInitial("x(0) = 0")
    horizon = float(traj.t[-1] - traj.t[0])
    if x_last == 0.0:
        return -math.inf
    return math.log(abs(x_last) / abs(x_first)) / horizon


__all__ = [
    "EventRecord",
    "HybridTrajectory",
    "auxiliary",
    "simulate",
    "exact_sim_1d",
    "stability_measure",
]
