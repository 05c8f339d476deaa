"""Reference configurations, bound collection and artifact writers.

Everything the command line does lives here as plain functions so tests
can drive the same code paths without spawning processes.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds, network
from .bounds import BoundReport
from .exceptions import Diverged, NotLinear
from .hybridsim import HybridTrajectory, simulate, stability_measure
from .model import (
    Connected,
    ControllerSpec,
    Independent,
    PlantSpec,
    RectifiedProjection,
    axis_pair_controller,
    derive_linear_gain,
)

WORKERS_ENV = "NEUROIMPULSE_WORKERS"

FIG2_A = 1.0
FIG2_B = 2.5
FIG2_LAMBDAS = (3.0, 1.5, 0.0)
FIG2_X0 = 2.0
FIG2_T = 10.0

FIG3_X0 = 50.5
FIG3_T = 200.0
FIG3_DT = 1e-3
# runs are stopped once |x| grows by this factor; growth that large only
# happens in the unstable half, and the event count to reach 1e12 is prohibitive
FIG3_GUARD_FACTOR = 1e2
FIG3_BAND = 0.25

FIG4_OMEGAS = (0.5, 3.0)
FIG4_LAMBDA = 0.2
FIG4_THETA = 1.0 / 1.5
FIG4_X0 = (4.0, 0.0)
FIG4_T = 20.0

DEFAULT_DT = 1e-4
DEFAULT_EVENT_TOL = 1e-9


def scalar_pair(a: float, b: float, lam: float, b1: float = -1.0, b2: float = 1.0):
    """Scalar plant ``dx/dt = a x`` with two opposing units at threshold ``1 / b``."""
    g = RectifiedProjection(np.array([[1.0], [-1.0]]), np.ones(2))
    return PlantSpec.linear([[a]]), Independent(np.array([[b1, b2]]), 1.0 / b, lam, g)


def fig4_setup(omega: float, lam: float = FIG4_LAMBDA, theta: float = FIG4_THETA):
    return PlantSpec(2, "rotation_scaling", [1.0, omega]), axis_pair_controller(2, theta, lam)


def connected_setup(omega: float = 0.5, lam=FIG4_LAMBDA, gain: float = 1.5):
    B = axis_pair_controller(2, 1.0, 0.0).B
    return PlantSpec(2, "rotation_scaling", [1.0, omega]), Connected(B, lam, gain * np.eye(2))


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def parallel_map(fn, items, n_workers: int | None = None) -> list:
    """Order-preserving map over a process pool (serial for one worker)."""
    items = list(items)
    n_workers = workers() if n_workers is None else n_workers
    if n_workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))


# bounds ---------------------------------------------------------------------

def _equal(v: np.ndarray) -> bool:
    return bool(np.all(v == v[0]))


def all_bounds(plant: PlantSpec, ctrl: ControllerSpec) -> list[BoundReport]:
    """Every envelope the configuration can be checked against, applicable or not."""
    A = plant.matrix
    if A is None:
        return [BoundReport("linear", False, f"drift {plant.drift!r} is nonlinear")]
    if isinstance(ctrl, Connected):
        try:
            zb = network.z_bounds(ctrl.B, ctrl.lambdas, network.compute_null_weight(ctrl.B))
        except ValueError as exc:
            return [BoundReport("connected", False, str(exc))]
        return [network.connected_bound(A, ctrl, zb)]
    try:
        K_g = derive_linear_gain(ctrl)
    except NotLinear as exc:
        return [BoundReport(name, False, f"analogue gain is not linear: {exc}")
                for name in ("thm1", "cor1", "thm2", "thm3", "cor4")]
    out = []
    equal_leak = _equal(ctrl.lambdas)
    if ctrl.dim == 1 and ctrl.n_units == 2:
        if equal_leak:
            a, b, lam = float(A[0, 0]), float(K_g[0, 0]), float(ctrl.lambdas[0])
            out += [bounds.thm1_bound(a, b, lam, ctrl.B), bounds.cor1_bound(a, b, lam, ctrl.B),
                    bounds.thm2_bound(a, b, lam, ctrl.B, ctrl.g)]
        else:
            out += [BoundReport(n, False, "scalar bounds need equal leak constants")
                    for n in ("thm1", "cor1", "thm2")]
    out.append(bounds.thm3_bound(A, K_g, ctrl.B, np.diag(ctrl.lambdas)))
    if equal_leak:
        out.append(bounds.cor4_bound(A, K_g, ctrl.B, float(ctrl.lambdas[0])))
    else:
        out.append(BoundReport("cor4", False, "requires equal leak constants"))
    return out


def trajectory_bound(reports: list[BoundReport], x0_norm: float) -> float:
    """Tightest ``D ||x0|| + C_ub`` among the applicable reports (``inf`` if none apply)."""
    vals = [r.bound_at_zero(x0_norm) for r in reports if r.applicable]
    return min(vals) if vals else math.inf


def envelope_slack(traj: HybridTrajectory, report: BoundReport) -> float:
    """Smallest ``envelope(t) - ||x(t)||`` over all samples (negative means violated)."""
    x0n = float(np.linalg.norm(traj.x[0]))
    norms = np.linalg.norm(traj.x, axis=1)
    return float(np.min(report.envelope(traj.t, x0n) - norms))


def limsup_norm(traj: HybridTrajectory, t_from: float, t_to: float | None = None) -> float:
    t_to = traj.t[-1] if t_to is None else t_to
    mask = (traj.t >= t_from) & (traj.t <= t_to)
    return float(np.max(np.linalg.norm(traj.x[mask], axis=1)))


def summarize(name: str, traj: HybridTrajectory, reports: list[BoundReport] | None = None) -> dict:
    stats = traj.inter_event_stats()
    rec = {
        "scenario": name,
        "settings": traj.meta,
        "diverged": traj.diverged,
        "n_events": traj.n_events,
        "events_per_unit": traj.event_counts().tolist(),
        "inter_event_min": [stats[i][0] for i in range(traj.ctrl.n_units)],
        "inter_event_max": [stats[i][1] for i in range(traj.ctrl.n_units)],
        "final_state": traj.x[-1].tolist(),
    }
    if traj.x.shape[1] == 1 and traj.x[0, 0] != 0.0:
        rec["stability_measure"] = stability_measure(traj)
    if reports is not None:
        rows = []
        for r in reports:
            d = r.as_dict()
            if r.applicable:
                d["min_slack"] = envelope_slack(traj, r)
                d["dominates"] = d["min_slack"] >= -1e-6
            rows.append(d)
        rec["bounds"] = rows
    return rec


# writers --------------------------------------------------------------------

def _write_csv(path: Path, header: list[str], data: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        if data.size:
            np.savetxt(fh, data, fmt="%.17g", delimiter=",", newline="\n")


def write_trajectory(traj: HybridTrajectory, path) -> None:
    K, N = traj.x.shape[1], traj.z.shape[1]
    header = (["t"] + [f"x_{i}" for i in range(K)] + [f"xc_{i}" for i in range(K)]
              + [f"z_{i}" for i in range(N)])
    _write_csv(Path(path), header, np.column_stack([traj.t, traj.x, traj.xc, traj.z]))


def write_events(traj: HybridTrajectory, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("seq,t,unit\n")
        for s, t, u in zip(range(traj.n_events), traj.event_t, traj.event_unit):
            fh.write(f"{s},{t:.17g},{int(u)}\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _tag(v: float) -> str:
    return f"{v:g}"


# experiments ----------------------------------------------------------------

def run_fig2(lams=FIG2_LAMBDAS, *, x0: float = FIG2_X0, T: float = FIG2_T,
             dt: float = DEFAULT_DT, event_tol: float = DEFAULT_EVENT_TOL) -> dict[float, HybridTrajectory]:
    out = {}
    for lam in lams:
        plant, ctrl = scalar_pair(FIG2_A, FIG2_B, lam)
        out[lam] = simulate(plant, ctrl, [x0], T, dt, event_tol)
    return out


def fig2(outdir, **kw) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    runs = run_fig2(**kw)
    summary = {}
    t_grid = None
    curves = {}
    for lam, traj in runs.items():
        tag = _tag(lam)
        write_trajectory(traj, outdir / f"trajectory_lam{tag}.csv")
        write_events(traj, outdir / f"events_lam{tag}.csv")
        reports = all_bounds(traj.plant, traj.ctrl)
        summary[f"lam{tag}"] = summarize(f"fig2_lam{tag}", traj, reports)
        x = traj.x[:, 0]
        after = x[np.argmax(np.sign(x) != np.sign(x[0])):] if np.any(np.sign(x) != np.sign(x[0])) else x[:0]
        summary[f"lam{tag}"]["min_x"] = float(x.min())
        summary[f"lam{tag}"]["sign_changes_after_first"] = max(
            0, int(np.count_nonzero(np.diff(np.sign(after[after != 0])))))
        if t_grid is None:
            t_grid = traj.t[traj.grid_index]
        x0n = abs(float(traj.x[0, 0]))
        for r in reports:
            if r.theorem in ("thm1", "thm2"):
                curves[f"{r.theorem}_lam{tag}"] = (r.envelope(t_grid, x0n) if r.applicable
                                                   else np.full(t_grid.size, np.nan))
    names = sorted(curves)
    _write_csv(outdir / "bounds.csv", ["t"] + names, np.column_stack([t_grid] + [curves[n] for n in names]))
    write_json(summary, outdir / "summary.json")
    return summary


@dataclass(frozen=True)
class Fig3Cell:
    i: int
    j: int
    a: float
    b: float
    lam: float
    C: float
    diverged: bool
    band: bool
    n_events: int


def fig3_axes(n: int = 21) -> tuple[np.ndarray, np.ndarray]:
    """``a`` on ``[0, 5]`` inclusive, ``b`` on ``(0, 5]`` excluding zero."""
    if n < 2:
        raise ValueError("grid resolution must be at least 2")
    return np.linspace(0.0, 5.0, n), 5.0 * np.arange(1, n + 1) / n


def fig3_cell(args) -> Fig3Cell:
    i, j, a, b, lam, x0, T, dt = args
    plant, ctrl = scalar_pair(a, b, lam)
    try:
        traj = simulate(plant, ctrl, [x0], T, dt, DEFAULT_EVENT_TOL,
                        guard=FIG3_GUARD_FACTOR * abs(x0), store_rows=False)
    except Diverged as exc:
        traj = exc.trajectory
    return Fig3Cell(i, j, a, b, lam, stability_measure(traj), traj.diverged,
                    abs(a - b) < FIG3_BAND, traj.n_events)


def run_fig3(n: int = 21, lam: float = 0.0, *, x0: float = FIG3_X0, T: float = FIG3_T,
             dt: float = FIG3_DT, n_workers: int | None = None) -> list[Fig3Cell]:
    a_ax, b_ax = fig3_axes(n)
    jobs = [(i, j, float(a), float(b), lam, x0, T, dt)
            for i, a in enumerate(a_ax) for j, b in enumerate(b_ax)]
    return parallel_map(fig3_cell, jobs, n_workers)


def fig3(outdir, n: int = 21, lam: float = 0.0, **kw) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cells = run_fig3(n, lam, **kw)
    with open(outdir / "heatmap.csv", "w", newline="\n") as fh:
        fh.write("a,b,lambda,C,diverged,band\n")
        for c in cells:
            fh.write(f"{c.a:.17g},{c.b:.17g},{c.lam:.17g},{c.C:.17g},{int(c.diverged)},{int(c.band)}\n")
    classified = [c for c in cells if not c.band]
    mismatched = [(c.a, c.b) for c in classified if np.sign(c.C) != np.sign(c.a - c.b)]
    summary = {"grid": n, "lambda": lam, "cells": len(cells), "classified": len(classified),
               "diverged": sum(c.diverged for c in cells), "sign_mismatches": mismatched,
               "guard_factor": FIG3_GUARD_FACTOR}
    write_json(summary, outdir / "summary.json")
    return summary


def run_fig4(omegas=FIG4_OMEGAS, *, x0=FIG4_X0, T: float = FIG4_T, dt: float = DEFAULT_DT,
             event_tol: float = DEFAULT_EVENT_TOL) -> dict[float, HybridTrajectory]:
    out = {}
    for om in omegas:
        plant, ctrl = fig4_setup(om)
        out[om] = simulate(plant, ctrl, list(x0), T, dt, event_tol)
    return out


def fig4(outdir, **kw) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for om, traj in run_fig4(**kw).items():
        tag = _tag(om)
        write_trajectory(traj, outdir / f"trajectory_omega{tag}.csv")
        write_events(traj, outdir / f"events_omega{tag}.csv")
        reports = all_bounds(traj.plant, traj.ctrl)
        rec = summarize(f"fig4_omega{tag}", traj, reports)
        cor4 = next(r for r in reports if r.theorem == "cor4")
        observed = limsup_norm(traj, traj.meta["T"] / 2)
        rec.update(ultimate_bound=cor4.ultimate_bound, observed_limsup=observed,
                   conservatism=cor4.ultimate_bound / observed)
        summary[f"omega{tag}"] = rec
    write_json(summary, outdir / "summary.json")
    return summary


def run_connected(omega: float = 0.5, lam=FIG4_LAMBDA, *, x0=FIG4_X0, T: float = FIG4_T,
                  dt: float = DEFAULT_DT, event_tol: float = DEFAULT_EVENT_TOL):
    plant, ctrl = connected_setup(omega, lam)
    traj = simulate(plant, ctrl, list(x0), T, dt, event_tol)
    w = network.compute_null_weight(ctrl.B)
    zb = network.z_bounds(ctrl.B, ctrl.lambdas, w)
    return traj, w, zb, network.monitor_connected(traj, w, zb)


def connected_demo(outdir, **kw) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    traj, w, zb, mon = run_connected(**kw)
    write_trajectory(traj, outdir / "trajectory.csv")
    write_events(traj, outdir / "events.csv")
    reports = all_bounds(traj.plant, traj.ctrl)
    rec = summarize("connected_demo", traj, reports)
    rec.update(null_weight=w.w, null_residual=w.residual, z_lower=zb.lower, z_upper=zb.upper,
               leak_regime=zb.regime, monitor=mon.as_dict(),
               observed_limsup=limsup_norm(traj, traj.meta["T"] / 2))
    write_json(rec, outdir / "summary.json")
    return rec
