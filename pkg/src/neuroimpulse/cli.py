"""Command-line entry point.

Exit status: 0 on success, 2 for unreadable or invalid input, 3 when a
simulation diverged (its truncated trajectory is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from . import scenario as scn
from .exceptions import Diverged, NeuroImpulseError
from .hybridsim import simulate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGED = 3


def _outdir(args, default: str) -> Path:
    return Path(args.outdir if args.outdir else default)


def cmd_simulate(args) -> int:
    sc = scn.load(args.file)
    out = _outdir(args, sc.outputs or f"{sc.name}_out")
    out.mkdir(parents=True, exist_ok=True)
    s = sc.sim
    status = EXIT_OK
    try:
        traj = simulate(sc.plant, sc.controller, s.x0, s.T, s.dt, s.event_tol)
    except Diverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        traj, status = exc.trajectory, EXIT_DIVERGED
    ex.write_trajectory(traj, out / "trajectory.csv")
    ex.write_events(traj, out / "events.csv")
    summary = ex.summarize(sc.name, traj, ex.all_bounds(sc.plant, sc.controller))
    ex.write_json(summary, out / "summary.json")
    print(f"{sc.name}: {traj.n_events} events, x(T) = {traj.x[-1].tolist()} -> {out}")
    return status


def cmd_bounds(args) -> int:
    sc = scn.load(args.file)
    for r in ex.all_bounds(sc.plant, sc.controller):
        print(json.dumps(ex._jsonable(r.as_dict()), sort_keys=True))
    return EXIT_OK


def cmd_fig2(args) -> int:
    summary = ex.fig2(_outdir(args, "fig2_out"))
    for key, rec in summary.items():
        flags = {b["theorem"]: b["dominates"] for b in rec["bounds"] if b["applicable"]}
        print(f"{key}: {rec['n_events']} events, C = {rec['stability_measure']:.4g}, dominance {flags}")
    return EXIT_OK


def cmd_fig3(args) -> int:
    s = ex.fig3(_outdir(args, "fig3_out"), args.grid, args.lam)
    print(f"lambda = {s['lambda']:g}: {s['cells']} cells, {s['diverged']} diverged, "
          f"{len(s['sign_mismatches'])} sign mismatches off the diagonal band")
    return EXIT_OK


def cmd_fig4(args) -> int:
    summary = ex.fig4(_outdir(args, "fig4_out"))
    for key, rec in summary.items():
        print(f"{key}: ultimate bound {rec['ultimate_bound']:.6g}, observed {rec['observed_limsup']:.6g}, "
              f"ratio {rec['conservatism']:.4g}")
    return EXIT_OK


def cmd_connected(args) -> int:
    rec = ex.connected_demo(_outdir(args, "connected_out"))
    m = rec["monitor"]
    print(f"connected: {rec['n_events']} events, max |w.z| = {m['max_abs_wz']:.3g}, "
          f"bound violations {m['max_lower_violation']:.3g}/{m['max_upper_violation']:.3g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="neuroimpulse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("file")
    s.add_argument("--outdir")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("bounds", help="print every bound report for a scenario")
    s.add_argument("file")
    s.set_defaults(func=cmd_bounds)

    for name, fn, hlp in (("fig2", cmd_fig2, "scalar plant at three leak values"),
                          ("fig4", cmd_fig4, "rotating planar plant at two frequencies"),
                          ("connected-demo", cmd_connected, "planar plant under coupled units")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--outdir")
        s.set_defaults(func=fn)

    s = sub.add_parser("fig3", help="stability-measure heatmap over (a, b)")
    s.add_argument("--grid", type=int, default=21)
    s.add_argument("--lambda", dest="lam", type=float, choices=(0.0, 3.0), default=0.0)
    s.add_argument("--outdir")
    s.set_defaults(func=cmd_fig3)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (scn.ScenarioError, NeuroImpulseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
