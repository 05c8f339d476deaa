import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from neuroimpulse import cli
from neuroimpulse import scenario as scn

FIG2 = {
    "name": "fig2_lam3",
    "plant": {"dim": 1, "drift": "linear", "params": [1.0]},
    "controller": {
        "topology": "independent",
        "B": [[-1, 1]],
        "thetas": [0.4, 0.4],
        "lambdas": [3, 3],
        "input_fn": {"directions": [[1], [-1]], "scales": [1, 1]},
    },
    "sim": {"x0": [2.0], "T": 2.0, "dt": 1e-3, "event_tol": 1e-9},
}


def write(tmp_path, data, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=2) if not isinstance(data, str) else data)
    return p


def with_(base, path, value):
    data = json.loads(json.dumps(base))
    node = data
    for k in path[:-1]:
        node = node[k]
    node[path[-1]] = value
    return data


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_scenario_round_trip(tmp_path):
    sc = scn.loads(json.dumps(FIG2))
    again = scn.loads(scn.dumps(sc))
    assert scn.to_dict(again) == scn.to_dict(sc)
    np.testing.assert_array_equal(again.controller.B, [[-1, 1]])


def test_flat_row_major_matrix():
    sc = scn.loads(json.dumps(with_(FIG2, ["controller", "B"], [-1, 1])))
    assert sc.controller.B.shape == (1, 2)


def test_connected_scenario():
    data = {
        "plant": {"dim": 2, "drift": "rotation_scaling", "params": [1.0, 0.5]},
        "controller": {"topology": "connected", "B": [-1, 1, 0, 0, 0, 0, -1, 1],
                       "lambdas": [0.2] * 4, "gain": [[1.5, 0], [0, 1.5]]},
        "sim": {"x0": [4, 0], "T": 1, "dt": 1e-3},
    }
    sc = scn.loads(json.dumps(data))
    assert sc.controller.topology == "connected" and sc.sim.event_tol == 1e-9


def test_simulate_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["simulate", str(write(tmp_path, FIG2)), "--outdir", str(out)]) == cli.EXIT_OK
    rows = read_csv(out / "trajectory.csv")
    events = read_csv(out / "events.csv")
    assert rows[0] == ["t", "x_0", "xc_0", "z_0", "z_1"]
    assert events[0] == ["seq", "t", "unit"]
    n_events = len(events) - 1
    assert n_events > 0
    assert len(rows) - 1 == 2001 + 2 * n_events
    summary = json.loads((out / "summary.json").read_text())
    assert summary["stability_measure"] < 0
    assert all("reason" in b for b in summary["bounds"])
    assert b"\r\n" not in (out / "trajectory.csv").read_bytes()


def test_simulate_from_rest(tmp_path):
    out = tmp_path / "out"
    p = write(tmp_path, with_(FIG2, ["sim", "x0"], [0.0]))
    assert cli.main(["simulate", str(p), "--outdir", str(out)]) == 0
    assert read_csv(out / "events.csv") == [["seq", "t", "unit"]]
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    assert not data[:, 1:].any()


def test_simulate_is_byte_deterministic(tmp_path):
    p = write(tmp_path, FIG2)
    cli.main(["simulate", str(p), "--outdir", str(tmp_path / "a")])
    cli.main(["simulate", str(p), "--outdir", str(tmp_path / "b")])
    for name in ("trajectory.csv", "events.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_malformed_json_reports_line(tmp_path, capsys):
    p = write(tmp_path, '{\n  "plant": {\n    "dim": 1,\n  }\n}\n')
    assert cli.main(["simulate", str(p)]) == cli.EXIT_INPUT
    assert "line 4" in capsys.readouterr().err


def test_invalid_threshold_reports_line(tmp_path, capsys):
    p = write(tmp_path, with_(FIG2, ["controller", "thetas"], [0.0, 0.4]))
    line = next(i for i, text in enumerate(p.read_text().splitlines(), 1) if '"thetas"' in text)
    assert cli.main(["simulate", str(p)]) == cli.EXIT_INPUT
    err = capsys.readouterr().err
    assert "threshold must be positive" in err and f"line {line}:" in err


@pytest.mark.parametrize("path, value", [
    (["sim", "dt"], -1.0),
    (["sim", "x0"], [1.0, 2.0]),
    (["plant", "drift"], "unknown"),
    (["controller", "topology"], "mesh"),
    (["controller", "B"], [1, 2, 3]),
])
def test_invalid_fields_exit_2(tmp_path, path, value):
    assert cli.main(["simulate", str(write(tmp_path, with_(FIG2, path, value)))]) == cli.EXIT_INPUT


def test_missing_file_exit_2(tmp_path):
    assert cli.main(["simulate", str(tmp_path / "nope.json")]) == cli.EXIT_INPUT


def test_divergence_exit_3(tmp_path):
    data = with_(FIG2, ["plant", "params"], [5.0])
    data = with_(data, ["controller", "input_fn", "scales"], [0, 0])
    data = with_(data, ["sim", "T"], 10.0)
    out = tmp_path / "out"
    assert cli.main(["simulate", str(write(tmp_path, data)), "--outdir", str(out)]) == cli.EXIT_DIVERGED
    assert json.loads((out / "summary.json").read_text())["diverged"] is True


def test_bounds_command(tmp_path, capsys):
    assert cli.main(["bounds", str(write(tmp_path, FIG2))]) == 0
    reports = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    names = {r["theorem"]: r for r in reports}
    assert names["thm1"]["applicable"] and names["thm1"]["ultimate_bound"] == 2.0
    assert not names["thm2"]["applicable"]


def test_fig3_small_grid_worker_independent(tmp_path, monkeypatch):
    outs = []
    for n in ("1", "2"):
        monkeypatch.setenv("NEUROIMPULSE_WORKERS", n)
        out = tmp_path / f"w{n}"
        assert cli.main(["fig3", "--grid", "3", "--lambda", "0", "--outdir", str(out)]) == 0
        outs.append((out / "heatmap.csv").read_bytes())
    assert outs[0] == outs[1]
    rows = read_csv(tmp_path / "w1" / "heatmap.csv")
    assert rows[0] == ["a", "b", "lambda", "C", "diverged", "band"] and len(rows) == 10


def test_fig3_rejects_tiny_grid(tmp_path):
    assert cli.main(["fig3", "--grid", "1", "--outdir", str(tmp_path)]) == cli.EXIT_INPUT


def test_fig2_command(tmp_path):
    assert cli.main(["fig2", "--outdir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["lam3"]["min_x"] > 0
    assert summary["lam0"]["sign_changes_after_first"] >= 3
    for rec in summary.values():
        thm1 = next(b for b in rec["bounds"] if b["theorem"] == "thm1")
        assert thm1["dominates"]
    header = read_csv(tmp_path / "bounds.csv")[0]
    assert header[0] == "t" and "thm1_lam3" in header and "thm2_lam0" in header


def test_console_script_entry(tmp_path):
    p = write(tmp_path, FIG2)
    res = subprocess.run([sys.executable, "-m", "neuroimpulse.cli", "bounds", str(p)],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "thm3" in res.stdout
