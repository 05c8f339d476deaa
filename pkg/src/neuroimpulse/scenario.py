"""JSON scenario files.

A scenario holds one plant, one controller and the simulation settings::

    {
      "plant": {"dim": 1, "drift": "linear", "params": [1.0]},
      "controller": {
        "topology": "independent",
        "B": [[-1, 1]],
        "thetas": [0.4, 0.4],
        "lambdas": [3, 3],
        "input_fn": {"directions": [[1], [-1]], "scales": [1, 1]}
      },
      "sim": {"x0": [2.0], "T": 10, "dt": 1e-4, "event_tol": 1e-9}
    }

``B`` may be nested rows or a flat row-major list. Connected controllers
give ``"gain"`` (the ``K x K`` matrix ``K_g``) instead of ``thetas`` and
``input_fn``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Connected, ControllerSpec, Independent, PlantSpec, RectifiedProjection, validate


class ScenarioError(ValueError):
    """Malformed or invalid scenario; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class SimSettings:
    x0: np.ndarray
    T: float
    dt: float
    event_tol: float = 1e-9


@dataclass(frozen=True, eq=False)
class Scenario:
    plant: PlantSpec
    controller: ControllerSpec
    sim: SimSettings
    name: str = "scenario"
    outputs: str | None = None
    source: dict = field(default_factory=dict, repr=False)


# first word of a validation message -> scenario key it concerns
_VIOLATION_KEYS = (
    ("dimension", "B"),
    ("cubic", "params"),
    ("leak", "lambdas"),
    ("threshold must", "thetas"),
    ("scales", "scales"),
    ("column", "B"),
    ("steering", "B"),
)


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def fail(self, key: str, message: str):
        raise ScenarioError(message, _line_of(self.text, key))

    def get(self, obj: dict, key: str, section: str, default=...):
        if not isinstance(obj, dict):
            self.fail(section, f"'{section}' must be an object")
        if key not in obj:
            if default is not ...:
                return default
            self.fail(section, f"'{section}' is missing '{key}'")
        return obj[key]

    def array(self, value, key: str, ndim: int | None = None) -> np.ndarray:
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            self.fail(key, f"'{key}' must be numeric")
        if ndim is not None and arr.ndim > ndim:
            self.fail(key, f"'{key}' has too many dimensions")
        if not np.all(np.isfinite(arr)):
            self.fail(key, f"'{key}' contains non-finite values")
        return arr

    def number(self, value, key: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(key, f"'{key}' must be a number")
        return float(value)


def _matrix(r: _Reader, value, key: str, rows: int) -> np.ndarray:
    arr = r.array(value, key, ndim=2)
    if arr.ndim <= 1:
        if arr.size % rows:
            r.fail(key, f"flat '{key}' of length {arr.size} does not split into {rows} rows")
        arr = arr.reshape(rows, -1)
    if arr.shape[0] != rows:
        r.fail(key, f"'{key}' has {arr.shape[0]} rows, expected {rows}")
    return arr


def _build(data: dict, text: str, name: str) -> Scenario:
    r = _Reader(text)
    if not isinstance(data, dict):
        raise ScenarioError("top level must be an object", 1)
    pdat = r.get(data, "plant", "top level")
    dim = r.get(pdat, "dim", "plant")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        r.fail("dim", "'dim' must be a positive integer")
    drift = r.get(pdat, "drift", "plant", "linear")
    params = r.array(r.get(pdat, "params", "plant"), "params")
    try:
        plant = PlantSpec(dim, drift, params)
    except ValueError as exc:
        r.fail("drift", str(exc))

    cdat = r.get(data, "controller", "top level")
    topo = r.get(cdat, "topology", "controller")
    B = _matrix(r, r.get(cdat, "B", "controller"), "B", dim)
    lambdas = r.array(r.get(cdat, "lambdas", "controller"), "lambdas", ndim=1)
    try:
        if topo == "independent":
            thetas = r.array(r.get(cdat, "thetas", "controller"), "thetas", ndim=1)
            gdat = r.get(cdat, "input_fn", "controller")
            V = _matrix(r, r.get(gdat, "directions", "input_fn"), "directions", B.shape[1])
            scales = r.array(r.get(gdat, "scales", "input_fn"), "scales", ndim=1)
            ctrl = Independent(B, thetas, lambdas, RectifiedProjection(V, scales))
        elif topo == "connected":
            gain = _matrix(r, r.get(cdat, "gain", "controller"), "gain", dim)
            ctrl = Connected(B, lambdas, gain)
        else:
            r.fail("topology", f"unknown topology {topo!r}; use 'independent' or 'connected'")
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        r.fail("controller", str(exc))

    report = validate(plant, ctrl)
    if not report.ok:
        first = report.violations[0]
        key = next((k for word, k in _VIOLATION_KEYS if word in first), "controller")
        r.fail(key, "; ".join(report.violations))

    sdat = r.get(data, "sim", "top level")
    x0 = np.atleast_1d(r.array(r.get(sdat, "x0", "sim"), "x0", ndim=1))
    if x0.size != dim:
        r.fail("x0", f"'x0' has {x0.size} entries, expected {dim}")
    T = r.number(r.get(sdat, "T", "sim"), "T")
    dt = r.number(r.get(sdat, "dt", "sim"), "dt")
    tol = r.number(r.get(sdat, "event_tol", "sim", 1e-9), "event_tol")
    if not T > 0:
        r.fail("T", "'T' must be positive")
    if not dt > 0:
        r.fail("dt", "'dt' must be positive")
    if not 0 < tol <= dt:
        r.fail("event_tol", "'event_tol' must satisfy 0 < event_tol <= dt")
    return Scenario(plant, ctrl, SimSettings(x0, T, dt, tol),
                    name=str(data.get("name", name)), outputs=data.get("outputs"), source=data)


def loads(text: str, name: str = "scenario") -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, exc.lineno) from None
    return _build(data, text, name)


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, name=path.stem)


def to_dict(sc: Scenario) -> dict:
    p, c, s = sc.plant, sc.controller, sc.sim
    ctrl: dict = {"topology": c.topology, "B": c.B.tolist(), "lambdas": c.lambdas.tolist()}
    if isinstance(c, Independent):
        ctrl["thetas"] = c.thetas.tolist()
        ctrl["input_fn"] = {"directions": c.g.directions.tolist(), "scales": c.g.scales.tolist()}
    else:
        ctrl["gain"] = c.gain.tolist()
    out = {
        "name": sc.name,
        "plant": {"dim": p.dim, "drift": p.drift, "params": p.params.tolist()},
        "controller": ctrl,
        "sim": {"x0": s.x0.tolist(), "T": s.T, "dt": s.dt, "event_tol": s.event_tol},
    }
    if sc.outputs is not None:
        out["outputs"] = sc.outputs
    return out


def dumps(sc: Scenario) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(to_dict(sc), indent=2) + "\n"


def dump(sc: Scenario, path) -> None:
    Path(path).write_text(dumps(sc))
