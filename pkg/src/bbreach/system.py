"""System specifications: dynamics, regions, grid and solver settings.

Spec files are JSON documents (conventionally ``*.spec``)::

    {
      "name": "B2",
      "dimension": 2,
      "action_dimension": 1,
      "dynamics": ["x2 - x1^3", "a"],
      "delta": 0.1,
      "horizon": 30,
      "domain": {"lower": [-1.5, -1.5], "upper": [1.5, 1.5]},
      "granularity": [0.1, 0.1],
      "initial": [[0.7, 0.9], [0.7, 0.9]],
      "goal": [[-0.3, 0.1], [-0.35, 0.5]],
      "unsafe": [[[0.12, 0.42], [0.1, 0.6]]],
      "aggregation_threshold": [0.05, 0.05],
      "solver": {"order": 5},
      "partitions": 1,
      "action_bounds": [[-2, 2]],
      "synth": {"iterations": 40, "seed": 7}
    }

A ``null`` interval inside a region leaves that dimension unconstrained.
``dynamics`` may be ``null`` for benchmarks whose equations must be supplied
by the user; such specs load but cannot be analysed.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .expr import Dynamics, ParseError
from .flow import SolverParams
from .grid import AbstractionGrid
from .interval import Interval, IntervalBox, IntervalError

UNBOUNDED = Interval(-sys.float_info.max, sys.float_info.max)


class SpecError(ValueError):
    """Invalid spec document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SystemSpec:
    name: str
    dynamics: Dynamics | None
    delta: float
    horizon: int
    grid: AbstractionGrid
    initial: IntervalBox
    goal: IntervalBox
    unsafe: tuple[IntervalBox, ...]
    threshold: tuple[float, ...]
    solver: SolverParams = SolverParams()
    partitions: int = 1
    action_dim: int = 1
    action_bounds: tuple[tuple[float, float], ...] | None = None
    synth: Mapping[str, Any] = field(default_factory=dict)
    source: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def require_dynamics(self) -> Dynamics:
        if self.dynamics is None:
            raise SpecError("dynamics", f"spec {self.name!r} has no dynamics; fill in the right-hand sides")
        return self.dynamics

    def with_(self, **changes) -> "SystemSpec":
        from dataclasses import replace
        return replace(self, **changes)

    def digest(self) -> str:
        text = json.dumps(self.source, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _num(doc: Mapping, key: str, path: str, kind=float):
    if key not in doc:
        raise SpecError(path + key, "missing field")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(path + key, f"expected a number, got {v!r}")
    if kind is int and v != int(v):
        raise SpecError(path + key, f"expected an integer, got {v!r}")
    return kind(v)


def _vector(v: Any, path: str, n: int | None = None) -> tuple[float, ...]:
    if not isinstance(v, Sequence) or isinstance(v, str):
        raise SpecError(path, f"expected a list of numbers, got {v!r}")
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise SpecError(path, "expected a list of numbers")
    if n is not None and len(v) != n:
        raise SpecError(path, f"expected {n} entries, got {len(v)}")
    return tuple(float(x) for x in v)


def _box(v: Any, path: str, n: int) -> IntervalBox:
    if not isinstance(v, Sequence) or isinstance(v, str) or len(v) != n:
        raise SpecError(path, f"expected {n} intervals")
    dims = []
    for i, item in enumerate(v):
        if item is None:
            dims.append(UNBOUNDED)
            continue
        lo, hi = _vector(item, f"{path}[{i}]", 2)
        try:
            dims.append(Interval.make(lo, hi))
        except IntervalError as e:
            raise SpecError(f"{path}[{i}]", str(e)) from None
    return IntervalBox(dims)


def load_spec(document: Mapping | str) -> SystemSpec:
    """Validate a spec document (parsed mapping or JSON text)."""
    doc = json.loads(document) if isinstance(document, str) else document
    if not isinstance(doc, Mapping):
        raise SpecError("$", "spec document must be an object")
    n = _num(doc, "dimension", "", int)
    if n < 1:
        raise SpecError("dimension", "must be >= 1")
    m = int(_num(doc, "action_dimension", "", int)) if "action_dimension" in doc else 1
    name = str(doc.get("name", "unnamed"))

    dyn = None
    if doc.get("dynamics") is not None:
        texts = doc["dynamics"]
        if not isinstance(texts, Sequence) or isinstance(texts, str) or len(texts) != n:
            raise SpecError("dynamics", f"expected {n} expressions")
        try:
            dyn = Dynamics.parse([str(t) for t in texts], m)
        except ParseError as e:
            raise SpecError("dynamics", str(e)) from None
    elif "dynamics" not in doc:
        raise SpecError("dynamics", "missing field (use null for a placeholder)")

    delta = _num(doc, "delta", "")
    if not delta > 0:
        raise SpecError("delta", "must be > 0")
    horizon = _num(doc, "horizon", "", int)
    if horizon < 0:
        raise SpecError("horizon", "must be >= 0")

    if "domain" not in doc or not isinstance(doc["domain"], Mapping):
        raise SpecError("domain", "missing field")
    lower = _vector(doc["domain"].get("lower"), "domain.lower", n)
    upper = _vector(doc["domain"].get("upper"), "domain.upper", n)
    if "granularity" not in doc:
        raise SpecError("granularity", "missing field")
    gran = _vector(doc["granularity"], "granularity", n)
    try:
        grid = AbstractionGrid(lower, upper, gran)
    except IntervalError as e:
        raise SpecError("granularity" if "granularity" in str(e) else "domain", str(e)) from None

    for key in ("initial", "goal"):
        if key not in doc:
            raise SpecError(key, "missing field")
    initial = _box(doc["initial"], "initial", n)
    if any(iv == UNBOUNDED for iv in initial):
        raise SpecError("initial", "every dimension must be bounded")
    if not initial.subset(grid.domain()):
        raise SpecError("initial", "initial region must lie inside the domain")
    goal = _box(doc["goal"], "goal", n)
    unsafe = tuple(_box(u, f"unsafe[{i}]", n) for i, u in enumerate(doc.get("unsafe", [])))

    threshold = _vector(doc.get("aggregation_threshold", [0.0] * n), "aggregation_threshold", n)
    if any(v < 0 for v in threshold):
        raise SpecError("aggregation_threshold", "entries must be >= 0")

    solver_doc = doc.get("solver", {})
    if not isinstance(solver_doc, Mapping):
        raise SpecError("solver", "expected an object")
    known = set(SolverParams().to_dict())
    extra = set(solver_doc) - known
    if extra:
        raise SpecError(f"solver.{sorted(extra)[0]}", "unknown solver parameter")
    try:
        solver = SolverParams(**solver_doc)
    except (TypeError, ValueError) as e:
        raise SpecError("solver", str(e)) from None

    partitions = _num(doc, "partitions", "", int) if "partitions" in doc else 1
    if partitions < 1:
        raise SpecError("partitions", "must be >= 1")

    bounds = None
    if doc.get("action_bounds") is not None:
        ab = doc["action_bounds"]
        if not isinstance(ab, Sequence) or len(ab) != m:
            raise SpecError("action_bounds", f"expected {m} [lo, hi] pairs")
        bounds = tuple(_vector(b, f"action_bounds[{i}]", 2) for i, b in enumerate(ab))
        if any(lo > hi for lo, hi in bounds):
            raise SpecError("action_bounds", "lower bound exceeds upper bound")

    synth = doc.get("synth", {})
    if not isinstance(synth, Mapping):
        raise SpecError("synth", "expected an object")

    return SystemSpec(
        name=name, dynamics=dyn, delta=delta, horizon=horizon, grid=grid,
        initial=initial, goal=goal, unsafe=unsafe, threshold=threshold,
        solver=solver, partitions=partitions, action_dim=m, action_bounds=bounds,
        synth=dict(synth), source=json.loads(json.dumps(doc)),
    )


def read_spec(path) -> SystemSpec:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SpecError("$", f"invalid JSON: {e}") from None
    return load_spec(doc)
