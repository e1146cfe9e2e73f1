"""Black-box controllers that are constant on every abstraction cell.

Two representations share one file schema (JSON):

* ``ann``: an MLP whose input is the abstraction layer output
  ``(l1, u1, ..., ln, un)`` of the current state.
* ``table``: an explicit cell -> action map with a default action.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .grid import AbstractionGrid, CellId
from .interval import IntervalBox

ACTIVATIONS = {
    "tanh": np.tanh,
    "relu": lambda z: np.maximum(z, 0.0),
    "identity": lambda z: z,
}
HIDDEN_ACTIVATIONS = ("tanh", "relu")
OUTPUT_ACTIVATIONS = ("tanh", "identity")


class PolicyError(ValueError):
    pass


class Policy:
    """Interface shared by :class:`AnnPolicy` and :class:`TablePolicy`."""

    grid: AbstractionGrid

    @property
    def action_dim(self) -> int:
        raise NotImplementedError

    def action(self, s: Sequence[float]) -> tuple[float, ...]:
        return self.cell_action(self.grid.cell_of(s))

    def cell_action(self, cell: CellId) -> tuple[float, ...]:
        raise NotImplementedError

    def action_for_cell(self, piece: IntervalBox) -> tuple[float, ...]:
        """Action on a segmented piece, queried at its midpoint."""
        return self.action(piece.midpoint)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]


@dataclass(eq=False)
class AnnPolicy(Policy):
    grid: AbstractionGrid
    layers: list[tuple[np.ndarray, np.ndarray]]
    activation: str = "tanh"
    output_activation: str = "tanh"
    action_scale: tuple[float, ...] = (1.0,)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.activation not in HIDDEN_ACTIVATIONS:
            raise PolicyError(f"activation: unknown hidden activation {self.activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise PolicyError(f"output_activation: unknown activation {self.output_activation!r}")
        if not self.layers:
            raise PolicyError("layers: at least one layer is required")
        layers = []
        width = 2 * self.grid.dim
        for k, (w, b) in enumerate(self.layers):
            w = np.array(w, dtype=np.float64, ndmin=2)
            b = np.array(b, dtype=np.float64, ndmin=1)
            if w.shape[1] != width:
                raise PolicyError(f"layers[{k}].weights: expected {width} columns, got {w.shape[1]}")
            if b.shape != (w.shape[0],):
                raise PolicyError(f"layers[{k}].bias: expected length {w.shape[0]}, got {b.shape[0]}")
            layers.append((w, b))
            width = w.shape[0]
        self.layers = layers
        self.action_scale = tuple(float(v) for v in self.action_scale)
        if len(self.action_scale) != width:
            raise PolicyError(f"action_scale: expected length {width}, got {len(self.action_scale)}")

    @property
    def action_dim(self) -> int:
        return len(self.action_scale)

    def forward(self, features: Sequence[float]) -> tuple[float, ...]:
        """Dense layers only; ``features`` is the abstraction layer output."""
        z = np.asarray(features, dtype=np.float64)
        hidden = ACTIVATIONS[self.activation]
        for w, b in self.layers[:-1]:
            z = hidden(w @ z + b)
        w, b = self.layers[-1]
        z = ACTIVATIONS[self.output_activation](w @ z + b)
        return tuple(float(v) for v in z * np.asarray(self.action_scale))

    def cell_action(self, cell: CellId) -> tuple[float, ...]:
        a = self._cache.get(cell)
        if a is None:
            box = self.grid.cell_box(cell)
            a = self.forward(box.flat())
            self._cache[cell] = a
        return a

    def to_dict(self) -> dict:
        return {
            "type": "ann",
            "grid": self.grid.to_dict(),
            "layers": [{"weights": w.tolist(), "bias": b.tolist()} for w, b in self.layers],
            "activation": self.activation,
            "output_activation": self.output_activation,
            "action_scale": list(self.action_scale),
        }


@dataclass(eq=False)
class TablePolicy(Policy):
    grid: AbstractionGrid
    actions: Mapping[CellId, Sequence[float]]
    default_action: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        self.default_action = tuple(float(v) for v in self.default_action)
        m = len(self.default_action)
        acts = {}
        for cell, a in self.actions.items():
            cell = tuple(int(c) for c in cell)
            if len(cell) != self.grid.dim:
                raise PolicyError(f"actions[{cell}]: cell index has wrong dimension")
            a = tuple(float(v) for v in a)
            if len(a) != m:
                raise PolicyError(f"actions[{cell}]: expected {m} action components, got {len(a)}")
            acts[cell] = a
        self.actions = acts

    @property
    def action_dim(self) -> int:
        return len(self.default_action)

    def cell_action(self, cell: CellId) -> tuple[float, ...]:
        return self.actions.get(cell, self.default_action)

    def to_dict(self) -> dict:
        return {
            "type": "table",
            "grid": self.grid.to_dict(),
            "actions": {",".join(map(str, c)): list(self.actions[c]) for c in sorted(self.actions)},
            "default_action": list(self.default_action),
        }


def _grid(doc: Mapping) -> AbstractionGrid:
    try:
        g = doc["grid"]
        return AbstractionGrid(tuple(g["lower"]), tuple(g["upper"]), tuple(g["granularity"]))
    except KeyError as e:
        raise PolicyError(f"grid: missing field {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise PolicyError(f"grid: {e}") from None


def load_policy(document: Mapping | str) -> Policy:
    """Build a policy from a parsed document or its JSON text."""
    doc = json.loads(document) if isinstance(document, str) else document
    if not isinstance(doc, Mapping):
        raise PolicyError("policy document must be an object")
    kind = doc.get("type")
    grid = _grid(doc)
    if kind == "ann":
        try:
            layers = [(l["weights"], l["bias"]) for l in doc["layers"]]
        except (KeyError, TypeError) as e:
            raise PolicyError(f"layers: malformed layer ({e})") from None
        try:
            return AnnPolicy(grid, layers, doc.get("activation", "tanh"),
                             doc.get("output_activation", "tanh"),
                             tuple(doc.get("action_scale", (1.0,))))
        except ValueError as e:
            if isinstance(e, PolicyError):
                raise
            raise PolicyError(f"layers: {e}") from None
    if kind == "table":
        if "default_action" not in doc:
            raise PolicyError("default_action: missing field")
        raw = doc.get("actions", {})
        if not isinstance(raw, Mapping):
            raise PolicyError("actions: must be an object")
        try:
            acts = {tuple(int(p) for p in k.split(",")): v for k, v in raw.items()}
        except ValueError:
            raise PolicyError("actions: keys must be comma-joined integers") from None
        return TablePolicy(grid, acts, tuple(doc["default_action"]))
    raise PolicyError(f"type: expected 'ann' or 'table', got {kind!r}")


def read_policy(path) -> Policy:
    with open(path) as fh:
        return load_policy(json.load(fh))


def write_policy(policy: Policy, path) -> None:
    with open(path, "w") as fh:
        fh.write(policy.dumps())


def random_ann(grid: AbstractionGrid, hidden: Sequence[int] = (20, 20), action_dim: int = 1,
               seed: int = 0, activation: str = "tanh", scale: float = 1.0) -> AnnPolicy:
    """Randomly weighted abstraction-layer MLP (used for constancy checks)."""
    rng = np.random.default_rng(seed)
    widths = [2 * grid.dim, *hidden, action_dim]
    layers = [(rng.normal(0, 1 / np.sqrt(a), size=(b, a)), rng.normal(0, 0.1, size=b))
              for a, b in zip(widths[:-1], widths[1:])]
    return AnnPolicy(grid, layers, activation, "tanh", (scale,) * action_dim)
