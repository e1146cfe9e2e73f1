"""Uniform interval abstraction of the state space.

A grid tiles ``[L, U)`` with half-open cells of width ``d_i`` per dimension.
Cell boundaries are the floats nearest to the decimal values ``L_i + k*d_i``
so that, e.g., the boundary ``0.3`` of a ``0.1`` grid is exactly ``0.3``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Sequence

from .interval import Interval, IntervalBox, IntervalError

CellId = tuple[int, ...]

SNAP = 1e-12  # floor snapping for values meant to be exact multiples of d_i
SLIVER = 1e-12  # cuts closer than this to a box face are skipped


def _boundaries(lo: float, hi: float, d: float) -> tuple[float, ...]:
    dlo, dhi, dd = Decimal(repr(lo)), Decimal(repr(hi)), Decimal(repr(d))
    n = int(((dhi - dlo) / dd).to_integral_value(rounding="ROUND_CEILING"))
    n = max(n, 1)
    bounds = [float(dlo + k * dd) for k in range(n)]
    bounds.append(hi)
    return tuple(bounds)


@dataclass(frozen=True)
class AbstractionGrid:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    granularity: tuple[float, ...]
    _bounds: tuple[tuple[float, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        gran = tuple(float(v) for v in self.granularity)
        if not (len(lower) == len(upper) == len(gran)) or not lower:
            raise IntervalError("grid lower/upper/granularity must have equal nonzero length")
        for i, (lo, hi, d) in enumerate(zip(lower, upper, gran)):
            if not lo < hi:
                raise IntervalError(f"grid dimension {i}: lower must be < upper")
            if not d > 0:
                raise IntervalError(f"grid dimension {i}: granularity must be > 0")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "granularity", gran)
        object.__setattr__(self, "_bounds", tuple(
            _boundaries(lo, hi, d) for lo, hi, d in zip(lower, upper, gran)
        ))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple[int, ...]:
        """Number of cells per dimension."""
        return tuple(len(b) - 1 for b in self._bounds)

    def boundaries(self, i: int) -> tuple[float, ...]:
        return self._bounds[i]

    def domain(self) -> IntervalBox:
        return IntervalBox.from_bounds(self.lower, self.upper)

    def in_domain(self, s: Sequence[float]) -> bool:
        return all(lo <= x <= hi for lo, x, hi in zip(self.lower, s, self.upper))

    def index(self, i: int, x: float) -> int:
        """Cell ordinal of coordinate ``x`` in dimension ``i`` (clamped)."""
        b = self._bounds[i]
        n = len(b) - 1
        if x != x:
            raise IntervalError("NaN coordinate")
        k = math.floor((x - self.lower[i]) / self.granularity[i] + SNAP)
        k = min(max(k, 0), n - 1)
        # the decimal-exact boundaries are authoritative over the snapped floor
        while k > 0 and x < b[k]:
            k -= 1
        while k < n - 1 and x >= b[k + 1]:
            k += 1
        return k

    def cell_of(self, s: Sequence[float]) -> CellId:
        if len(s) != self.dim:
            raise IntervalError(f"state has {len(s)} dims, grid has {self.dim}")
        return tuple(self.index(i, x) for i, x in enumerate(s))

    def cell_box(self, cell: CellId) -> IntervalBox:
        return IntervalBox(Interval.make(self._bounds[i][k], self._bounds[i][k + 1])
                           for i, k in enumerate(cell))

    def phi_lower(self, i: int, x: float) -> float:
        return self._bounds[i][self.index(i, x)]

    def phi_upper(self, i: int, x: float) -> float:
        return self._bounds[i][self.index(i, x) + 1]

    def abstract_state(self, s: Sequence[float]) -> IntervalBox:
        """The cell containing ``s`` as a box ``(l1, u1, ..., ln, un)``."""
        return self.cell_box(self.cell_of(s))

    def abstraction_layer(self, s: Sequence[float]) -> list[float]:
        """Flat ``[l1, u1, ..., ln, un]`` vector fed to the policy network."""
        out = []
        for i, x in enumerate(s):
            k = self.index(i, x)
            out.append(self._bounds[i][k])
            out.append(self._bounds[i][k + 1])
        return out

    def clamp_box(self, box: IntervalBox) -> IntervalBox:
        dims = []
        for iv, lo, hi in zip(box, self.lower, self.upper):
            a = min(max(iv.lo, lo), hi)
            b = min(max(iv.hi, lo), hi)
            dims.append(Interval.make(a, b))
        return IntervalBox(dims)

    def _cuts(self, i: int, lo: float, hi: float) -> list[tuple[int, float, float]]:
        b = self._bounds[i]
        first, last = self.index(i, lo), self.index(i, hi)
        pieces = []
        start, k0 = lo, first
        for k in range(first + 1, last + 1):
            cut = b[k]
            if hi - cut < SLIVER:
                continue
            if cut - start < SLIVER:
                k0 = k  # sliver below the cut: the piece belongs to the next cell
                continue
            pieces.append((k0, start, cut))
            start, k0 = cut, k
        pieces.append((k0, start, hi))
        return pieces

    def segment_cells(self, box: IntervalBox, clamp: bool = True) -> list[tuple[CellId, IntervalBox]]:
        """Like :meth:`segment` but also returns the owning cell of every piece."""
        if len(box) != self.dim:
            raise IntervalError(f"box has {len(box)} dims, grid has {self.dim}")
        if clamp:
            box = self.clamp_box(box)
        per_dim = [self._cuts(i, iv.lo, iv.hi) for i, iv in enumerate(box)]
        out = []
        for combo in itertools.product(*per_dim):
            cell = tuple(c[0] for c in combo)
            piece = tuple.__new__(IntervalBox, tuple(
                tuple.__new__(Interval, (c[1], c[2])) for c in combo
            ))
            out.append((cell, piece))
        return out

    def segment(self, box: IntervalBox, clamp: bool = True) -> list[IntervalBox]:
        """Split ``box`` along cell boundaries; pieces come in cell order.

        With ``clamp=False`` the parts of ``box`` outside the domain stay
        attached to the edge cells, so the pieces still cover ``box``.
        """
        return [piece for _, piece in self.segment_cells(box, clamp)]

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper),
                "granularity": list(self.granularity)}

    @classmethod
    def from_dict(cls, d: dict) -> "AbstractionGrid":
        return cls(tuple(d["lower"]), tuple(d["upper"]), tuple(d["granularity"]))
