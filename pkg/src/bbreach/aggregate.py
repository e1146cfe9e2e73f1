"""Adjacency of interval boxes and BFS aggregation into interval hulls."""

from __future__ import annotations

import enum
from collections import deque
from typing import Sequence

import numpy as np

from .interval import IntervalBox, IntervalError, hull

TOL = 1e-12  # slack on threshold comparisons so decimal inputs like 0.32-0.3 <= 0.02 hold


class Relation(enum.Enum):
    INCLUSION = "inclusion"
    INTERSECTION = "intersection"
    SEPARATION = "separation"
    NOT_ADJACENT = "not_adjacent"

    @property
    def adjacent(self) -> bool:
        return self is not Relation.NOT_ADJACENT


def _aligned(a: IntervalBox, b: IntervalBox, h: Sequence[float], skip: int) -> bool:
    for i, (x, y) in enumerate(zip(a, b)):
        if i == skip:
            continue
        if abs(x.lo - y.lo) > h[i] + TOL or abs(x.hi - y.hi) > h[i] + TOL:
            return False
    return True


def classify(a: IntervalBox, b: IntervalBox, h: Sequence[float]) -> Relation:
    """Adjacency relation of two boxes under the per-dimension threshold ``h``.

    A witness dimension ``d`` for Intersection or Separation needs every
    other dimension aligned to within ``h``; any witness suffices.
    """
    if len(a) != len(b) or len(a) != len(h):
        raise IntervalError("dimension mismatch in classify")
    if all(y.lo <= x.lo and x.hi <= y.hi for x, y in zip(a, b)) or \
            all(x.lo <= y.lo and y.hi <= x.hi for x, y in zip(a, b)):
        return Relation.INCLUSION
    for d, (x, y) in enumerate(zip(a, b)):
        if (y.lo <= x.lo <= y.hi <= x.hi) or (x.lo <= y.lo <= x.hi <= y.hi):
            if _aligned(a, b, h, d):
                return Relation.INTERSECTION
    for d, (x, y) in enumerate(zip(a, b)):
        g1, g2 = x.lo - y.hi, y.lo - x.hi
        if (0.0 <= g1 <= h[d] + TOL) or (0.0 <= g2 <= h[d] + TOL):
            if _aligned(a, b, h, d):
                return Relation.SEPARATION
    return Relation.NOT_ADJACENT


def adjacency_matrix(boxes: Sequence[IntervalBox], h: Sequence[float]) -> np.ndarray:
    """Boolean matrix ``M[p, q] = classify(boxes[p], boxes[q], h).adjacent``."""
    n = len(boxes)
    if n == 0:
        return np.zeros((0, 0), dtype=bool)
    lo = np.array([b.lower for b in boxes])
    hi = np.array([b.upper for b in boxes])
    hv = np.asarray(h, dtype=float)
    L1, L2 = lo[:, None, :], lo[None, :, :]
    U1, U2 = hi[:, None, :], hi[None, :, :]
    incl = np.all((L2 <= L1) & (U1 <= U2), axis=2) | np.all((L1 <= L2) & (U2 <= U1), axis=2)
    close = (np.abs(L1 - L2) <= hv + TOL) & (np.abs(U1 - U2) <= hv + TOL)
    # aligned in every dimension except d  <=>  count of misaligned dims minus own flag == 0
    bad = (~close).sum(axis=2)
    others_ok = (bad[..., None] - (~close)) == 0
    inter = ((L2 <= L1) & (L1 <= U2) & (U2 <= U1)) | ((L1 <= L2) & (L2 <= U1) & (U1 <= U2))
    g1, g2 = L1 - U2, L2 - U1
    sep = ((g1 >= 0) & (g1 <= hv + TOL)) | ((g2 >= 0) & (g2 <= hv + TOL))
    adj = incl | np.any((inter | sep) & others_ok, axis=2)
    np.fill_diagonal(adj, False)
    return adj


def _sort_key(b: IntervalBox):
    return (b.lower, b.upper)


def aggregate(boxes: Sequence[IntervalBox], h: Sequence[float]) -> list[IntervalBox]:
    """Replace every connected group of adjacent boxes by its interval hull.

    Breadth-first traversal over the adjacency graph of the (sorted) inputs;
    the hull is grown with each dequeued neighbour. Every input box is
    contained in some output box.
    """
    if not boxes:
        return []
    arr = sorted(boxes, key=_sort_key)
    adj = adjacency_matrix(arr, h)
    neighbours = [np.flatnonzero(row).tolist() for row in adj]
    flag = [False] * len(arr)
    out = []
    for p in range(len(arr)):
        if flag[p]:
            continue
        acc = arr[p]
        flag[p] = True
        queue = deque([p])
        while queue:
            q = queue.popleft()
            for item in neighbours[q]:
                acc = hull(acc, arr[item])
                if not flag[item]:
                    flag[item] = True
                    queue.append(item)
        out.append(acc)
    out.sort(key=_sort_key)
    return out
