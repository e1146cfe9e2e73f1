"""Concrete RK4 simulation of policy-controlled trajectories.

Used as the containment oracle for flowpipes and as the episode engine of
the synthesizer. States are simulated in batches: arrays of shape (N, n).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .expr import Act, BinOp, Call, Const, Dynamics, Neg, Node, Pow, Var
from .grid import AbstractionGrid
from .policy import Policy

_NP_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh, "sqrt": np.sqrt}


def compile_numpy(node: Node) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Vectorized evaluator ``f(X, A)`` with ``X`` (N, n) and ``A`` (N, m)."""
    if isinstance(node, Const):
        v = node.value
        return lambda X, A: np.full(X.shape[0], v)
    if isinstance(node, Var):
        i = node.index
        return lambda X, A: X[:, i]
    if isinstance(node, Act):
        j = node.index
        return lambda X, A: A[:, j]
    if isinstance(node, Neg):
        f = compile_numpy(node.arg)
        return lambda X, A: -f(X, A)
    if isinstance(node, BinOp):
        f, g = compile_numpy(node.left), compile_numpy(node.right)
        op = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}[node.op]
        return lambda X, A: op(f(X, A), g(X, A))
    if isinstance(node, Pow):
        f, e = compile_numpy(node.base), node.exponent
        return lambda X, A: f(X, A) ** e
    if isinstance(node, Call):
        f, fn = compile_numpy(node.arg), _NP_FUNCS[node.func]
        return lambda X, A: fn(f(X, A))
    raise TypeError(node)


class VectorField:
    def __init__(self, dyn: Dynamics):
        self.dyn = dyn
        self._fs = [compile_numpy(e) for e in dyn.exprs]

    def __call__(self, X: np.ndarray, A: np.ndarray) -> np.ndarray:
        with np.errstate(all="raise"):
            return np.stack([f(X, A) for f in self._fs], axis=1)

    def rk4(self, X: np.ndarray, A: np.ndarray, h: float) -> np.ndarray:
        k1 = self(X, A)
        k2 = self(X + 0.5 * h * k1, A)
        k3 = self(X + 0.5 * h * k2, A)
        k4 = self(X + h * k3, A)
        return X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def cell_indices(grid: AbstractionGrid, X: np.ndarray) -> np.ndarray:
    """Vectorized :meth:`AbstractionGrid.cell_of` (clamped, half-open)."""
    out = np.empty(X.shape, dtype=np.int64)
    for i in range(grid.dim):
        b = np.asarray(grid.boundaries(i))
        k = np.searchsorted(b, X[:, i], side="right") - 1
        out[:, i] = np.clip(k, 0, len(b) - 2)
    return out


def policy_actions(policy: Policy, X: np.ndarray) -> np.ndarray:
    cells = cell_indices(policy.grid, X)
    return np.array([policy.cell_action(tuple(c)) for c in cells.tolist()], dtype=np.float64)


def simulate(dyn: Dynamics, policy: Policy, X0: np.ndarray, steps: int, delta: float,
             micro: int = 100, keep_micro: bool = False):
    """Simulate ``steps`` control periods from every row of ``X0``.

    Returns ``(states, micro_states)``: ``states[t]`` holds the states at
    ``t*delta``; ``micro_states[t-1]`` (when ``keep_micro``) holds the
    ``micro+1`` RK4 samples of period ``t`` including both endpoints.
    """
    field = VectorField(dyn)
    X = np.array(X0, dtype=np.float64, ndmin=2)
    h = delta / micro
    states = [X.copy()]
    micro_states = []
    for _ in range(steps):
        A = policy_actions(policy, X)
        seg = [X] if keep_micro else None
        for _ in range(micro):
            X = field.rk4(X, A, h)
            if keep_micro:
                seg.append(X)
        if keep_micro:
            micro_states.append(np.stack(seg))
        states.append(X.copy())
    return np.stack(states), (np.stack(micro_states) if keep_micro else None)


def sample_box(region, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = np.array(region.lower), np.array(region.upper)
    return lo + (hi - lo) * rng.random((n, len(lo)))


def halton(n: int, dim: int, skip: int = 1) -> np.ndarray:
    """First ``n`` points of the Halton sequence in ``[0, 1)^dim``."""
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37][:dim]
    out = np.empty((n, dim))
    for j, p in enumerate(primes):
        for i in range(n):
            f, r, k = 1.0, 0.0, i + skip
            while k > 0:
                f /= p
                r += f * (k % p)
                k //= p
            out[i, j] = r
    return out


def trajectories_csv(states: np.ndarray) -> str:
    """``traj_id,step,x1..xn`` rows for ``states`` of shape (T+1, N, n)."""
    T1, N, n = states.shape
    lines = ["traj_id,step," + ",".join(f"x{i + 1}" for i in range(n))]
    for j in range(N):
        for t in range(T1):
            lines.append(f"{j},{t}," + ",".join(repr(float(v)) for v in states[t, j]))
    return "\n".join(lines) + "\n"


def sample_starts(region, n: int, seed: int) -> np.ndarray:
    return sample_box(region, n, np.random.default_rng(seed))


def in_boxes(X: np.ndarray, boxes: Sequence, eps: float = 0.0) -> np.ndarray:
    """Mask of rows of ``X`` lying in at least one box (inflated by ``eps``)."""
    mask = np.zeros(X.shape[0], dtype=bool)
    for b in boxes:
        lo = np.array(b.lower) - eps
        hi = np.array(b.upper) + eps
        mask |= np.all((X >= lo) & (X <= hi), axis=1)
    return mask
