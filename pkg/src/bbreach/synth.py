"""Gradient-free synthesis of cell -> action tables (cross-entropy method).

Each candidate is a full table over the grid. Candidates are scored by the
mean shaped reward of fixed quasi-random episodes from the initial region;
the elite set (carried across iterations) refits a per-cell Gaussian.

Episodes stop at goal entry, so the reward says nothing about cells the
episodes never visit, in particular the goal interior. A second search
("hold" stage) tunes only those cells, scoring how well states that just
entered the goal stay there. Visited cells keep their first-stage actions,
so the first-stage reward of the returned table is unchanged.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .policy import Policy, TablePolicy
from .simulate import VectorField, cell_indices, halton
from .system import UNBOUNDED, SystemSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewardWeights:
    distance: float = 1.0
    goal_bonus: float = 100.0
    unsafe_penalty: float = 500.0


@dataclass(frozen=True)
class SynthConfig:
    spec: SystemSpec
    action_bounds: tuple[tuple[float, float], ...] = ((-1.0, 1.0),)
    episodes: int = 16
    iterations: int = 40
    population: int = 32
    elite_fraction: float = 0.2
    mutation_scale: float = 0.5
    min_std: float = 0.02
    seed: int = 0
    micro_steps: int = 10
    safety_margin: float = 0.0
    goal_margin: float = 0.0
    smoothing: float = 0.0
    hold_iterations: int = 20
    hold_jitter: float = 0.5
    weights: RewardWeights = RewardWeights()

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations >= 1 required")
        if not 0 < self.elite_fraction <= 1:
            raise ValueError("elite fraction must be in (0, 1]")
        if self.hold_iterations < 0:
            raise ValueError("hold_iterations must be >= 0")
        if self.population < 1 or self.episodes < 1:
            raise ValueError("population and episodes must be >= 1")
        if len(self.action_bounds) != self.spec.action_dim:
            raise ValueError("action_bounds must have one pair per action dimension")

    @classmethod
    def from_spec(cls, spec: SystemSpec, **overrides) -> "SynthConfig":
        opts = dict(spec.synth)
        if "weights" in opts:
            opts["weights"] = RewardWeights(**opts["weights"])
        if spec.action_bounds is not None:
            opts.setdefault("action_bounds", spec.action_bounds)
        opts.update({k: v for k, v in overrides.items() if v is not None})
        if "action_bounds" in opts:
            opts["action_bounds"] = tuple(tuple(float(x) for x in b) for b in opts["action_bounds"])
        return cls(spec=spec, **opts)


@dataclass
class SynthResult:
    policy: TablePolicy
    history: list[dict] = field(default_factory=list)
    best_reward: float = -math.inf
    reached_goal: bool = False
    hold_history: list[dict] = field(default_factory=list)

    def history_csv(self) -> str:
        lines = ["iteration,mean_reward,elite_mean,best_reward"]
        for h in self.history:
            lines.append(f"{h['iteration']},{h['mean_reward']!r},{h['elite_mean']!r},{h['best_reward']!r}")
        return "\n".join(lines) + "\n"


def _region_mask(X: np.ndarray, box, margin: float = 0.0) -> np.ndarray:
    # margin > 0 grows the box, margin < 0 shrinks it
    lo, hi = np.array(box.lower) - margin, np.array(box.upper) + margin
    return np.all((X >= lo) & (X <= hi), axis=1)


def _goal_center(spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    dims = np.array([iv != UNBOUNDED for iv in spec.goal])
    center = np.array([iv.mid if d else 0.0 for iv, d in zip(spec.goal, dims)])
    return center, dims


def run_episodes(spec: SystemSpec, table: np.ndarray, starts: np.ndarray, *,
                 micro: int = 10, weights: RewardWeights = RewardWeights(),
                 field_: VectorField | None = None, record: bool = False,
                 safety_margin: float = 0.0, goal_margin: float = 0.0):
    """Batch episodes under a dense action ``table`` of shape grid.shape + (m,).

    Returns per-episode rewards, goal flags, the visited cells and (when
    ``record``) per-episode traces. ``safety_margin`` grows the unsafe
    regions and ``goal_margin`` shrinks the goal, both for scoring only.
    """
    dyn = spec.require_dynamics()
    vf = field_ or VectorField(dyn)
    X = np.array(starts, dtype=np.float64, ndmin=2)
    N = X.shape[0]
    center, cdims = _goal_center(spec)
    reward = np.zeros(N)
    alive = np.ones(N, dtype=bool)
    reached = np.zeros(N, dtype=bool)
    traces = [[x.copy()] for x in X] if record else None
    visited: set[tuple[int, ...]] = set()
    h = spec.delta / micro

    in_goal = _region_mask(X, spec.goal, -goal_margin)
    reward[in_goal] += weights.goal_bonus
    reached |= in_goal
    alive &= ~in_goal
    for _ in range(spec.horizon):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        Xa = X[idx]
        cells = cell_indices(spec.grid, Xa)
        visited.update(map(tuple, cells.tolist()))
        A = table[tuple(cells.T)]
        hit = np.zeros(len(idx), dtype=bool)
        with np.errstate(all="ignore"):
            for _ in range(micro):
                Xa = vf.rk4(Xa, A, h)
                for u in spec.unsafe:
                    hit |= _region_mask(Xa, u, safety_margin)
        bad = ~np.all(np.isfinite(Xa), axis=1)
        Xa[bad] = X[idx][bad]
        hit |= bad
        X[idx] = Xa
        if record:
            for k, j in enumerate(idx):
                traces[j].append(Xa[k].copy())
        goal = _region_mask(Xa, spec.goal, -goal_margin) & ~hit
        dist = np.linalg.norm((Xa - center)[:, cdims], axis=1)
        r = np.where(hit, -weights.unsafe_penalty,
                     np.where(goal, weights.goal_bonus, -weights.distance * dist))
        reward[idx] += r
        reached[idx] |= goal
        alive[idx] = ~(hit | goal)
    return reward, reached, visited, traces


def simulate_episode(spec: SystemSpec, policy: Policy, s0, micro: int = 10,
                     weights: RewardWeights = RewardWeights()):
    """One episode from ``s0``: ``(trace, cumulative reward)``."""
    table = dense_table(policy)
    reward, _, _, traces = run_episodes(spec, table, np.asarray(s0, dtype=float)[None, :],
                                        micro=micro, weights=weights, record=True)
    return traces[0], float(reward[0])


def dense_table(policy: Policy) -> np.ndarray:
    shape = policy.grid.shape
    out = np.empty(shape + (policy.action_dim,))
    for cell in np.ndindex(*shape):
        out[cell] = policy.cell_action(cell)
    return out


def _noise(rng: np.random.Generator, shape, smoothing: float) -> np.ndarray:
    """Unit-variance Gaussian field, spatially correlated over ``smoothing`` cells."""
    z = rng.standard_normal(shape)
    if smoothing <= 0:
        return z
    sigma = [smoothing] * (len(shape) - 1) + [0.0]
    z = ndimage.gaussian_filter(z, sigma=sigma, mode="nearest")
    return z / z.std(axis=tuple(range(len(shape) - 1)), keepdims=True)


def run_hold(spec: SystemSpec, table: np.ndarray, starts: np.ndarray, steps: int, *,
             micro: int = 10, weights: RewardWeights = RewardWeights(),
             field_: VectorField | None = None, safety_margin: float = 0.0,
             goal_margin: float = 0.0):
    """Score how well ``starts`` (states in or near the goal) stay in the goal.

    Each step outside the goal costs ``1 + distance`` (times the distance
    weight); unsafe contact costs the unsafe penalty and ends the run.
    Returns per-start rewards, the final in-goal mask and the visited cells.
    """
    vf = field_ or VectorField(spec.require_dynamics())
    X = np.array(starts, dtype=np.float64, ndmin=2)
    center, cdims = _goal_center(spec)
    reward = np.zeros(len(X))
    alive = np.ones(len(X), dtype=bool)
    visited: set[tuple[int, ...]] = set()
    h = spec.delta / micro
    for _ in range(steps):
        idx = np.flatnonzero(alive)
        if len(idx) == 0:
            break
        Xa = X[idx]
        cells = cell_indices(spec.grid, Xa)
        visited.update(map(tuple, cells.tolist()))
        A = table[tuple(cells.T)]
        hit = np.zeros(len(idx), dtype=bool)
        with np.errstate(all="ignore"):
            for _ in range(micro):
                Xa = vf.rk4(Xa, A, h)
                for u in spec.unsafe:
                    hit |= _region_mask(Xa, u, safety_margin)
        bad = ~np.all(np.isfinite(Xa), axis=1)
        Xa[bad] = X[idx][bad]
        hit |= bad
        X[idx] = Xa
        inside = _region_mask(Xa, spec.goal, -goal_margin)
        dist = np.linalg.norm((Xa - center)[:, cdims], axis=1)
        reward[idx] += np.where(hit, -weights.unsafe_penalty,
                                np.where(inside, 0.0, -weights.distance * (1.0 + dist)))
        alive[idx] = ~hit
    return reward, alive & _region_mask(X, spec.goal, -goal_margin), visited


def _candidate_rng(seed: int, stage: int, iteration: int, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, stage, iteration, k])


def _cem(config: SynthConfig, stage: int, iterations: int, score, mean, std, lo, hi,
         frozen: np.ndarray | None = None):
    """Elitist cross-entropy loop; ``frozen`` cells keep their ``mean`` entries."""
    shape = mean.shape
    n_elite = max(1, math.ceil(config.elite_fraction * config.population))
    base = mean.copy()
    elites: list[tuple] = []
    history = []
    counter = 0
    for it in range(iterations):
        pop = []
        for k in range(config.population):
            rng = _candidate_rng(config.seed, stage, it, k)
            cand = np.clip(mean + std * _noise(rng, shape, config.smoothing), lo, hi)
            if frozen is not None:
                cand = np.where(frozen, base, cand)
            pop.append((*score(cand), counter, cand))
            counter += 1
        rewards = [p[0] for p in pop]
        # (reward, info, counter, table); ties go to the earlier candidate
        elites = sorted(pop + elites, key=lambda p: (-p[0], p[2]))[:n_elite]
        stack = np.stack([e[3] for e in elites])
        mean = stack.mean(axis=0)
        std = np.maximum(stack.std(axis=0), config.min_std * (hi - lo) / 2)
        entry = {"iteration": it, "mean_reward": float(np.mean(rewards)),
                 "elite_mean": float(np.mean([e[0] for e in elites])),
                 "best_reward": float(elites[0][0])}
        history.append(entry)
        log.info("stage %d iter %d mean %.3f elite %.3f best %.3f", stage, it,
                 entry["mean_reward"], entry["elite_mean"], entry["best_reward"])
    return elites[0], history


def synthesize(config: SynthConfig) -> SynthResult:
    """Cross-entropy search for a reach-avoid table policy."""
    spec = config.spec
    vf = VectorField(spec.require_dynamics())
    grid = spec.grid
    m = spec.action_dim
    lo = np.array([b[0] for b in config.action_bounds])
    hi = np.array([b[1] for b in config.action_bounds])
    starts = np.array(spec.initial.lower) + halton(config.episodes, grid.dim) * np.array(spec.initial.widths)
    shape = grid.shape + (m,)
    mean = np.broadcast_to((lo + hi) / 2, shape).copy()
    std = np.broadcast_to(config.mutation_scale * (hi - lo) / 2, shape).copy()
    opts = dict(micro=config.micro_steps, weights=config.weights, field_=vf,
                safety_margin=config.safety_margin, goal_margin=config.goal_margin)

    def score(table):
        r, reached, visited, _ = run_episodes(spec, table, starts, **opts)
        return float(r.mean()), (bool(reached.all()), visited)

    (best_reward, (ok, visited), _, best), history = _cem(config, 0, config.iterations,
                                                           score, mean, std, lo, hi)
    if not ok:
        log.warning("synthesis budget exhausted without a goal-reaching candidate")

    hold_history = []
    _, reached, _, traces = run_episodes(spec, best, starts, record=True, **opts)
    entries = np.array([tr[-1] for tr, r in zip(traces, reached) if r])
    if config.hold_iterations > 0 and len(entries):
        gran = np.array(grid.granularity)
        offsets = np.vstack([np.zeros(grid.dim),
                             (halton(4, grid.dim) - 0.5) * 2 * config.hold_jitter * gran])
        hold_starts = (entries[:, None, :] + offsets[None]).reshape(-1, grid.dim)
        frozen = np.zeros(shape, dtype=bool)
        for cell in visited:
            frozen[cell] = True

        def hold_score(table):
            r, _, vis = run_hold(spec, table, hold_starts, spec.horizon, **opts)
            return float(r.mean()), vis

        (_, visited2, _, best), hold_history = _cem(config, 1, config.hold_iterations, hold_score,
                                                    best, std, lo, hi, frozen)
        visited = visited | visited2

    policy = TablePolicy(grid, fill_from_visited(grid, best, visited),
                         tuple(float(v) for v in (lo + hi) / 2))
    return SynthResult(policy, history, best_reward, ok, hold_history)


def fill_from_visited(grid, table: np.ndarray, visited) -> dict:
    """Cell -> action map where every cell takes the action of the nearest visited cell.

    Actions of cells no episode reached carry no information; copying the
    nearest visited cell keeps the table smooth around the explored tube.
    """
    vis = np.array(sorted(visited), dtype=float)
    if len(vis) == 0:
        return {}
    gran = np.array(grid.granularity)
    out = {}
    for cell in np.ndindex(*grid.shape):
        d = np.sum(((vis - np.array(cell)) * gran) ** 2, axis=1)
        src = tuple(int(v) for v in vis[int(np.argmin(d))])
        out[cell] = tuple(float(v) for v in table[src])
    return out
