"""Flowpipe computation: segment, query the policy, post, aggregate."""

from __future__ import annotations

import enum
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .aggregate import aggregate
from .flow import StepFailure, post
from .interval import IntervalBox, intersect
from .policy import Policy
from .system import SystemSpec

log = logging.getLogger(__name__)


class GridMismatch(ValueError):
    def __init__(self, field_name: str):
        super().__init__(f"policy grid {field_name} does not match spec {field_name}")
        self.field = field_name


class DomainExit(RuntimeError):
    pass


class ReachFailure(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass
class FlowPipe:
    steps: list[list[IntervalBox]]
    tubes: list[list[IntervalBox]]   # tubes[t]: enclosures of [t-1, t]*delta; tubes[0] is empty
    pre_aggregation: list[int] = field(default_factory=list)
    policy_digest: str = ""
    spec_digest: str = ""
    wall_time_ms: float = 0.0
    domain_warnings: int = 0
    picard_checks: int = 0

    @property
    def horizon(self) -> int:
        return len(self.steps) - 1

    def boxes_per_step(self) -> list[int]:
        return [len(s) for s in self.steps]


class VerdictKind(enum.Enum):
    VERIFIED = "Verified"
    UNSAFE = "UnsafeIntersection"
    GOAL_NOT_REACHED = "GoalNotReached"
    INCONCLUSIVE = "Inconclusive"


EXIT_CODES = {VerdictKind.VERIFIED: 0, VerdictKind.UNSAFE: 1,
              VerdictKind.GOAL_NOT_REACHED: 2, VerdictKind.INCONCLUSIVE: 2}


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    goal_step: int | None = None
    unsafe_step: int | None = None
    unsafe_box: IntervalBox | None = None
    reason: str = ""

    @property
    def verified(self) -> bool:
        return self.kind is VerdictKind.VERIFIED

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.kind]

    def __str__(self) -> str:
        if self.kind is VerdictKind.VERIFIED:
            return f"Verified (goal at step {self.goal_step})"
        if self.kind is VerdictKind.UNSAFE:
            return f"UnsafeIntersection(step {self.unsafe_step}, {self.unsafe_box})"
        if self.kind is VerdictKind.INCONCLUSIVE:
            return f"Inconclusive({self.reason})"
        return "GoalNotReached"


def check_grid(spec: SystemSpec, policy: Policy) -> None:
    g, p = spec.grid, policy.grid
    if p.dim != g.dim:
        raise GridMismatch("dimension")
    for name in ("granularity", "lower", "upper"):
        if getattr(g, name) != getattr(p, name):
            raise GridMismatch(name)
    if policy.action_dim != spec.action_dim:
        raise GridMismatch("action dimension")


def _inside(box: IntervalBox, region: IntervalBox) -> bool:
    return box.subset(region)


def reach(spec: SystemSpec, policy: Policy, *, initial: IntervalBox | None = None,
          aggregation: bool = True, horizon: int | None = None, early_stop: bool = True,
          strict: bool = False) -> FlowPipe:
    """Compute ``X_0 .. X_T`` for ``spec`` under ``policy``.

    Stops early once every box of ``X_t`` lies in the goal (``early_stop``).
    Boxes leaving the grid domain are propagated unclamped; the policy sees
    the nearest edge cell and ``domain_warnings`` is incremented.
    """
    check_grid(spec, policy)
    dyn = spec.require_dynamics()
    grid = spec.grid
    domain = grid.domain()
    T = spec.horizon if horizon is None else horizon
    start = time.perf_counter()
    x0 = spec.initial if initial is None else initial
    pipe = FlowPipe(steps=[[x0]], tubes=[[]], pre_aggregation=[1],
                    policy_digest=policy.digest(), spec_digest=spec.digest())
    if early_stop and _inside(x0, spec.goal):
        pipe.wall_time_ms = (time.perf_counter() - start) * 1e3
        return pipe
    for t in range(1, T + 1):
        successors, tubes = [], []
        for box in pipe.steps[t - 1]:
            if not box.subset(domain):
                pipe.domain_warnings += 1
                if strict:
                    raise DomainExit(f"step {t}: box {box} leaves the domain")
            for cell, piece in grid.segment_cells(box, clamp=False):
                act = policy.action_for_cell(piece)
                try:
                    res = post(piece, act, dyn, spec.delta, spec.solver)
                except StepFailure as e:
                    raise ReachFailure(t, e) from e
                pipe.picard_checks += len(res.substeps)
                successors.append(res.end_box)
                tubes.append(res.tube_box)
        pipe.pre_aggregation.append(len(successors))
        if aggregation:
            nxt = aggregate(successors, spec.threshold)
        else:
            nxt = sorted(successors, key=lambda b: (b.lower, b.upper))
        pipe.steps.append(nxt)
        pipe.tubes.append(tubes)
        log.debug("step %d: %d pieces -> %d boxes", t, len(successors), len(nxt))
        if early_stop and all(_inside(b, spec.goal) for b in nxt):
            break
    pipe.wall_time_ms = (time.perf_counter() - start) * 1e3
    return pipe


def check_reach_avoid(pipe: FlowPipe, spec: SystemSpec) -> Verdict:
    """Reach-avoid verdict: goal reached at some step, tube never unsafe before it."""
    for t, boxes in enumerate(pipe.steps):
        checked = pipe.tubes[t] + boxes if t < len(pipe.tubes) else boxes
        for box in checked:
            for u in spec.unsafe:
                if intersect(box, u) is not None:
                    return Verdict(VerdictKind.UNSAFE, unsafe_step=t, unsafe_box=box)
        if all(_inside(b, spec.goal) for b in boxes):
            return Verdict(VerdictKind.VERIFIED, goal_step=t)
    return Verdict(VerdictKind.GOAL_NOT_REACHED)


def partition_initial(region: IntervalBox, k: int) -> list[IntervalBox]:
    """Split ``region`` into ``k`` equal-volume boxes by cutting the widest side."""
    if k < 1:
        raise ValueError("partition count must be >= 1")
    if k == 1:
        return [region]
    widths = region.widths
    d = max(range(len(widths)), key=lambda i: (widths[i], -i))
    k1 = k // 2
    iv = region[d]
    cut = iv.lo + (iv.hi - iv.lo) * k1 / k
    left = IntervalBox(tuple(region[:d]) + ((iv.lo, cut),) + tuple(region[d + 1:]))
    right = IntervalBox(tuple(region[:d]) + ((cut, iv.hi),) + tuple(region[d + 1:]))
    return partition_initial(left, k1) + partition_initial(right, k - k1)


@dataclass
class PartitionResult:
    index: int
    region: IntervalBox
    pipe: FlowPipe | None
    verdict: Verdict


def _run_partition(args) -> PartitionResult:
    index, region, spec, policy, aggregation = args
    try:
        pipe = reach(spec, policy, initial=region, aggregation=aggregation)
    except (ReachFailure, DomainExit) as e:
        return PartitionResult(index, region, None,
                               Verdict(VerdictKind.INCONCLUSIVE, reason=f"partition {index}: {e}"))
    return PartitionResult(index, region, pipe, check_reach_avoid(pipe, spec))


def worker_count(k: int, requested: int | None = None) -> int:
    cap = requested
    env = os.environ.get("BBREACH_THREADS")
    if cap is None and env:
        cap = int(env)
    if cap is None:
        cap = os.cpu_count() or 1
    return max(1, min(k, cap))


def combine(results: Sequence[PartitionResult]) -> Verdict:
    if all(r.verdict.verified for r in results):
        return Verdict(VerdictKind.VERIFIED, goal_step=max(r.verdict.goal_step for r in results))
    for kind in (VerdictKind.UNSAFE, VerdictKind.INCONCLUSIVE, VerdictKind.GOAL_NOT_REACHED):
        for r in results:
            if r.verdict.kind is kind:
                v = r.verdict
                reason = v.reason or f"partition {r.index}"
                return Verdict(v.kind, v.goal_step, v.unsafe_step, v.unsafe_box, reason)
    raise AssertionError("unreachable")


def reach_parallel(spec: SystemSpec, policy: Policy, *, partitions: int | None = None,
                   aggregation: bool = True, workers: int | None = None
                   ) -> tuple[list[PartitionResult], Verdict]:
    """Analyse every initial-set partition independently; results keep partition order."""
    check_grid(spec, policy)
    spec.require_dynamics()
    k = spec.partitions if partitions is None else partitions
    regions = partition_initial(spec.initial, k)
    jobs = [(i, r, spec, policy, aggregation) for i, r in enumerate(regions)]
    nworkers = worker_count(k, workers)
    if nworkers == 1:
        results = [_run_partition(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_run_partition, jobs))
    return results, combine(results)
