import random

import numpy as np
import pytest

from bbreach import benchmarks
from bbreach.grid import AbstractionGrid
from bbreach.interval import IntervalBox
from bbreach.policy import TablePolicy, read_policy
from bbreach.reach import (
    DomainExit,
    FlowPipe,
    GridMismatch,
    PartitionResult,
    Verdict,
    VerdictKind,
    check_reach_avoid,
    combine,
    partition_initial,
    reach,
    reach_parallel,
    worker_count,
)
from bbreach.simulate import in_boxes, sample_starts, simulate
from bbreach.system import load_spec, read_spec

B = IntervalBox.from_flat


def line_spec(**over):
    doc = {
        "name": "line", "dimension": 2, "dynamics": ["a", "0"], "delta": 0.1, "horizon": 5,
        "domain": {"lower": [0, 0], "upper": [1, 1]}, "granularity": [0.1, 0.1],
        "initial": [[0.31, 0.38], [0.52, 0.58]], "goal": [[0.8, 1.0], [0.0, 1.0]],
        "unsafe": [], "aggregation_threshold": [0.0, 0.0],
    }
    doc.update(over)
    return load_spec(doc)


def const_policy(spec, a):
    return TablePolicy(spec.grid, {}, (a,))


@pytest.fixture(scope="module")
def b2():
    return read_spec(benchmarks.spec_path("b2")), read_policy(benchmarks.policy_path("b2"))


def test_zero_horizon_is_initial_only():
    spec = line_spec(horizon=0)
    pipe = reach(spec, const_policy(spec, 0.0))
    assert pipe.steps == [[spec.initial]] and pipe.horizon == 0


def test_constant_shift_matches_closed_form():
    spec = line_spec(horizon=4)
    pipe = reach(spec, const_policy(spec, 0.5), early_stop=False)
    for t, boxes in enumerate(pipe.steps):
        hull_lo = min(b[0].lo for b in boxes)
        hull_hi = max(b[0].hi for b in boxes)
        want_lo, want_hi = 0.31 + 0.05 * t, 0.38 + 0.05 * t
        assert hull_lo <= want_lo and want_hi <= hull_hi
        assert want_lo - hull_lo < 1e-14 and hull_hi - want_hi < 1e-14
        for b in boxes:
            assert (b[1].lo, b[1].hi) == (0.52, 0.58)


def test_pieces_follow_segmentation():
    spec = line_spec(initial=[[0.25, 0.45], [0.5, 0.6]], horizon=1)
    pipe = reach(spec, const_policy(spec, 0.0), aggregation=False)
    assert pipe.pre_aggregation == [1, 3]
    assert len(pipe.tubes[1]) == 3 and pipe.tubes[0] == []


def test_verdicts_on_constructed_pipes():
    spec = line_spec(goal=[[0.0, 1.0], [0.0, 0.5]], unsafe=[[[0.6, 0.7], [0.6, 0.7]]])
    far = B([0.1, 0.2, 0.8, 0.9])
    in_goal = B([0.1, 0.2, 0.1, 0.2])
    pipe = FlowPipe(steps=[[far], [far], [in_goal]], tubes=[[], [far], [far]])
    assert check_reach_avoid(pipe, spec) == Verdict(VerdictKind.VERIFIED, goal_step=2)
    hit = B([0.65, 0.8, 0.65, 0.8])
    pipe = FlowPipe(steps=[[far]] * 4, tubes=[[], [far], [far], [hit]])
    v = check_reach_avoid(pipe, spec)
    assert v.kind is VerdictKind.UNSAFE and v.unsafe_step == 3 and v.unsafe_box == hit
    assert v.exit_code == 1
    pipe = FlowPipe(steps=[[far]] * 3, tubes=[[], [far], [far]])
    v = check_reach_avoid(pipe, spec)
    assert v.kind is VerdictKind.GOAL_NOT_REACHED and v.exit_code == 2


def test_partition_examples():
    unit = B([0, 1, 0, 1])
    assert partition_initial(unit, 1) == [unit]
    quarters = partition_initial(unit, 4)
    assert sorted(q.flat() for q in quarters) == sorted([
        (0, 0.5, 0, 0.5), (0, 0.5, 0.5, 1), (0.5, 1, 0, 0.5), (0.5, 1, 0.5, 1)])
    with pytest.raises(ValueError):
        partition_initial(unit, 0)


@pytest.mark.parametrize("seed", range(10))
def test_partition_volume_accounting(seed):
    rng = random.Random(seed)
    dims = [sorted((rng.uniform(-2, 2), rng.uniform(-2, 2))) for _ in range(3)]
    region = IntervalBox(dims)
    parts = partition_initial(region, 20)
    assert len(parts) == 20
    assert sum(p.volume() for p in parts) == pytest.approx(region.volume(), rel=1e-12)
    assert max(p.volume() for p in parts) <= region.volume() / 20 * (1 + 1e-9)
    assert all(p.subset(region) for p in parts)


def test_grid_mismatch_names_field(b2):
    spec, _ = b2
    other = TablePolicy(AbstractionGrid((-1.5, -1.5), (1.5, 1.5), (0.2, 0.1)), {}, (0.0,))
    with pytest.raises(GridMismatch, match="granularity"):
        reach(spec, other)


def test_domain_exit_is_counted_or_raised():
    spec = line_spec(initial=[[0.91, 0.98], [0.5, 0.6]], goal=[[2.0, 3.0], [0.0, 1.0]], horizon=3)
    pol = const_policy(spec, 1.0)
    pipe = reach(spec, pol)
    assert pipe.domain_warnings > 0
    with pytest.raises(DomainExit):
        reach(spec, pol, strict=True)


def test_single_partition_equals_reach(b2):
    spec, pol = b2
    results, verdict = reach_parallel(spec, pol, partitions=1, workers=1)
    pipe = reach(spec, pol)
    assert results[0].pipe.steps == pipe.steps and results[0].pipe.tubes == pipe.tubes
    assert verdict == check_reach_avoid(pipe, spec)


def test_four_partitions_keep_verdict(b2):
    spec, pol = b2
    _, v1 = reach_parallel(spec, pol, partitions=1, workers=1)
    results, v4 = reach_parallel(spec, pol, partitions=4, workers=1)
    assert v1.kind is v4.kind is VerdictKind.VERIFIED
    assert [r.index for r in results] == [0, 1, 2, 3]


def test_combine_prefers_unsafe():
    ok = PartitionResult(0, B([0, 1]), None, Verdict(VerdictKind.VERIFIED, goal_step=3))
    bad = PartitionResult(1, B([0, 1]), None, Verdict(VerdictKind.UNSAFE, unsafe_step=2))
    miss = PartitionResult(2, B([0, 1]), None, Verdict(VerdictKind.GOAL_NOT_REACHED))
    assert combine([ok, ok]).goal_step == 3
    assert combine([ok, miss, bad]).kind is VerdictKind.UNSAFE
    assert combine([ok, miss]).kind is VerdictKind.GOAL_NOT_REACHED


def test_worker_count(monkeypatch):
    monkeypatch.setenv("BBREACH_THREADS", "3")
    assert worker_count(8) == 3
    assert worker_count(2) == 2
    assert worker_count(8, 1) == 1


def test_b2_flowpipe_contains_simulations(b2):
    spec, pol = b2
    pipe = reach(spec, pol)
    X0 = sample_starts(spec.initial, 300, seed=5)
    states, _ = simulate(spec.dynamics, pol, X0, pipe.horizon, spec.delta)
    for t, boxes in enumerate(pipe.steps):
        assert in_boxes(states[t], boxes, 1e-6).all()
    assert check_reach_avoid(pipe, spec).verified
