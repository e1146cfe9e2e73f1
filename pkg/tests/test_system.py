import json

import pytest

from bbreach import benchmarks
from bbreach.system import UNBOUNDED, SpecError, load_spec, read_spec

# reference granularity, initial, goal and unsafe region of each benchmark (None = unconstrained)
REFERENCE = {
    "b1": ([0.02, 0.02], [(0.8, 0.9), (0.5, 0.6)], [(0, 0.2), (0.05, 0.3)], [(0.4, 0.7), (-0.1, 0.2)]),
    "b2": ([0.1, 0.1], [(0.7, 0.9), (0.7, 0.9)], [(-0.3, 0.1), (-0.35, 0.5)], [(0.12, 0.42), (0.1, 0.6)]),
    "b3": ([0.2, 0.2], [(0.8, 0.9), (0.4, 0.5)], [(0.2, 0.3), (-0.3, -0.05)], [(0.55, 0.75), (-0.1, 0.1)]),
    "b4": ([0.2] * 3, [(0.25, 0.27), (0.08, 0.1), (0.25, 0.27)],
           [(-0.05, 0.05), (-0.05, 0), None], [(0.05, 0.1), (0.02, 0.04), None]),
    "b5": ([0.1] * 3, [(0.38, 0.4), (0.45, 0.47), (0.25, 0.27)],
           [(-0.4, -0.28), (0.05, 0.22), None], [(-0.05, 0.05), (0.15, 0.25), None]),
    "tora": ([0.2] * 4, [(-0.77, -0.75), (-0.45, -0.43), (0.51, 0.54), (-0.3, -0.28)],
             [(-0.1, 0.2), (-0.9, -0.6), None, None], [(-0.25, 0.1), (0.2, 0.7), None, None]),
    "acc": ([1, 0.1, 0.1, 1, 0.1, 0.1],
            [(90, 91), (32, 32.05), (0, 0), (10, 11), (30, 30.05), (0, 0)],
            [None, (22.81, 22.87), None, None, (29.88, 30.02), None],
            [None, (26, 29), None, None, (30.05, 30.15), None]),
}


def _as_pairs(box):
    return [None if iv == UNBOUNDED else (iv.lo, iv.hi) for iv in box]


@pytest.mark.parametrize("name", sorted(REFERENCE))
def test_shipped_benchmark_regions(name):
    spec = read_spec(benchmarks.spec_path(name))
    gran, init, goal, unsafe = REFERENCE[name]
    assert spec.grid.granularity == tuple(float(g) for g in gran)
    assert _as_pairs(spec.initial) == init
    assert _as_pairs(spec.goal) == goal
    assert [_as_pairs(u) for u in spec.unsafe] == [unsafe]


def test_registry_lists_all_benchmarks():
    assert set(REFERENCE) | {"toy1d"} == set(benchmarks.names())


def test_b2_is_complete():
    spec = read_spec(benchmarks.spec_path("b2"))
    dyn = spec.require_dynamics()
    assert dyn.rhs((0.2, 0.3), (0.5,)) == [pytest.approx(0.292), 0.5]
    assert spec.delta == 0.1 and spec.horizon <= 30


def test_placeholder_dynamics_refuse_analysis():
    spec = read_spec(benchmarks.spec_path("b1"))
    with pytest.raises(SpecError) as e:
        spec.require_dynamics()
    assert e.value.path == "dynamics"


def _doc():
    return json.loads(benchmarks.spec_path("b2").read_text())


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.pop("delta"), "delta"),
    (lambda d: d.update(delta=0), "delta"),
    (lambda d: d.update(horizon=2.5), "horizon"),
    (lambda d: d.update(granularity=[0.1]), "granularity"),
    (lambda d: d.update(granularity=[0.1, -0.1]), "granularity"),
    (lambda d: d.update(initial=[[0.7, 0.9], [0.9, 0.7]]), "initial[1]"),
    (lambda d: d.update(initial=[[0.7, 0.9], [0.7, 9.0]]), "initial"),
    (lambda d: d.update(dynamics=["x2 - x1^3", "x1 +* a"]), "dynamics"),
    (lambda d: d.update(unsafe=[[[0.1, 0.2]]]), "unsafe[0]"),
    (lambda d: d.update(solver={"ordr": 3}), "solver.ordr"),
    (lambda d: d.update(partitions=0), "partitions"),
    (lambda d: d.update(aggregation_threshold=[0.1, -1]), "aggregation_threshold"),
])
def test_schema_errors_name_the_field(mutate, field):
    doc = _doc()
    mutate(doc)
    with pytest.raises(SpecError) as e:
        load_spec(doc)
    assert e.value.path == field
    assert field in str(e.value)


def test_parse_error_carries_offset():
    doc = _doc()
    doc["dynamics"] = ["x2 - x1^3", "x1 +* a"]
    with pytest.raises(SpecError) as e:
        load_spec(json.dumps(doc))
    assert "4" in str(e.value)


def test_digest_tracks_content():
    a = load_spec(_doc())
    doc = _doc()
    doc["horizon"] = 29
    assert load_spec(_doc()).digest() == a.digest()
    assert load_spec(doc).digest() != a.digest()
