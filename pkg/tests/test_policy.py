import json
import math

import numpy as np
import pytest

from bbreach import benchmarks
from bbreach.grid import AbstractionGrid
from bbreach.interval import IntervalBox
from bbreach.policy import (
    AnnPolicy,
    PolicyError,
    TablePolicy,
    load_policy,
    random_ann,
    read_policy,
    write_policy,
)

B = IntervalBox.from_flat


@pytest.fixture
def unit():
    return AbstractionGrid((0.0, 0.0), (1.0, 1.0), (0.1, 0.1))


def test_single_cell_table(unit):
    p = TablePolicy(unit, {(3, 2): (0.7,)}, (0.0,))
    assert p.action((0.35, 0.25)) == (0.7,)
    assert p.cell_action((3, 2)) == (0.7,)


def test_unmapped_cell_uses_default(unit):
    p = TablePolicy(unit, {(3, 2): (0.7,)}, (-0.25,))
    assert p.action((0.95, 0.05)) == (-0.25,)


def test_zero_ann_is_zero_everywhere(unit):
    layers = [(np.zeros((4, 4)), np.zeros(4)), (np.zeros((1, 4)), np.zeros(1))]
    p = AnnPolicy(unit, layers)
    rng = np.random.default_rng(0)
    for s in rng.random((50, 2)):
        assert p.action(s) == (0.0,)


def test_identity_row_returns_lower_bound(unit):
    p = AnnPolicy(unit, [([[1.0, 0.0, 0.0, 0.0]], [0.0])], output_activation="identity")
    assert p.action((0.35, 0.25)) == (0.3,)
    assert p.action((0.72, 0.9)) == (0.7,)


def test_same_cell_states_get_identical_actions(unit):
    p = random_ann(unit, seed=3)
    a, b = p.action((0.31, 0.21)), p.action((0.39, 0.29))
    assert a == b
    assert p.forward([0.3, 0.4, 0.2, 0.3]) == a


def test_piece_query_matches_state_query(unit):
    p = random_ann(unit, seed=4)
    piece = B([0.32, 0.37, 0.55, 0.6])
    want = p.action_for_cell(piece)
    rng = np.random.default_rng(1)
    for s in piece.lower + (np.array(piece.upper) - piece.lower) * rng.random((100, 2)):
        assert p.action(s) == want


def test_degenerate_piece_on_boundary_uses_upper_cell(unit):
    table = TablePolicy(unit, {(2, 5): (-1.0,), (3, 5): (1.0,)}, (0.0,))
    assert table.action_for_cell(B([0.3, 0.3, 0.5, 0.6])) == (1.0,)


def test_table_piece_lookup(unit):
    table = TablePolicy(unit, {(1, 1): (0.4,)}, (0.0,))
    for piece in unit.segment(B([0.1, 0.2, 0.1, 0.2])):
        assert table.action_for_cell(piece) == (0.4,)


@pytest.mark.parametrize("make", [
    lambda g: random_ann(g, seed=9),
    lambda g: TablePolicy(g, {(0, 0): (0.1,), (9, 9): (-0.3,)}, (0.05,)),
])
def test_round_trip_is_byte_stable(unit, make, tmp_path):
    p = make(unit)
    path = tmp_path / "p.policy"
    write_policy(p, path)
    q = read_policy(path)
    assert q.dumps() == p.dumps() == path.read_text()
    rng = np.random.default_rng(2)
    for s in rng.random((20, 2)):
        assert q.action(s) == p.action(s)


def test_shipped_policies_load():
    for name in ("b2", "toy1d"):
        p = read_policy(benchmarks.policy_path(name))
        assert isinstance(p, TablePolicy)
        assert p.dumps() == benchmarks.policy_path(name).read_text()


@pytest.mark.parametrize("doc, field", [
    ({"type": "ann", "grid": {"lower": [0], "upper": [1], "granularity": [0.1]},
      "layers": [{"weights": [[1.0]], "bias": [0.0]}]}, "weights"),
    ({"type": "ann", "grid": {"lower": [0], "upper": [1], "granularity": [0.1]},
      "layers": [{"weights": [[1.0, 0.0], [0.0, 1.0]], "bias": [0.0, 0.0]},
                 {"weights": [[1.0, 0.0, 0.0]], "bias": [0.0]}]}, "weights"),
    ({"type": "ann", "grid": {"lower": [0], "upper": [1], "granularity": [0.1]},
      "layers": [{"weights": [[1.0, 0.0]], "bias": [0.0, 1.0]}]}, "bias"),
    ({"type": "table", "grid": {"lower": [0], "upper": [1], "granularity": [0.1]},
      "actions": {"0": [1.0, 2.0]}, "default_action": [0.0]}, "actions"),
    ({"type": "table", "grid": {"lower": [0], "upper": [1]}, "default_action": [0.0]}, "granularity"),
    ({"type": "mlp", "grid": {"lower": [0], "upper": [1], "granularity": [0.1]}}, "type"),
])
def test_schema_violations_name_the_field(doc, field):
    with pytest.raises(PolicyError) as e:
        load_policy(json.dumps(doc))
    assert field in str(e.value)


def test_unknown_activation():
    g = AbstractionGrid((0.0,), (1.0,), (0.1,))
    with pytest.raises(PolicyError):
        AnnPolicy(g, [([[1.0, 0.0]], [0.0])], activation="gelu")


def test_relu_hidden_layer_hand_evaluation():
    g = AbstractionGrid((0.0,), (1.0,), (0.5,))
    p = AnnPolicy(g, [([[1.0, 1.0], [-1.0, 0.0]], [0.0, 0.0]), ([[2.0, 3.0]], [0.5])],
                  activation="relu", output_activation="tanh", action_scale=(2.0,))
    # cell (0.5, 1.0): hidden = relu([1.5, -0.5]) = [1.5, 0]; out = 2 * tanh(3.5)
    assert p.action((0.7,)) == (2.0 * math.tanh(3.5),)
