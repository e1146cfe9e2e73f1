import numpy as np
import pytest

from bbreach import benchmarks
from bbreach.expr import Dynamics
from bbreach.grid import AbstractionGrid
from bbreach.policy import TablePolicy, read_policy
from bbreach.simulate import (
    VectorField,
    cell_indices,
    halton,
    in_boxes,
    sample_starts,
    simulate,
    trajectories_csv,
)
from bbreach.system import read_spec


def test_constant_dynamics_give_arithmetic_progression():
    dyn = Dynamics.parse(["a", "0.25"])
    grid = AbstractionGrid((-10.0, -10.0), (10.0, 10.0), (1.0, 1.0))
    pol = TablePolicy(grid, {}, (0.5,))
    states, _ = simulate(dyn, pol, np.array([[0.0, 1.0]]), 4, 0.1)
    want = np.array([[0.05 * t, 1.0 + 0.025 * t] for t in range(5)])
    assert np.allclose(states[:, 0, :], want, atol=1e-14)


def test_vectorized_field_matches_point_evaluation():
    dyn = Dynamics.parse(["x2 - x1^3 + sin(a)", "exp(-x1) * tanh(x2) - sqrt(x1^2 + 1)"])
    vf = VectorField(dyn)
    rng = np.random.default_rng(0)
    X, A = rng.normal(size=(20, 2)), rng.normal(size=(20, 1))
    got = vf(X, A)
    for k in range(20):
        assert got[k] == pytest.approx(dyn.rhs(X[k], A[k]), rel=1e-14, abs=1e-15)


def test_cell_indices_match_grid():
    grid = AbstractionGrid((-1.5, -1.5), (1.5, 1.5), (0.1, 0.1))
    rng = np.random.default_rng(1)
    X = rng.uniform(-2, 2, size=(2000, 2))
    X[:10, 0] = [-1.5, -1.4, -0.3, 0.0, 0.3, 0.7, 1.4, 1.5, -1.0, 1.0]
    got = cell_indices(grid, X)
    for x, c in zip(X, got):
        assert tuple(c) == grid.cell_of(x)


def test_micro_samples_include_endpoints():
    dyn = Dynamics.parse(["-x1"])
    grid = AbstractionGrid((-1.0,), (1.0,), (0.5,))
    pol = TablePolicy(grid, {}, (0.0,))
    states, micro = simulate(dyn, pol, np.array([[1.0]]), 3, 0.1, micro=10, keep_micro=True)
    assert micro.shape == (3, 11, 1, 1)
    for t in range(3):
        assert np.array_equal(micro[t, 0], states[t])
        assert np.array_equal(micro[t, -1], states[t + 1])
    # RK4 global error at h = 0.01 is O(h^4), about 1e-11 here
    assert states[-1, 0, 0] == pytest.approx(np.exp(-0.3), rel=1e-9)


def test_b2_samples_stay_in_domain():
    spec = read_spec(benchmarks.spec_path("b2"))
    pol = read_policy(benchmarks.policy_path("b2"))
    states, _ = simulate(spec.dynamics, pol, sample_starts(spec.initial, 200, 0), spec.horizon, spec.delta)
    flat = states.reshape(-1, 2)
    assert in_boxes(flat, [spec.grid.domain()]).all()


def test_sampling_is_seeded():
    spec = read_spec(benchmarks.spec_path("b2"))
    a, b = sample_starts(spec.initial, 10, 4), sample_starts(spec.initial, 10, 4)
    assert np.array_equal(a, b)
    assert in_boxes(a, [spec.initial]).all()


def test_halton_first_points():
    assert np.allclose(halton(3, 2), [[0.5, 1 / 3], [0.25, 2 / 3], [0.75, 1 / 9]])


def test_trajectories_csv_layout():
    states = np.arange(12, dtype=float).reshape(3, 2, 2)
    lines = trajectories_csv(states).splitlines()
    assert lines[0] == "traj_id,step,x1,x2"
    assert lines[1] == "0,0,0.0,1.0"
    assert lines[4] == "1,0,2.0,3.0"
    assert len(lines) == 7
