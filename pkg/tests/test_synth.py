import numpy as np
import pytest

from bbreach import benchmarks
from bbreach.policy import TablePolicy, load_policy
from bbreach.reach import check_reach_avoid, reach
from bbreach.simulate import sample_starts, simulate
from bbreach.synth import RewardWeights, SynthConfig, simulate_episode, synthesize
from bbreach.system import read_spec


@pytest.fixture(scope="module")
def toy():
    return read_spec(benchmarks.spec_path("toy1d"))


@pytest.fixture(scope="module")
def toy_result(toy):
    return synthesize(SynthConfig.from_spec(toy))


def table(spec, fn):
    return TablePolicy(spec.grid, {c: (fn(spec.grid.cell_box(c)[0].lo),) for c in np.ndindex(*spec.grid.shape)},
                       (0.0,))


def test_start_in_goal_is_one_state_trace(toy):
    trace, reward = simulate_episode(toy, table(toy, lambda x: -1.0), [0.05])
    assert len(trace) == 1
    assert reward == RewardWeights().goal_bonus


def test_zero_action_is_stationary(toy):
    trace, reward = simulate_episode(toy, table(toy, lambda x: 0.0), [0.85])
    assert len(trace) == toy.horizon + 1
    assert all(s[0] == 0.85 for s in trace)
    assert reward == pytest.approx(-toy.horizon * 0.8)


def test_reaching_goal_earlier_scores_higher(toy):
    # identical until x < 0.2; one table keeps moving, the other stalls short of the goal
    go = table(toy, lambda x: -1.0)
    stall = table(toy, lambda x: -1.0 if x >= 0.2 else 0.0)
    t_go, r_go = simulate_episode(toy, go, [0.85])
    t_stall, r_stall = simulate_episode(toy, stall, [0.85])
    k = 5
    assert np.allclose(t_go[:k], t_stall[:k])
    assert r_go > r_stall
    slow = table(toy, lambda x: -0.5)
    _, r_slow = simulate_episode(toy, slow, [0.85])
    assert r_go > r_slow > r_stall


def test_config_validation(toy):
    with pytest.raises(ValueError, match="iterations"):
        SynthConfig.from_spec(toy, iterations=0)
    with pytest.raises(ValueError):
        SynthConfig(toy, elite_fraction=0.0)
    with pytest.raises(ValueError):
        SynthConfig(toy, action_bounds=((-1, 1), (-1, 1)))


def test_toy_policy_verifies(toy, toy_result):
    assert toy_result.reached_goal
    pol = toy_result.policy
    pipe = reach(toy, pol)
    assert check_reach_avoid(pipe, toy).verified
    X0 = sample_starts(toy.initial, 50, seed=1)
    states, _ = simulate(toy.dynamics, pol, X0, pipe.horizon, toy.delta)
    assert ((states[-1] >= 0.0) & (states[-1] <= 0.1)).all()


def test_synthesis_is_deterministic(toy, toy_result):
    again = synthesize(SynthConfig.from_spec(toy))
    assert again.policy.dumps() == toy_result.policy.dumps()
    assert again.history == toy_result.history


def test_elite_mean_never_decreases(toy_result):
    for hist in (toy_result.history, toy_result.hold_history):
        elite = [h["elite_mean"] for h in hist]
        best = [h["best_reward"] for h in hist]
        assert all(b >= a for a, b in zip(elite, elite[1:]))
        assert all(b >= a for a, b in zip(best, best[1:]))


def test_history_csv_and_round_trip(toy_result):
    lines = toy_result.history_csv().splitlines()
    assert lines[0] == "iteration,mean_reward,elite_mean,best_reward"
    assert len(lines) == 1 + len(toy_result.history)
    pol = toy_result.policy
    assert load_policy(pol.dumps()).dumps() == pol.dumps()


def test_actions_respect_bounds(toy, toy_result):
    lo, hi = toy.action_bounds[0]
    assert all(lo <= a[0] <= hi for a in toy_result.policy.actions.values())
