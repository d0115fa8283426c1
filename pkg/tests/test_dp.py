import io
import itertools

import pytest

from relay_aoi.core import BudgetExceededError, NetworkConfig, feasible_actions
from relay_aoi.policies import (
    PolicySpec,
    evaluate_fixed_sequence,
    exhaustive_minimum,
    solve_backward_induction,
)
from relay_aoi.policies.dp import dump_dp_table, load_dp_table
from relay_aoi.sim import OutageTape, exact_expected_value, run_episode


def test_dp_k2_t3_optimal_trajectory():
    cfg = NetworkConfig(2, 1, 1, 3, (1, 1), (0, 0), (0, 0))
    table = solve_backward_induction(cfg)
    assert table.root_value == 11
    traj = run_episode(cfg, PolicySpec.dp(table), OutageTape.constant(cfg, 1.0))
    assert traj.sum_h == [2, 4, 5]
    # brute force over all 4^3 sequences agrees
    best = min(evaluate_fixed_sequence(cfg, seq).total for seq in itertools.product(feasible_actions(cfg), repeat=3))
    assert best == 11


@pytest.mark.parametrize("p", [0.0, 0.3])
def test_horizon_one_is_degenerate(p):
    cfg = NetworkConfig(3, 1, 2, 1, (0.2, 0.3, 0.5), (p,) * 3, (p,) * 3)
    assert solve_backward_induction(cfg).root_value == pytest.approx(1.0)


@pytest.mark.parametrize("pq", [0.1, 0.3])
def test_dp_matches_greedy_exact(pq):
    cfg = NetworkConfig.symmetric(3, 1, 1, 4, pq, pq)
    table = solve_backward_induction(cfg)
    assert abs(table.V - exact_expected_value(cfg, PolicySpec.greedy())) <= 1e-12
    assert exact_expected_value(cfg, PolicySpec.dp(table)) == pytest.approx(table.V, abs=1e-12)


def test_dp_refuses_over_cap():
    with pytest.raises(BudgetExceededError, match="cap of 50"):
        solve_backward_induction(NetworkConfig.symmetric(4, 2, 2, 6, 0.1, 0.1), state_cap=50)


def test_dp_table_round_trip():
    cfg = NetworkConfig(3, 1, 1, 4, (0.5, 0.3, 0.2), (0.1, 0.2, 0.0), (0.0, 0.1, 0.3))
    table = solve_backward_induction(cfg)
    buf = io.StringIO()
    dump_dp_table(table, buf)
    back = load_dp_table(io.StringIO(buf.getvalue()))
    assert back.cfg == cfg
    assert back.root_value == table.root_value
    assert back.n_states == table.n_states


def test_fixed_sequence_oracle():
    cfg = NetworkConfig.symmetric(5, 3, 3, 6)
    greedy = run_episode(cfg, PolicySpec.greedy(), OutageTape.constant(cfg, 1.0))
    res = evaluate_fixed_sequence(cfg, [r.action for r in greedy.records])
    assert list(res.sum_h) == [5, 10, 12, 12, 12, 12]
    assert list(res.weighted_h[:3]) == pytest.approx([1.0, 2.0, 2.4])

    k2 = NetworkConfig.symmetric(2, 1, 1, 7)
    starve = evaluate_fixed_sequence(k2, [feasible_actions(k2)[0]] * 7)
    assert [s.h[1] for s in starve.states] == list(range(1, 8))

    with pytest.raises(ValueError, match="errorless"):
        evaluate_fixed_sequence(NetworkConfig.symmetric(2, 1, 1, 2, 0.1, 0.0), [feasible_actions(k2)[0]] * 2)


def test_exhaustive_minimum_matches_greedy():
    cfg = NetworkConfig.symmetric(3, 1, 1, 4)
    best, seq = exhaustive_minimum(cfg)
    greedy = run_episode(cfg, PolicySpec.greedy(), OutageTape.constant(cfg, 1.0))
    assert best == pytest.approx(sum(r.weighted_sum_h for r in greedy.records))
    assert evaluate_fixed_sequence(cfg, seq).total == pytest.approx(best)
    with pytest.raises(BudgetExceededError):
        exhaustive_minimum(NetworkConfig.symmetric(5, 2, 2, 8), budget=1000)
