import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relay_aoi.core import Action, AoIState, NetworkConfig, feasible_actions, initial_state
from relay_aoi.policies import PolicySpec, greedy_action, random_action
from relay_aoi.streams import CounterStream


def test_greedy_table1_slot2():
    cfg = NetworkConfig.symmetric(5, 3, 3, 20)
    a = greedy_action(AoIState(2, (1, 1, 1, 2, 2), (2,) * 5), cfg)
    assert a == Action((0, 3, 4), (0, 1, 2))


def test_greedy_total_tie_is_canonical():
    cfg = NetworkConfig.symmetric(5, 2, 3, 20)
    assert greedy_action(initial_state(cfg), cfg) == Action((0, 1), (0, 1, 2))


def test_greedy_weighted_hand_case():
    cfg = NetworkConfig(3, 1, 1, 10, (0.5, 0.3, 0.2), (0,) * 3, (0,) * 3)
    # w*g = [0.5, 0.6, 0.4]; w*(h-g) = [1.0, 0.0, 0.4]
    assert greedy_action(AoIState(4, (1, 2, 2), (3, 2, 4)), cfg) == Action((1,), (0,))


@st.composite
def weighted_states(draw):
    K = draw(st.integers(2, 8))
    S = draw(st.integers(1, K - 1))
    U = draw(st.integers(1, K - 1))
    w = draw(st.lists(st.integers(0, 20), min_size=K, max_size=K).filter(any))
    g = draw(st.lists(st.integers(1, 15), min_size=K, max_size=K))
    h = [x + draw(st.integers(0, 10)) for x in g]
    return NetworkConfig(K, S, U, 30, w, (0,) * K, (0,) * K), AoIState(2, tuple(g), tuple(h))


@settings(max_examples=150, deadline=None)
@given(weighted_states())
def test_greedy_maximises_weighted_reductions(case):
    cfg, s = case
    a = greedy_action(s, cfg)
    w = cfg.weights
    best_s = max(sum(w[k] * s.g[k] for k in c) for c in itertools.combinations(range(cfg.K), cfg.S))
    best_u = max(sum(w[k] * (s.h[k] - s.g[k]) for k in c) for c in itertools.combinations(range(cfg.K), cfg.U))
    assert sum(w[k] * s.g[k] for k in a.sample) == pytest.approx(best_s)
    assert sum(w[k] * (s.h[k] - s.g[k]) for k in a.update) == pytest.approx(best_u)


@settings(max_examples=60, deadline=None)
@given(weighted_states(), st.sampled_from([0.25, 2.0, 8.0]))
def test_greedy_scale_invariant(case, c):
    cfg, s = case
    scaled = NetworkConfig(cfg.K, cfg.S, cfg.U, cfg.T, [c * w for w in cfg.weights], cfg.p, cfg.q)
    assert greedy_action(s, scaled) == greedy_action(s, cfg)


def test_random_action_uniform_chi_square():
    cfg = NetworkConfig.symmetric(3, 1, 1, 4)
    rng = CounterStream(11, 0)
    n = 90_000
    counts = Counter(random_action(cfg, rng) for _ in range(n))
    assert len(counts) == 9
    expected = n / 9
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    # 8 degrees of freedom, 0.999 quantile is 26.1
    assert chi2 < 26.1
    sigma = np.sqrt(n * (1 / 9) * (8 / 9))
    assert all(abs(c - expected) < 3 * sigma for c in counts.values())


def test_random_action_k2_covers_all_four():
    cfg = NetworkConfig.symmetric(2, 1, 1, 4)
    rng = CounterStream(0, 0)
    assert {random_action(cfg, rng) for _ in range(200)} == set(feasible_actions(cfg))


def test_random_action_deterministic_at_position():
    cfg = NetworkConfig.symmetric(5, 3, 3, 4)
    a = random_action(cfg, CounterStream(3, 1, position=17))
    b = random_action(cfg, CounterStream(3, 1, position=17))
    assert a == b


def test_fixed_sequence_and_distribution():
    cfg = NetworkConfig.symmetric(3, 1, 1, 2)
    acts = feasible_actions(cfg)
    pol = PolicySpec.fixed([acts[4], acts[2]], "seq")
    assert pol.label == "seq"
    assert pol.act(cfg, AoIState(2, (1,) * 3, (1,) * 3)) == acts[2]
    with pytest.raises(ValueError, match="no action"):
        pol.act(cfg, AoIState(3, (1,) * 3, (1,) * 3))
    dist = PolicySpec.random().action_distribution(cfg, initial_state(cfg))
    assert len(dist) == 9 and sum(p for p, _ in dist) == pytest.approx(1.0)
    assert PolicySpec.greedy().action_distribution(cfg, initial_state(cfg)) == [(1.0, acts[0])]


def test_random_policy_requires_a_source():
    cfg = NetworkConfig.symmetric(3, 1, 1, 2)
    with pytest.raises(ValueError):
        PolicySpec.random().act(cfg, initial_state(cfg))
