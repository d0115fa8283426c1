import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relay_aoi.config import ConfigError, ExperimentConfig, parse_config, render_config
from relay_aoi.core import NetworkConfig


def test_errorless_setup():
    cfg = parse_config("K=5 S=3 U=3 T=20 weights=uniform p=0 q=0 policies=greedy,random seed=1 n_runs=1")
    assert cfg.network == NetworkConfig.symmetric(5, 3, 3, 20)
    assert cfg.policies == ("greedy", "random")
    assert (cfg.seed, cfg.n_runs, cfg.coupled) == (1, 1, False)


def test_scalar_broadcast():
    cfg = parse_config("K=5 S=3 U=3 T=20\np=0.1 q=0.1\n")
    assert cfg.network.p == (0.1,) * 5 and cfg.network.q == (0.1,) * 5


def test_asymmetric_setup_multiline_with_comments():
    text = """
    # general instance
    K = 5
    S = 3
    U = 3
    T = 20
    weights = 0.5,0.3,0.2,0.05,0.05
    p = 0.1,0.1,0.2,0.2,0.3   # sampling links
    q = 0.3,0.2,0.2,0.1,0.1
    policies = greedy,dqn,random
    coupled = true
    out = results/general
    """
    cfg = parse_config(text)
    assert cfg.network.weights == (0.5, 0.3, 0.2, 0.05, 0.05)
    assert cfg.network.q == (0.3, 0.2, 0.2, 0.1, 0.1)
    assert cfg.coupled and cfg.out == "results/general"


@pytest.mark.parametrize(
    "text, line, key",
    [
        ("K=5 S=3 U=3 T=20\nfoo=1", 2, "foo"),
        ("K=5 S=3 U=3 T=20\nweights=0.5,0.5", 2, "weights"),
        ("K=5\nS=5 U=3 T=20", 2, "S"),
        ("K=5 S=3 U=3 T=20\n\np=1.5", 3, "p"),
        ("K=5 S=3 U=3 T=x", 1, "T"),
        ("K=5 S=3 U=3 T=20 policies=greedy,ppo", 1, "policies"),
        ("K=5 S=3 U=3 T=20\nseed=1\nseed=2", 3, "seed"),
        ("K=5 S=3 U=3 T=20 coupled=maybe", 1, "coupled"),
        ("K=5 S=3 U=3 T=20 n_runs=0", 1, "n_runs"),
    ],
)
def test_rejections_name_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert exc.value.key == key
    assert f"line {line}" in str(exc.value)


def test_missing_required_key():
    with pytest.raises(ConfigError, match="'T'"):
        parse_config("K=5 S=3 U=3")


def test_bare_token_rejected():
    with pytest.raises(ConfigError, match="key=value"):
        parse_config("K=5 S=3 U=3 T=20 greedy")


floats = st.floats(0, 0.99, allow_nan=False)


@st.composite
def experiments(draw):
    K = draw(st.integers(2, 7))
    net = NetworkConfig(
        K,
        draw(st.integers(1, K - 1)),
        draw(st.integers(1, K - 1)),
        draw(st.integers(1, 50)),
        draw(st.lists(st.floats(0.001, 10), min_size=K, max_size=K)),
        draw(st.lists(floats, min_size=K, max_size=K)),
        draw(st.lists(floats, min_size=K, max_size=K)),
    )
    return ExperimentConfig(
        net,
        tuple(draw(st.lists(st.sampled_from(["greedy", "random", "dqn", "q_learned", "dp_optimal"]), min_size=1, max_size=4))),
        draw(st.integers(1, 10**6)),
        draw(st.integers(0, 2**32)),
        draw(st.booleans()),
        draw(st.sampled_from(["out", "a/b", "runs_1"])),
        draw(st.sampled_from([None, "fig2", "table1"])),
    )


@settings(max_examples=150, deadline=None)
@given(experiments())
def test_render_round_trip(exp):
    assert parse_config(render_config(exp)) == exp
