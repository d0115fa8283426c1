"""Acceptance criteria, one test each. Every test records a ``CRITERION n: PASS|FAIL``
line that the terminal summary prints (see conftest.py); ``python tests/test_acceptance.py``
runs them without pytest."""

import math
import time
from contextlib import contextmanager

import pytest

from relay_aoi import presets
from relay_aoi.cli import main
from relay_aoi.core import NetworkConfig
from relay_aoi.policies import PolicySpec, QParams, solve_backward_induction, train_q_learning
from relay_aoi.sim import OutageTape, exact_expected_value, run_episode, run_monte_carlo
from relay_aoi.theory import check_closed_forms, min_sum_g, min_sum_h
from relay_aoi.verify import (
    VerifyOptions,
    coupling_reports,
    theorem2_instances,
    theorem2_reports,
    theorem4_reports,
    trajectory_reports,
)

RESULTS: list[str] = []


@contextmanager
def criterion(n: int, title: str, limit: float | None = None):
    t0 = time.perf_counter()
    detail = ""
    try:
        yield
        took = time.perf_counter() - t0
        if limit is not None and took >= limit:
            detail = f"runtime {took:.2f}s over {limit:g}s"
            raise AssertionError(detail)
        RESULTS.append(f"CRITERION {n}: PASS  {title} ({took:.2f}s)")
    except BaseException as exc:
        detail = detail or (str(exc).splitlines() or [type(exc).__name__])[0]
        RESULTS.append(f"CRITERION {n}: FAIL  {title} ({detail[:160]})")
        raise


def test_criterion_1_table1_trace():
    with criterion(1, "golden greedy trace, K=5 S=U=3", limit=1.0):
        cfg = NetworkConfig.symmetric(5, 3, 3, 6)
        traj = run_episode(cfg, PolicySpec.greedy(), OutageTape.constant(cfg, 1.0))
        assert traj.sum_g == [5, 7, 7, 7, 7, 7]
        assert traj.sum_h == [5, 10, 12, 12, 12, 12]


def test_criterion_2_closed_forms():
    with criterion(2, "closed-form sums for 2<=K<=8, S=U<K", limit=5.0):
        n = 0
        for K in range(2, 9):
            for S in range(1, K):
                T = 3 * (math.ceil(K / S) + 1)
                cfg = NetworkConfig.symmetric(K, S, S, T)
                traj = run_episode(cfg, PolicySpec.greedy(), OutageTape.constant(cfg, 1.0))
                assert traj.sum_g == [min_sum_g(K, S, t) for t in range(1, T + 1)], (K, S)
                assert traj.sum_h == [min_sum_h(K, S, t) for t in range(1, T + 1)], (K, S)
                assert check_closed_forms(traj).passed
                n += 1
        assert n == 28


def test_criterion_3_exhaustive_oracle():
    with criterion(3, "greedy equals exhaustive minimum on every small errorless instance", limit=60.0):
        instances = {cfg.describe() for cfg in theorem2_instances()}
        assert {"K=3,S=1,U=1,T=4", "K=4,S=1,U=1,T=4"} <= instances
        reports = theorem2_reports()
        failed = [r.to_line() for r in reports if not r.passed]
        assert not failed, failed[:3]
        assert len(reports) == len(instances)


def test_criterion_4_error_prone_optimality():
    with criterion(4, "greedy exact value equals DP optimum and beats random", limit=120.0):
        for pq in (0.1, 0.3):
            cfg = NetworkConfig.symmetric(3, 1, 1, 4, pq, pq)
            vg = exact_expected_value(cfg, PolicySpec.greedy())
            assert vg <= solve_backward_induction(cfg).V + 1e-12
            assert vg < exact_expected_value(cfg, PolicySpec.random())
        failed = [r.to_line() for r in theorem4_reports() if not r.passed]
        assert not failed, failed


def test_criterion_5_property_suites():
    with criterion(5, "relay-ordering on 1000 error-prone, sum identities and reduction balance on 500 errorless"):
        reports = trajectory_reports(VerifyOptions())
        by_check: dict[str, int] = {}
        for r in reports:
            by_check[r.check] = by_check.get(r.check, 0) + 1
        assert by_check["lemma1"] == 1000 + 500
        assert by_check["lemma2"] == by_check["prop1"] == 1000
        assert by_check["balance"] == 500
        failed = [r.to_line() for r in reports if not r.passed]
        assert not failed, failed[:3]


def test_criterion_6_coupled_dominance():
    # Expected to fail: see the ledger. Pathwise dominance does not hold for every
    # (run, t) under a shared outage tape, though greedy wins in expectation.
    with criterion(6, "pathwise coupled dominance of random over greedy, 1000 runs"):
        (rep,) = coupling_reports(VerifyOptions(coupled_runs=1000))
        assert rep.passed, f"{rep.to_line()}"


def test_criterion_7_monte_carlo_vs_exact():
    with criterion(7, "Monte Carlo within 4 SE of exact value, 10^6 runs"):
        cfg = NetworkConfig.symmetric(3, 1, 1, 4, 0.1, 0.1)
        exact = exact_expected_value(cfg, PolicySpec.greedy())
        mc = run_monte_carlo(cfg, PolicySpec.greedy(), 10**6, 7)
        assert abs(mc.V_mean - exact) <= 4 * mc.std_error, (mc.V_mean, exact, mc.std_error)


def test_criterion_8_errorless_value_and_ordering():
    with criterion(8, "errorless V=2.31, greedy<learned<random on presets, tabular within 5%"):
        cfg = NetworkConfig.symmetric(5, 3, 3, 20)
        traj = run_episode(cfg, PolicySpec.greedy(), OutageTape.constant(cfg, 1.0))
        assert sum(traj.sum_h) == 231
        assert abs(traj.V - 2.31) <= 1e-12
        assert abs(exact_expected_value(cfg, PolicySpec.greedy()) - 2.31) <= 1e-12
        for instance in presets.INSTANCES:
            g, learned, r = presets.instance_summaries(instance, 10_000, 1)
            assert g.V_mean < learned.V_mean < r.V_mean, (instance, g.V_mean, learned.V_mean, r.V_mean)
        small = NetworkConfig.symmetric(3, 1, 1, 10)
        table = train_q_learning(small, QParams(episodes=50_000, clip=10, eval_every=10**9), seed=0)
        v_learned = exact_expected_value(small, PolicySpec.learned(table))
        v_greedy = exact_expected_value(small, PolicySpec.greedy())
        assert v_learned <= 1.05 * v_greedy, (v_learned, v_greedy)


def test_criterion_9_determinism(tmp_path):
    with criterion(9, "identical config and seed give byte-identical CSV"):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "K=5 S=3 U=3 T=20\nweights=0.5,0.3,0.2,0.05,0.05\np=0.1,0.1,0.2,0.2,0.3\n"
            "q=0.3,0.2,0.2,0.1,0.1\npolicies=greedy,random,q_learned\nseed=3\nn_runs=500\n"
        )
        outs = []
        for d in ("a", "b"):
            out = tmp_path / d
            assert main(["simulate", str(cfg), "--out", str(out), "--trajectories", "3", "--episodes", "500"]) == 0
            assert main(["reproduce", "fig5", "--out", str(out), "--n-runs", "100", "--episodes", "300"]) == 0
            outs.append(out)
        names = sorted(p.name for p in outs[0].iterdir())
        assert names == sorted(p.name for p in outs[1].iterdir())
        assert [n for n in names if n.endswith(".csv")]
        for n in names:
            assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes(), n


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except BaseException:
                pass
    print("\n".join(RESULTS))
    sys.exit(0 if all(": PASS" in r for r in RESULTS) else 1)
