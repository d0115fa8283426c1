"""Instance sweep behind the ``verify`` command."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from relay_aoi.core import NetworkConfig, feasible_actions, initial_state
from relay_aoi.policies import PolicySpec, exhaustive_minimum, solve_backward_induction
from relay_aoi.sim import OutageTape, exact_expected_value, run_coupled, run_episode
from relay_aoi.theory import (
    CheckReport,
    check_balance,
    check_closed_forms,
    check_lemma1,
    check_lemma2,
    check_prop1,
    check_theorem1_optimality,
)

EXHAUSTIVE_BUDGET = 10**5


@dataclass(frozen=True)
class VerifyOptions:
    n_error_prone: int = 1000
    n_errorless: int = 500
    seed: int = 2024
    max_K: int = 6
    coupling: bool = False
    coupled_runs: int = 1000


def random_instance(rng: np.random.Generator, max_K: int, errorless: bool, symmetric: bool) -> NetworkConfig:
    K = int(rng.integers(2, max_K + 1))
    S = int(rng.integers(1, K))
    U = S if symmetric else int(rng.integers(1, K))
    T = int(rng.integers(2, 13))
    if symmetric:
        weights = (1.0 / K,) * K
    else:
        weights = tuple(float(x) for x in rng.random(K) + 0.01)
    if errorless:
        p = q = (0.0,) * K
    else:
        p = tuple(float(x) for x in rng.uniform(0.0, 0.9, K))
        q = tuple(float(x) for x in rng.uniform(0.0, 0.9, K))
    return NetworkConfig(K, S, U, T, weights, p, q)


def theorem2_instances(budget: int = EXHAUSTIVE_BUDGET) -> Iterator[NetworkConfig]:
    """Every errorless symmetric (K, S=U, T) whose sequence count ``(C(K,S)^2)^T`` fits ``budget``."""
    K = 2
    while K * K <= budget:
        for S in range(1, K):
            n = math.comb(K, S) ** 2
            T = 1
            while n**T <= budget:
                yield NetworkConfig.symmetric(K, S, S, T)
                T += 1
        K += 1


def _pair(name: str, inst: str, got: float, want: float, ok: bool, T: int) -> CheckReport:
    return CheckReport(name, inst, ok, None if ok else (T, None, got, want))


def theorem2_reports(budget: int = EXHAUSTIVE_BUDGET) -> list[CheckReport]:
    out = []
    for cfg in theorem2_instances(budget):
        greedy = run_episode(cfg, PolicySpec.greedy(), OutageTape.constant(cfg, 1.0))
        total = sum(sum(r.state.h) for r in greedy.records)
        best, _ = exhaustive_minimum(cfg, budget)
        # uniform weights 1/K: compare unweighted integer sums
        best_int = round(best * cfg.K)
        out.append(_pair("theorem2", cfg.describe() + ",errorless", total, best_int, total == best_int, cfg.T))
    return out


def theorem4_reports(pq_values=(0.1, 0.3), tol: float = 1e-12) -> list[CheckReport]:
    out = []
    for pq in pq_values:
        cfg = NetworkConfig.symmetric(3, 1, 1, 4, pq, pq)
        inst = f"{cfg.describe()},p=q={pq}"
        vg = exact_expected_value(cfg, PolicySpec.greedy())
        vdp = solve_backward_induction(cfg).V
        vr = exact_expected_value(cfg, PolicySpec.random())
        out.append(_pair("theorem4_dp", inst, vg, vdp, vg <= vdp + tol, cfg.T))
        out.append(_pair("theorem4_random", inst, vg, vr, vg < vr, cfg.T))
        first = PolicySpec.greedy().act(cfg, initial_state(cfg))
        worst_gap, arg = math.inf, None
        for tail in itertools.product(feasible_actions(cfg), repeat=cfg.T - 1):
            v = exact_expected_value(cfg, PolicySpec.fixed([first, *tail]))
            if v - vg < worst_gap:
                worst_gap, arg = v - vg, v
        out.append(_pair("theorem4_sequences", inst, vg, arg, worst_gap >= -tol, cfg.T))
    return out


def trajectory_reports(opts: VerifyOptions) -> list[CheckReport]:
    rng = np.random.default_rng(opts.seed)
    out = []
    for i in range(opts.n_error_prone):
        cfg = random_instance(rng, opts.max_K, errorless=False, symmetric=False)
        traj = run_episode(cfg, PolicySpec.random(), OutageTape.derive(cfg, opts.seed, i))
        out.append(check_lemma1(traj))
    for i in range(opts.n_errorless):
        cfg = random_instance(rng, opts.max_K, errorless=True, symmetric=True)
        tape = OutageTape.derive(cfg, opts.seed, i)
        rand = run_episode(cfg, PolicySpec.random(), tape)
        greedy = run_episode(cfg, PolicySpec.greedy(), tape)
        out += [check_lemma1(rand), check_lemma2(rand), check_prop1(rand)]
        out += [check_lemma2(greedy), check_prop1(greedy), check_balance(greedy)]
    return out


def closed_form_reports(max_K: int = 8) -> list[CheckReport]:
    out = []
    for K in range(2, max_K + 1):
        for S in range(1, K):
            T = 3 * (math.ceil(K / S) + 1)
            cfg = NetworkConfig.symmetric(K, S, S, T)
            out.append(check_closed_forms(run_episode(cfg, PolicySpec.greedy(), OutageTape.constant(cfg, 1.0))))
    return out


def theorem1_reports() -> list[CheckReport]:
    out = []
    for K, S, T in [(3, 1, 4), (3, 2, 6), (4, 1, 6), (4, 2, 4), (5, 3, 6), (5, 2, 6), (6, 3, 5)]:
        cfg = NetworkConfig.symmetric(K, S, S, T)
        traj = run_episode(cfg, PolicySpec.greedy(), OutageTape.constant(cfg, 1.0))
        out.append(check_theorem1_optimality(cfg, traj))
    # a sequence that starves the last sensor must fail the sampling condition
    cfg = NetworkConfig.symmetric(3, 1, 1, 4)
    starve = [feasible_actions(cfg)[0]] * cfg.T
    traj = run_episode(cfg, PolicySpec.fixed(starve, "starve"), OutageTape.constant(cfg, 1.0))
    rep = check_theorem1_optimality(cfg, traj)
    cx = None if not rep.passed else (cfg.T, None, "PASS", "FAIL expected")
    out.append(CheckReport("theorem1_rejects_starving", rep.instance, not rep.passed, cx))
    return out


def coupling_reports(opts: VerifyOptions) -> list[CheckReport]:
    cfg = NetworkConfig.symmetric(5, 3, 3, 20, 0.1, 0.1)
    res = run_coupled(cfg, [PolicySpec.greedy(), PolicySpec.random()], opts.seed, opts.coupled_runs)
    n = res.violations["random"]
    cx, note = None, ""
    if n:
        run, t = res.first_violation["random"]
        tape = OutageTape.derive(cfg, opts.seed, run)
        rand = run_episode(cfg, PolicySpec.random(), tape).sum_h[t - 1]
        greedy = run_episode(cfg, PolicySpec.greedy(), tape).sum_h[t - 1]
        # lhs is random's sum of destination AoI, rhs greedy's, on the shared tape
        cx = (t, None, rand, greedy)
        note = f"first in run {run}; {n} violating (run, t) pairs"
    inst = f"{cfg.describe()},p=q=0.1,runs={opts.coupled_runs}"
    return [CheckReport("coupled_dominance", inst, n == 0, cx, note)]


def run_verify(opts: VerifyOptions = VerifyOptions()) -> list[CheckReport]:
    reports = closed_form_reports()
    reports += theorem1_reports()
    reports += theorem2_reports()
    reports += theorem4_reports()
    reports += trajectory_reports(opts)
    if opts.coupling:
        reports += coupling_reports(opts)
    return reports
