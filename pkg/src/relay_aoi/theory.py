"""Closed forms and instance-level checks for the errorless symmetric analysis.

Every check returns a :class:`CheckReport`; a failing report carries the first
counterexample as ``(t, k, lhs, rhs)`` (``k`` is ``None`` for whole-vector
identities).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from relay_aoi.core import BudgetExceededError, NetworkConfig
from relay_aoi.sim import Trajectory


@dataclass(frozen=True)
class CheckReport:
    check: str
    instance: str
    passed: bool
    counterexample: tuple | None = None
    note: str = ""

    def __post_init__(self) -> None:
        if not self.passed and self.counterexample is None:
            raise ValueError("a failing report must carry a counterexample")

    def to_line(self) -> str:
        """``check<TAB>instance<TAB>PASS|FAIL<TAB>t=..,k=..,lhs=..,rhs=..`` (``-`` when passing)."""
        if self.counterexample is None:
            cx = "-"
        else:
            t, k, lhs, rhs = self.counterexample
            cx = f"t={t},k={'-' if k is None else k},lhs={lhs},rhs={rhs}"
        line = f"{self.check}\t{self.instance}\t{'PASS' if self.passed else 'FAIL'}\t{cx}"
        return line + (f"\t{self.note}" if self.note else "")


def _domain(K: int, n: int, t: int, label: str) -> None:
    if not 1 <= n < K:
        raise ValueError(f"{label} must satisfy 1 <= {label} < K, got {label}={n}, K={K}")
    if t < 1:
        raise ValueError(f"t must be positive, got {t}")


def greedy_reduction_formulas(K: int, S: int, U: int, t: int) -> tuple[int, int]:
    _domain(K, S, t, "S")
    _domain(K, U, t, "U")
    return min(t * S, K), min((t - 1) * U, K)


def min_sum_g(K: int, S: int, t: int) -> int:
    """Minimum errorless symmetric sum of relay AoI at slot t: ``tK - sum_{tau<t} min(tau S, K)``."""
    _domain(K, S, t, "S")
    tp = math.ceil(K / S)
    if t >= tp:
        return tp * K - tp * (tp - 1) * S // 2
    return t * K - t * (t - 1) * S // 2


def min_sum_h(K: int, U: int, t: int) -> int:
    """Minimum errorless symmetric sum of destination AoI: ``tK - sum_{tau<t} min((tau-1) U, K)``."""
    _domain(K, U, t, "U")
    tpp = math.ceil(K / U) + 1
    if t >= tpp:
        return tpp * K - (tpp - 1) * (tpp - 2) * U // 2
    return t * K - (t - 1) * (t - 2) * U // 2


def printed_min_sum_g(K: int, S: int, t: int) -> int:
    """The indicator form as printed; only agrees with :func:`min_sum_g` for ``t >= ceil(K/S)``."""
    tp = math.ceil(K / S)
    ind = 1 if t >= tp + 1 else 0
    return (1 - ind) * t * K + ind * tp * K - tp * (tp - 1) * S // 2


def printed_min_sum_h(K: int, U: int, t: int) -> int:
    tpp = math.ceil(K / U) + 1
    ind = 1 if t >= tpp + 1 else 0
    return (1 - ind) * t * K + ind * tpp * K - (tpp - 1) * (tpp - 2) * U // 2


def _require_errorless(traj: Trajectory, check: str) -> None:
    if not traj.cfg.errorless:
        raise ValueError(f"{check} holds only for errorless trajectories (p = q = 0)")


def check_lemma1(traj: Trajectory) -> CheckReport:
    recs = traj.records
    if len(recs) < 2:
        raise ValueError("need a trajectory of length >= 2")
    for prev, cur in zip(recs, recs[1:]):
        for k in range(traj.cfg.K):
            h = cur.state.h[k]
            if h < prev.state.g[k] + 1:
                return CheckReport("lemma1", _inst(traj), False, (cur.t, k, h, prev.state.g[k] + 1))
            if h < cur.state.g[k]:
                return CheckReport("lemma1", _inst(traj), False, (cur.t, k, h, cur.state.g[k]))
    return CheckReport("lemma1", _inst(traj), True)


def check_lemma2(traj: Trajectory) -> CheckReport:
    _require_errorless(traj, "lemma2")
    K = traj.cfg.K
    acc_s = acc_u = 0
    for rec in traj.records:
        t = rec.t
        if sum(rec.state.g) != t * K - acc_s:
            return CheckReport("lemma2", _inst(traj), False, (t, None, sum(rec.state.g), t * K - acc_s))
        if sum(rec.state.h) != t * K - acc_u:
            return CheckReport("lemma2", _inst(traj), False, (t, None, sum(rec.state.h), t * K - acc_u))
        acc_s += rec.r_sample
        acc_u += rec.r_update
    return CheckReport("lemma2", _inst(traj), True)


def _accumulations(traj: Trajectory):
    """Yield ``(t, sum_{tau<=t-1} R_sample, sum_{tau<=t} R_update)``."""
    acc_s = acc_u = 0
    for rec in traj.records:
        acc_u += rec.r_update
        yield rec.t, acc_s, acc_u
        acc_s += rec.r_sample


def check_prop1(traj: Trajectory) -> CheckReport:
    _require_errorless(traj, "prop1")
    for t, s, u in _accumulations(traj):
        if s < u:
            return CheckReport("prop1", _inst(traj), False, (t, None, s, u))
    return CheckReport("prop1", _inst(traj), True)


def check_balance(traj: Trajectory) -> CheckReport:
    """Equality form of the accumulated reductions, required of an optimal policy."""
    _require_errorless(traj, "balance")
    for t, s, u in _accumulations(traj):
        if s != u:
            return CheckReport("balance", _inst(traj), False, (t, None, s, u))
    return CheckReport("balance", _inst(traj), True)


def double_accumulated_sampling(r_sample: list[int] | tuple[int, ...], T: int) -> int:
    """``sum_{t=1..T} sum_{tau=1..t-2} R_sample(tau)``."""
    return sum(sum(r_sample[: max(t - 2, 0)]) for t in range(1, T + 1))


def max_double_accumulated_sampling(cfg: NetworkConfig, budget: int = 10**5) -> int:
    """Exhaustive maximum over sampling sequences (update choices cannot affect it).

    Only sampling decisions at slots 1..T-2 enter the objective, so the search
    covers ``C(K,S)^(T-2)`` sequences.
    """
    depth = max(cfg.T - 2, 0)
    size = math.comb(cfg.K, cfg.S) ** depth
    if size > budget:
        raise BudgetExceededError("sampling sequence count", size, budget)
    subsets = list(itertools.combinations(range(cfg.K), cfg.S))
    best = 0

    def dfs(g: tuple[int, ...], d: int, total: int) -> None:
        nonlocal best
        if d == depth:
            best = max(best, total)
            return
        for sub in subsets:
            r = sum(g[k] for k in sub)
            ng = tuple(1 if k in sub else g[k] + 1 for k in range(cfg.K))
            # R(d+1) counts for every t >= d+3, i.e. T - (d+2) slots
            dfs(ng, d + 1, total + r * (cfg.T - d - 2))

    dfs((1,) * cfg.K, 0, 0)
    return best


def check_theorem1_optimality(cfg: NetworkConfig, traj: Trajectory, search_budget: int = 10**5) -> CheckReport:
    """Both optimality conditions: maximal double-accumulated sampling reduction and balance."""
    _require_errorless(traj, "theorem1")
    if not cfg.uniform_weights or cfg.S != cfg.U:
        raise ValueError("theorem1 applies to symmetric instances (uniform weights, S = U)")
    got = double_accumulated_sampling([r.r_sample for r in traj.records], cfg.T)
    best = max_double_accumulated_sampling(cfg, search_budget)
    if got != best:
        return CheckReport("theorem1", _inst(traj), False, (cfg.T, None, got, best), "sampling condition")
    bal = check_balance(traj)
    if not bal.passed:
        return CheckReport("theorem1", _inst(traj), False, bal.counterexample, "balance condition")
    return CheckReport("theorem1", _inst(traj), True)


def check_closed_forms(traj: Trajectory) -> CheckReport:
    """Greedy sums against :func:`min_sum_g`/:func:`min_sum_h`; printed-form mismatches become a note."""
    _require_errorless(traj, "closed_forms")
    cfg = traj.cfg
    off = []
    for rec in traj.records:
        t = rec.t
        for got, want, printed in (
            (sum(rec.state.g), min_sum_g(cfg.K, cfg.S, t), printed_min_sum_g(cfg.K, cfg.S, t)),
            (sum(rec.state.h), min_sum_h(cfg.K, cfg.U, t), printed_min_sum_h(cfg.K, cfg.U, t)),
        ):
            if got != want:
                return CheckReport("closed_forms", _inst(traj), False, (t, None, got, want))
            if printed != want:
                off.append(t)
    note = f"printed indicator form differs at t={sorted(set(off))}" if off else ""
    return CheckReport("closed_forms", _inst(traj), True, note=note)


def _inst(traj: Trajectory) -> str:
    cfg = traj.cfg
    tag = "errorless" if cfg.errorless else f"p={max(cfg.p)},q={max(cfg.q)}"
    return f"{cfg.describe()},{tag},policy={traj.policy},seed={traj.seed},run={traj.run}"
