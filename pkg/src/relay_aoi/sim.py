"""Episode execution, Monte Carlo aggregation, coupled runs and exact expectation."""

from __future__ import annotations

import dataclasses
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from relay_aoi import streams
from relay_aoi.core import (
    Action,
    AoIState,
    BudgetExceededError,
    NetworkConfig,
    OutageDraws,
    feasible_actions,
    initial_state,
    outcome_patterns,
    sampling_reduction,
    step,
    update_reduction,
    weighted_sum,
)
from relay_aoi.policies.basic import PolicySpec, checked_act

DEFAULT_PATH_CAP = 2**24
CHUNK = 1 << 16
Z95 = 1.959963984540054


class AsymmetricCouplingWarning(UserWarning):
    """Positional coupling does not preserve per-sensor marginals when p or q differ across k."""


@dataclass(frozen=True)
class OutageTape:
    """Uniform variates for one run: ``sample_u[t-1, i]`` and ``update_u[t-1, i]``."""

    seed: int
    run: int
    sample_u: np.ndarray
    update_u: np.ndarray
    rule: str = streams.MIX_ID

    @classmethod
    def derive(cls, cfg: NetworkConfig, seed: int, run: int = 0) -> OutageTape:
        t = np.arange(1, cfg.T + 1)[:, None]
        su = streams.uniforms(seed, run, t, streams.SAMPLE, np.arange(cfg.S)[None, :])
        uu = streams.uniforms(seed, run, t, streams.UPDATE, np.arange(cfg.U)[None, :])
        return cls(seed, run, su, uu)

    @classmethod
    def constant(cls, cfg: NetworkConfig, value: float, seed: int = 0, run: int = 0) -> OutageTape:
        return cls(seed, run, np.full((cfg.T, cfg.S), value), np.full((cfg.T, cfg.U), value))

    def draws(self, cfg: NetworkConfig, t: int, action: Action) -> OutageDraws:
        su, uu = self.sample_u[t - 1], self.update_u[t - 1]
        return OutageDraws(
            tuple(bool(su[i] < cfg.p[k]) for i, k in enumerate(action.sample)),
            tuple(bool(uu[i] < cfg.q[k]) for i, k in enumerate(action.update)),
        )


@dataclass(frozen=True)
class SlotRecord:
    t: int
    state: AoIState
    action: Action
    outage: OutageDraws
    r_sample: int
    r_update: int
    weighted_sum_g: float
    weighted_sum_h: float


@dataclass(frozen=True)
class Trajectory:
    cfg: NetworkConfig
    policy: str
    records: tuple[SlotRecord, ...]
    seed: int = 0
    run: int = 0

    @property
    def sum_g(self) -> list[int]:
        return [sum(r.state.g) for r in self.records]

    @property
    def sum_h(self) -> list[int]:
        return [sum(r.state.h) for r in self.records]

    @property
    def V(self) -> float:
        return math.fsum(r.weighted_sum_h for r in self.records) / len(self.records)


def run_episode(
    cfg: NetworkConfig, policy: PolicySpec, tape: OutageTape, rng: streams.CounterStream | None = None
) -> Trajectory:
    """Roll ``policy`` over slots 1..T, reading outages from ``tape``.

    Policy randomness comes from ``rng``, by default the POLICY lane of the
    tape's ``(seed, run)``; it never touches the outage variates.
    """
    if tape.sample_u.shape[0] < cfg.T or tape.update_u.shape[0] < cfg.T:
        raise ValueError(f"tape covers {tape.sample_u.shape[0]} slots, horizon is {cfg.T}")
    if rng is None:
        rng = streams.CounterStream(tape.seed, tape.run, streams.POLICY)
    state = initial_state(cfg)
    records = []
    for t in range(1, cfg.T + 1):
        action = checked_act(policy, cfg, state, rng)
        draws = tape.draws(cfg, t, action)
        records.append(
            SlotRecord(
                t,
                state,
                action,
                draws,
                sampling_reduction(state, action.sample),
                update_reduction(state, action.update),
                weighted_sum(state, cfg.weights, "relay"),
                weighted_sum(state, cfg.weights, "destination"),
            )
        )
        if t < cfg.T:
            state = step(cfg, state, action, draws)
    return Trajectory(cfg, policy.label, tuple(records), tape.seed, tape.run)


@dataclass
class BatchResult:
    """Per-run, per-slot series; arrays have shape ``(n_runs, T)``."""

    weighted_h: np.ndarray
    weighted_g: np.ndarray
    sum_h: np.ndarray


def _batch_vectorised(cfg: NetworkConfig, policy: PolicySpec, seed: int, runs: np.ndarray) -> BatchResult:
    n, K, T = len(runs), cfg.K, cfg.T
    w = np.array(cfg.weights)
    p = np.array(cfg.p)
    q = np.array(cfg.q)
    g = np.ones((n, K), dtype=np.int64)
    h = np.ones((n, K), dtype=np.int64)
    rows = np.arange(n)[:, None]
    wh = np.empty((n, T))
    wg = np.empty((n, T))
    sh = np.empty((n, T), dtype=np.int64)
    if policy.kind == "random":
        acts = feasible_actions(cfg)
        all_s = np.array([a.sample for a in acts])
        all_u = np.array([a.update for a in acts])
    run_col = runs[:, None]
    for t in range(1, T + 1):
        wh[:, t - 1] = h @ w
        wg[:, t - 1] = g @ w
        sh[:, t - 1] = h.sum(axis=1)
        if t == T:
            break
        if policy.kind == "greedy":
            sidx = np.sort(np.argsort(-(g * w), axis=1, kind="stable")[:, : cfg.S], axis=1)
            uidx = np.sort(np.argsort(-((h - g) * w), axis=1, kind="stable")[:, : cfg.U], axis=1)
        elif policy.kind == "random":
            u = streams.uniforms(seed, runs, t - 1, streams.POLICY, 0)
            ai = np.minimum((u * len(acts)).astype(np.int64), len(acts) - 1)
            sidx, uidx = all_s[ai], all_u[ai]
        else:
            a = policy.params["actions"][t - 1]
            sidx = np.broadcast_to(np.array(a.sample), (n, cfg.S))
            uidx = np.broadcast_to(np.array(a.update), (n, cfg.U))
        s_ok = streams.uniforms(seed, run_col, t, streams.SAMPLE, np.arange(cfg.S)[None, :]) >= p[sidx]
        u_ok = streams.uniforms(seed, run_col, t, streams.UPDATE, np.arange(cfg.U)[None, :]) >= q[uidx]
        g_old = g
        g = g + 1
        h = h + 1
        g[rows, sidx] = np.where(s_ok, 1, g[rows, sidx])
        h[rows, uidx] = np.where(u_ok, g_old[rows, uidx] + 1, h[rows, uidx])
    return BatchResult(wh, wg, sh)


def run_batch(cfg: NetworkConfig, policy: PolicySpec, seed: int, runs: Sequence[int] | np.ndarray) -> BatchResult:
    """Per-slot series for the given run indices; same numbers as :func:`run_episode`."""
    runs = np.asarray(runs, dtype=np.int64)
    if policy.kind in ("greedy", "random", "fixed_sequence"):
        if policy.kind == "fixed_sequence" and len(policy.params["actions"]) < cfg.T - 1:
            raise ValueError("fixed sequence is shorter than the horizon")
        return _batch_vectorised(cfg, policy, seed, runs)
    n, T = len(runs), cfg.T
    wh, wg = np.empty((n, T)), np.empty((n, T))
    sh = np.empty((n, T), dtype=np.int64)
    for i, r in enumerate(runs):
        traj = run_episode(cfg, policy, OutageTape.derive(cfg, seed, int(r)))
        wh[i] = [rec.weighted_sum_h for rec in traj.records]
        wg[i] = [rec.weighted_sum_g for rec in traj.records]
        sh[i] = traj.sum_h
    return BatchResult(wh, wg, sh)


@dataclass
class RunSummary:
    policy: str
    n_runs: int
    seed: int
    mean_weighted_h: np.ndarray
    mean_weighted_g: np.ndarray
    V_mean: float
    V_std: float
    half_width: float
    run_V: np.ndarray = dataclasses.field(repr=False)

    @property
    def std_error(self) -> float:
        return self.V_std / math.sqrt(self.n_runs)


def _summarise(policy: str, seed: int, res: BatchResult) -> RunSummary:
    n, T = res.weighted_h.shape
    run_V = res.weighted_h.sum(axis=1) / T
    std = float(run_V.std(ddof=1)) if n > 1 else 0.0
    return RunSummary(
        policy=policy,
        n_runs=n,
        seed=seed,
        mean_weighted_h=res.weighted_h.mean(axis=0),
        mean_weighted_g=res.weighted_g.mean(axis=0),
        V_mean=float(run_V.mean()),
        V_std=std,
        half_width=Z95 * std / math.sqrt(n),
        run_V=run_V,
    )


def _collect(cfg: NetworkConfig, policy: PolicySpec, n_runs: int, master_seed: int) -> BatchResult:
    parts = [
        run_batch(cfg, policy, master_seed, np.arange(lo, min(lo + CHUNK, n_runs)))
        for lo in range(0, n_runs, CHUNK)
    ]
    return BatchResult(
        np.concatenate([b.weighted_h for b in parts]),
        np.concatenate([b.weighted_g for b in parts]),
        np.concatenate([b.sum_h for b in parts]),
    )


def run_monte_carlo(cfg: NetworkConfig, policy: PolicySpec, n_runs: int, master_seed: int) -> RunSummary:
    """Average of ``n_runs`` independent episodes; run i reads the tape of ``(master_seed, i)``."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    return _summarise(policy.label, master_seed, _collect(cfg, policy, n_runs, master_seed))


@dataclass
class CoupledResult:
    summaries: list[RunSummary]
    reference: str
    # paired[label][run] = V of that policy minus V of the reference, same tape
    paired: dict[str, np.ndarray]
    # violations[label] = number of (run, t) with sum_h(policy) < sum_h(reference)
    violations: dict[str, int]
    first_violation: dict[str, tuple[int, int] | None]


def run_coupled(
    cfg: NetworkConfig, policies: Sequence[PolicySpec], master_seed: int, n_runs: int
) -> CoupledResult:
    """Run every policy on the identical tape per run; the first policy is the reference."""
    if not policies:
        raise ValueError("need at least one policy")
    if not cfg.symmetric_outage:
        warnings.warn(
            "outage probabilities differ across processes; positional coupling does not "
            "preserve per-sensor marginals and pathwise dominance is not expected",
            AsymmetricCouplingWarning,
            stacklevel=2,
        )
    results = [_collect(cfg, pol, n_runs, master_seed) for pol in policies]
    summaries = [_summarise(pol.label, master_seed, r) for pol, r in zip(policies, results)]
    ref = results[0]
    ref_V = summaries[0].run_V
    paired, violations, first = {}, {}, {}
    for pol, res, summ in zip(policies, results, summaries):
        paired[pol.label] = summ.run_V - ref_V
        bad = np.argwhere(res.sum_h < ref.sum_h)
        violations[pol.label] = len(bad)
        first[pol.label] = (int(bad[0][0]), int(bad[0][1]) + 1) if len(bad) else None
    return CoupledResult(summaries, policies[0].label, paired, violations, first)


def exact_expected_value(
    cfg: NetworkConfig, policy: PolicySpec, T: int | None = None, path_cap: int = DEFAULT_PATH_CAP
) -> float:
    """Exact ``V`` by enumerating outage outcomes (and policy randomisation) slot by slot.

    Paths reaching the same state are merged, which leaves the probability-weighted
    sum unchanged.
    """
    if T is not None and T != cfg.T:
        cfg = dataclasses.replace(cfg, T=T)
    # links that cannot fail never branch
    fallible = min(cfg.S, sum(x > 0 for x in cfg.p)) + min(cfg.U, sum(x > 0 for x in cfg.q))
    paths = 2 ** (fallible * (cfg.T - 1))
    if paths > path_cap:
        raise BudgetExceededError("outage path count", paths, path_cap)
    dist: dict[AoIState, float] = {initial_state(cfg): 1.0}
    terms = []
    for t in range(1, cfg.T + 1):
        terms.extend(pr * weighted_sum(s, cfg.weights) for s, pr in dist.items())
        if t == cfg.T:
            break
        nxt: dict[AoIState, float] = defaultdict(float)
        for s, pr in dist.items():
            for pa, a in policy.action_distribution(cfg, s):
                if pa == 0.0:
                    continue
                for po, d in outcome_patterns(cfg, a):
                    nxt[step(cfg, s, a, d)] += pr * pa * po
        dist = nxt
    return math.fsum(terms) / cfg.T
