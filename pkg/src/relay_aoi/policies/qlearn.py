"""Episodic tabular Q-learning over clipped AoI states.

The base per-step reward is ``-sum_k w_k h_k(t+1) / T`` with no discount; its
episode return differs from ``-V`` only by the slot-1 term, which no action can
change. With ``shaped=True`` (default) it is shifted by the potential
``Phi(s) = -(cost of never updating again) / T``, which gives

    r = (T - t) / T * sum_k w_k (h_k(t) + 1 - h_k(t+1))

i.e. the weighted update reduction times the number of remaining slots it helps.
``Phi`` vanishes at the horizon, so returns change by a constant and the optimal
policy is unchanged. The shaped reward is nonnegative, which makes the zero
initial table pessimistic instead of optimistic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from relay_aoi.core import (
    Action,
    AoIState,
    NetworkConfig,
    OutageDraws,
    feasible_actions,
    initial_state,
    step,
    weighted_sum,
)
from relay_aoi.policies.basic import UniformSource, random_action

log = logging.getLogger(__name__)

StateKey = tuple[int, tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class QParams:
    episodes: int = 50_000
    alpha: float = 0.1
    epsilon: float = 0.5
    # linear decay from epsilon to epsilon_final over the episodes; None keeps it fixed
    epsilon_final: float | None = None
    # step size max(alpha, 1/n(s, a)): the first visit overwrites the zero init
    visit_decay: bool = True
    shaped: bool = True
    clip: int | None = None  # None -> min(T, 12)
    with_time: bool = True
    eval_every: int | None = None  # None -> episodes // 20
    eval_runs: int = 200

    def clip_for(self, cfg: NetworkConfig) -> int:
        return self.clip if self.clip is not None else min(cfg.T, 12)


@dataclass
class QTable:
    cfg: NetworkConfig
    clip: int
    alpha: float
    epsilon: float
    episodes: int
    with_time: bool = True
    values: dict[StateKey, np.ndarray] = field(default_factory=dict)
    curve: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.clip < 2:
            raise ValueError(f"clip cap must be at least 2, got {self.clip}")

    def key(self, state: AoIState) -> StateKey:
        c = self.clip
        t = state.t if self.with_time else 0
        return t, tuple(min(x, c) for x in state.g), tuple(min(x, c) for x in state.h)

    def row(self, state: AoIState) -> np.ndarray | None:
        return self.values.get(self.key(state))


def best_action(table: QTable, state: AoIState) -> Action:
    """Argmax action at the clipped state; ties and unseen states go to canonical order."""
    actions = feasible_actions(table.cfg)
    row = table.row(state)
    if row is None:
        return actions[0]
    return actions[int(np.argmax(row))]


def q_action(table: QTable, state: AoIState, epsilon: float, rng: UniformSource | None) -> Action:
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("epsilon > 0 needs a uniform source")
        if rng.random() < epsilon:
            return random_action(table.cfg, rng)
    return best_action(table, state)


def _evaluate(table: QTable, runs: int, seed: int) -> float:
    from relay_aoi.policies.basic import PolicySpec
    from relay_aoi.sim import run_monte_carlo

    n = 1 if table.cfg.errorless else runs
    return run_monte_carlo(table.cfg, PolicySpec.learned(table), n, seed).V_mean


def train_q_learning(cfg: NetworkConfig, params: QParams = QParams(), seed: int = 0) -> QTable:
    if params.episodes < 1:
        raise ValueError("episode count must be at least 1")
    table = QTable(cfg, params.clip_for(cfg), params.alpha, params.epsilon, params.episodes, params.with_time)
    rng = np.random.default_rng(seed)
    actions = feasible_actions(cfg)
    n_act = len(actions)
    p = np.array(cfg.p)
    q = np.array(cfg.q)
    eval_every = params.eval_every or max(1, params.episodes // 20)
    alpha, eps, T = params.alpha, params.epsilon, cfg.T
    values = table.values
    counts: dict[StateKey, np.ndarray] = {}

    eps0 = eps
    eps1 = params.epsilon_final if params.epsilon_final is not None else eps0
    span = max(params.episodes - 1, 1)

    for ep in range(1, params.episodes + 1):
        eps = eps0 + (eps1 - eps0) * (ep - 1) / span
        state = initial_state(cfg)
        key = table.key(state)
        while state.t < T:
            row = values.get(key)
            if row is None:
                row = values[key] = np.zeros(n_act)
                counts[key] = np.zeros(n_act, dtype=np.int64)
            if eps > 0.0 and rng.random() < eps:
                ai = int(rng.integers(n_act))
            else:
                ai = int(np.argmax(row))
            a = actions[ai]
            u = rng.random(cfg.S + cfg.U)
            draws = OutageDraws(
                tuple(bool(x) for x in u[: cfg.S] < p[list(a.sample)]),
                tuple(bool(x) for x in u[cfg.S :] < q[list(a.update)]),
            )
            nxt = step(cfg, state, a, draws)
            if params.shaped:
                gain = sum(w * (h0 + 1 - h1) for w, h0, h1 in zip(cfg.weights, state.h, nxt.h))
                reward = (T - state.t) / T * gain
            else:
                reward = -weighted_sum(nxt, cfg.weights) / T
            nkey = table.key(nxt)
            if nxt.t < T:
                nrow = values.get(nkey)
                target = reward + (float(nrow.max()) if nrow is not None else 0.0)
            else:
                target = reward
            cnt = counts[key]
            cnt[ai] += 1
            lr = max(alpha, 1.0 / cnt[ai]) if params.visit_decay else alpha
            row[ai] += lr * (target - row[ai])
            state, key = nxt, nkey
        if ep % eval_every == 0 or ep == params.episodes:
            v = _evaluate(table, params.eval_runs, seed + 1)
            table.curve.append((ep, v))
            log.debug("episode %d: V=%.6f states=%d", ep, v, len(values))
    return table


def dump_q_table(table: QTable, fh: TextIO) -> None:
    """One line per entry: ``t g_0..g_{K-1} h_0..h_{K-1} action_index value``."""
    from relay_aoi.policies.dp import _header

    cfg = table.cfg
    for line in _header(cfg, "q-table"):
        fh.write(line + "\n")
    fh.write(
        f"# clip={table.clip} alpha={table.alpha!r} epsilon={table.epsilon!r} "
        f"episodes={table.episodes} with_time={int(table.with_time)}\n"
    )
    fh.write("# columns: t g[K] h[K] action_index value\n")
    for key in sorted(table.values):
        t, g, h = key
        prefix = " ".join(map(str, (t, *g, *h)))
        for ai, v in enumerate(table.values[key]):
            fh.write(f"{prefix} {ai} {float(v)!r}\n")


def load_q_table(fh: TextIO) -> QTable:
    from relay_aoi.policies.dp import _parse_header

    lines = fh.read().splitlines()
    cfg, fields = _parse_header([ln for ln in lines if ln.startswith("#")])
    table = QTable(
        cfg,
        int(fields["clip"]),
        float(fields["alpha"]),
        float(fields["epsilon"]),
        int(fields["episodes"]),
        bool(int(fields.get("with_time", "1"))),
    )
    n_act = cfg.n_actions
    K = cfg.K
    for ln in lines:
        if not ln or ln.startswith("#"):
            continue
        tok = ln.split()
        ints = list(map(int, tok[: 1 + 2 * K]))
        key = (ints[0], tuple(ints[1 : 1 + K]), tuple(ints[1 + K :]))
        row = table.values.get(key)
        if row is None:
            row = table.values[key] = np.zeros(n_act)
        row[int(tok[-2])] = float(tok[-1])
    return table
