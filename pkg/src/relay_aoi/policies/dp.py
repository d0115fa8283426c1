"""Exact optimality oracles for small instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from relay_aoi.core import (
    Action,
    AoIState,
    BudgetExceededError,
    NetworkConfig,
    OutageDraws,
    action_index,
    feasible_actions,
    initial_state,
    outcome_patterns,
    step,
    sampling_reduction,
    update_reduction,
    weighted_sum,
)

DEFAULT_STATE_CAP = 10**6
DEFAULT_SEQUENCE_BUDGET = 10**5


@dataclass
class DPTable:
    """Per-slot map ``state -> (expected cost-to-go, optimal action)``.

    Cost-to-go at slot t is the expected ``sum_{tau=t..T} sum_k w_k h_k(tau)``.
    """

    cfg: NetworkConfig
    layers: dict[int, dict[AoIState, tuple[float, Action]]] = field(default_factory=dict)

    def action(self, state: AoIState) -> Action:
        try:
            return self.layers[state.t][state][1]
        except KeyError:
            raise KeyError(f"state {state} was not reached while solving") from None

    def cost_to_go(self, state: AoIState) -> float:
        return self.layers[state.t][state][0]

    @property
    def root_value(self) -> float:
        return self.cost_to_go(initial_state(self.cfg))

    @property
    def V(self) -> float:
        return self.root_value / self.cfg.T

    @property
    def n_states(self) -> int:
        return sum(len(layer) for layer in self.layers.values())


def solve_backward_induction(cfg: NetworkConfig, state_cap: int = DEFAULT_STATE_CAP) -> DPTable:
    actions = feasible_actions(cfg)
    start = initial_state(cfg)
    reach: dict[int, set[AoIState]] = {1: {start}}
    total = 1
    for t in range(1, cfg.T):
        nxt: set[AoIState] = set()
        for s in reach[t]:
            for a in actions:
                for _, draws in outcome_patterns(cfg, a):
                    nxt.add(step(cfg, s, a, draws))
        total += len(nxt)
        if total > state_cap:
            raise BudgetExceededError("reachable state count", total, state_cap)
        reach[t + 1] = nxt

    table = DPTable(cfg)
    table.layers[cfg.T] = {s: (weighted_sum(s, cfg.weights), actions[0]) for s in reach[cfg.T]}
    # outcome patterns depend only on the action, not on the state
    patterns = {a: list(outcome_patterns(cfg, a)) for a in actions}
    for t in range(cfg.T - 1, 0, -1):
        later = table.layers[t + 1]
        layer = {}
        for s in reach[t]:
            best_val, best_a = math.inf, actions[0]
            for a in actions:
                val = math.fsum(pr * later[step(cfg, s, a, d)][0] for pr, d in patterns[a])
                if val < best_val:
                    best_val, best_a = val, a
            layer[s] = (weighted_sum(s, cfg.weights) + best_val, best_a)
        table.layers[t] = layer
    return table


@dataclass(frozen=True)
class SequenceResult:
    total: float
    weighted_h: tuple[float, ...]
    sum_g: tuple[int, ...]
    sum_h: tuple[int, ...]
    r_sample: tuple[int, ...]
    r_update: tuple[int, ...]
    states: tuple[AoIState, ...]


def evaluate_fixed_sequence(cfg: NetworkConfig, actions: Sequence[Action]) -> SequenceResult:
    """Deterministic rollout of a length-T action list on an errorless instance."""
    if not cfg.errorless:
        raise ValueError("fixed-sequence evaluation is errorless-only; p and q must be all zero")
    if len(actions) != cfg.T:
        raise ValueError(f"expected {cfg.T} actions, got {len(actions)}")
    clean = OutageDraws.none(cfg)
    state = initial_state(cfg)
    states, wh, rs, ru = [], [], [], []
    for t, a in enumerate(actions, start=1):
        states.append(state)
        wh.append(weighted_sum(state, cfg.weights))
        rs.append(sampling_reduction(state, a.sample))
        ru.append(update_reduction(state, a.update))
        if t < cfg.T:
            state = step(cfg, state, a, clean)
    return SequenceResult(
        total=math.fsum(wh),
        weighted_h=tuple(wh),
        sum_g=tuple(sum(s.g) for s in states),
        sum_h=tuple(sum(s.h) for s in states),
        r_sample=tuple(rs),
        r_update=tuple(ru),
        states=tuple(states),
    )


def exhaustive_minimum(
    cfg: NetworkConfig, budget: int = DEFAULT_SEQUENCE_BUDGET
) -> tuple[float, list[Action]]:
    """Minimum errorless total cost over every length-T action sequence.

    The slot-T action cannot affect any recorded slot, so the search branches
    over slots 1..T-1 only and pads the argmin with the first canonical action.
    """
    if not cfg.errorless:
        raise ValueError("exhaustive search is errorless-only; p and q must be all zero")
    size = cfg.n_actions**cfg.T
    if size > budget:
        raise BudgetExceededError("action sequence count", size, budget)
    actions = feasible_actions(cfg)
    clean = OutageDraws.none(cfg)
    best = [math.inf, []]

    def dfs(state: AoIState, acc: float, prefix: list[Action]) -> None:
        acc += weighted_sum(state, cfg.weights)
        if state.t == cfg.T:
            if acc < best[0]:
                best[0], best[1] = acc, prefix + [actions[0]]
            return
        for a in actions:
            prefix.append(a)
            dfs(step(cfg, state, a, clean), acc, prefix)
            prefix.pop()

    dfs(initial_state(cfg), 0.0, [])
    return best[0], best[1]


def _header(cfg: NetworkConfig, kind: str) -> list[str]:
    return [
        f"# relay-aoi {kind} v1",
        f"# K={cfg.K} S={cfg.S} U={cfg.U} T={cfg.T}",
        "# weights=" + ",".join(repr(w) for w in cfg.weights),
        "# p=" + ",".join(repr(x) for x in cfg.p),
        "# q=" + ",".join(repr(x) for x in cfg.q),
    ]


def _parse_header(lines: list[str]) -> tuple[NetworkConfig, dict[str, str]]:
    fields: dict[str, str] = {}
    for line in lines:
        for tok in line.lstrip("#").split():
            if "=" in tok:
                key, val = tok.split("=", 1)
                fields[key] = val
    vec = lambda key: tuple(float(x) for x in fields[key].split(","))  # noqa: E731
    cfg = NetworkConfig(
        int(fields["K"]), int(fields["S"]), int(fields["U"]), int(fields["T"]),
        vec("weights"), vec("p"), vec("q"),
    )
    return cfg, fields


def _state_tokens(s: AoIState) -> str:
    return " ".join(map(str, (s.t, *s.g, *s.h)))


def _state_from(tokens: list[str], K: int) -> AoIState:
    ints = list(map(int, tokens[: 1 + 2 * K]))
    return AoIState(ints[0], tuple(ints[1 : 1 + K]), tuple(ints[1 + K :]))


def dump_dp_table(table: DPTable, fh: TextIO) -> None:
    """One line per state: ``t g_0..g_{K-1} h_0..h_{K-1} action_index cost_to_go``."""
    cfg = table.cfg
    for line in _header(cfg, "dp-table"):
        fh.write(line + "\n")
    fh.write("# columns: t g[K] h[K] action_index cost_to_go\n")
    for t in sorted(table.layers):
        for s in sorted(table.layers[t], key=lambda s: (s.g, s.h)):
            val, a = table.layers[t][s]
            fh.write(f"{_state_tokens(s)} {action_index(cfg, a)} {val!r}\n")


def load_dp_table(fh: TextIO) -> DPTable:
    lines = fh.read().splitlines()
    cfg, _ = _parse_header([ln for ln in lines if ln.startswith("#")])
    actions = feasible_actions(cfg)
    table = DPTable(cfg)
    for ln in lines:
        if not ln or ln.startswith("#"):
            continue
        tok = ln.split()
        s = _state_from(tok, cfg.K)
        table.layers.setdefault(s.t, {})[s] = (float(tok[-1]), actions[int(tok[-2])])
    return table
