"""Problem instance, AoI state and the slotted transition dynamics.

Processes are indexed ``0..K-1`` throughout the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence


class InfeasibleActionError(ValueError):
    """An action violates the cardinality or index constraints of an instance."""


class BudgetExceededError(RuntimeError):
    """An exact oracle refused an instance that is larger than its configured cap."""

    def __init__(self, what: str, size: float, cap: float):
        super().__init__(f"{what}: {size:g} exceeds the configured cap of {cap:g}")
        self.what = what
        self.size = size
        self.cap = cap


@dataclass(frozen=True)
class NetworkConfig:
    K: int
    S: int
    U: int
    T: int
    weights: tuple[float, ...]
    p: tuple[float, ...]
    q: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        if self.K < 2:
            raise ValueError(f"K must be at least 2 (need 1 <= S < K), got {self.K}")
        if not 1 <= self.S < self.K:
            raise ValueError(f"S must satisfy 1 <= S < K, got S={self.S}, K={self.K}")
        if not 1 <= self.U < self.K:
            raise ValueError(f"U must satisfy 1 <= U < K, got U={self.U}, K={self.K}")
        if self.T < 1:
            raise ValueError(f"T must be positive, got {self.T}")
        for name in ("weights", "p", "q"):
            if len(getattr(self, name)) != self.K:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected K={self.K}")
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite and nonnegative")
        if sum(self.weights) <= 0:
            raise ValueError("weights must sum to a positive value")
        for name in ("p", "q"):
            if any(not 0.0 <= x < 1.0 for x in getattr(self, name)):
                raise ValueError(f"{name} entries must lie in [0, 1)")

    @classmethod
    def symmetric(cls, K: int, S: int, U: int, T: int, p: float = 0.0, q: float = 0.0) -> NetworkConfig:
        """Uniform weights 1/K and identical outage probabilities."""
        return cls(K, S, U, T, (1.0 / K,) * K, (p,) * K, (q,) * K)

    @property
    def errorless(self) -> bool:
        return all(x == 0.0 for x in self.p) and all(x == 0.0 for x in self.q)

    @property
    def symmetric_outage(self) -> bool:
        return len(set(self.p)) == 1 and len(set(self.q)) == 1

    @property
    def uniform_weights(self) -> bool:
        return len(set(self.weights)) == 1

    @property
    def n_actions(self) -> int:
        return math.comb(self.K, self.S) * math.comb(self.K, self.U)

    def describe(self) -> str:
        return f"K={self.K},S={self.S},U={self.U},T={self.T}"


@dataclass(frozen=True)
class AoIState:
    t: int
    g: tuple[int, ...]
    h: tuple[int, ...]


@dataclass(frozen=True)
class Action:
    """Sorted tuples of sampled sensors and updated destinations."""

    sample: tuple[int, ...]
    update: tuple[int, ...]

    @classmethod
    def of(cls, sample: Sequence[int], update: Sequence[int]) -> Action:
        return cls(tuple(sorted(sample)), tuple(sorted(update)))


@dataclass(frozen=True)
class OutageDraws:
    """Outage flags (True = outage) ordered by rank of the sorted selected indices."""

    sample_outage: tuple[bool, ...]
    update_outage: tuple[bool, ...]

    @classmethod
    def none(cls, cfg: NetworkConfig) -> OutageDraws:
        return cls((False,) * cfg.S, (False,) * cfg.U)


def initial_state(cfg: NetworkConfig) -> AoIState:
    return AoIState(1, (1,) * cfg.K, (1,) * cfg.K)


def _check_subset(K: int, idx: Sequence[int], size: int | None, label: str) -> None:
    if size is not None and len(idx) != size:
        raise InfeasibleActionError(f"{label} set has {len(idx)} entries, expected exactly {size}")
    if len(set(idx)) != len(idx):
        raise InfeasibleActionError(f"{label} set contains duplicate indices: {tuple(idx)}")
    bad = [k for k in idx if not (isinstance(k, int) and 0 <= k < K)]
    if bad:
        raise InfeasibleActionError(f"{label} set index {bad[0]!r} is outside 0..{K - 1}")


def check_action(cfg: NetworkConfig, action: Action) -> None:
    """Raise :class:`InfeasibleActionError` naming the violated constraint."""
    _check_subset(cfg.K, action.sample, cfg.S, "sample")
    _check_subset(cfg.K, action.update, cfg.U, "update")
    if list(action.sample) != sorted(action.sample) or list(action.update) != sorted(action.update):
        raise InfeasibleActionError("action index tuples must be sorted ascending")


def step(cfg: NetworkConfig, state: AoIState, action: Action, outage: OutageDraws) -> AoIState:
    """Advance one slot. Every component is computed from the slot-t values."""
    if state.t > cfg.T:
        raise ValueError(f"state.t={state.t} is past the horizon T={cfg.T}")
    check_action(cfg, action)
    if len(outage.sample_outage) != cfg.S or len(outage.update_outage) != cfg.U:
        raise ValueError("outage draws must have lengths S and U")
    g = [x + 1 for x in state.g]
    h = [x + 1 for x in state.h]
    for k, lost in zip(action.sample, outage.sample_outage):
        if not lost:
            g[k] = 1
    for k, lost in zip(action.update, outage.update_outage):
        if not lost:
            h[k] = state.g[k] + 1
    return AoIState(state.t + 1, tuple(g), tuple(h))


def sampling_reduction(state: AoIState, sample_set: Sequence[int]) -> int:
    _check_subset(len(state.g), sample_set, None, "sample")
    return sum(state.g[k] for k in sample_set)


def update_reduction(state: AoIState, update_set: Sequence[int]) -> int:
    _check_subset(len(state.g), update_set, None, "update")
    return sum(state.h[k] - state.g[k] for k in update_set)


def weighted_sum(state: AoIState, weights: Sequence[float], which: str = "destination") -> float:
    if which == "destination":
        values = state.h
    elif which == "relay":
        values = state.g
    else:
        raise ValueError(f"which must be 'relay' or 'destination', got {which!r}")
    return math.fsum(w * x for w, x in zip(weights, values))


@lru_cache(maxsize=None)
def _action_list(K: int, S: int, U: int) -> tuple[Action, ...]:
    samples = list(itertools.combinations(range(K), S))
    updates = list(itertools.combinations(range(K), U))
    return tuple(Action(s, u) for s in samples for u in updates)


def feasible_actions(cfg: NetworkConfig) -> tuple[Action, ...]:
    """All C(K,S)*C(K,U) actions, lexicographic by sample set then update set."""
    return _action_list(cfg.K, cfg.S, cfg.U)


@lru_cache(maxsize=None)
def _action_index(K: int, S: int, U: int) -> dict[Action, int]:
    return {a: i for i, a in enumerate(_action_list(K, S, U))}


def action_index(cfg: NetworkConfig, action: Action) -> int:
    """Position of ``action`` in the canonical order of :func:`feasible_actions`."""
    try:
        return _action_index(cfg.K, cfg.S, cfg.U)[action]
    except KeyError:
        check_action(cfg, action)
        raise


def outcome_patterns(cfg: NetworkConfig, action: Action) -> Iterator[tuple[float, OutageDraws]]:
    """Every outage pattern of one slot with its exact probability.

    Patterns with zero probability are skipped, so an errorless instance yields
    a single pattern.
    """
    probs = [cfg.p[k] for k in action.sample] + [cfg.q[k] for k in action.update]
    options = [((False, 1.0 - x), (True, x)) if x > 0 else ((False, 1.0),) for x in probs]
    for combo in itertools.product(*options):
        pr = math.prod(c[1] for c in combo)
        flags = tuple(c[0] for c in combo)
        yield pr, OutageDraws(flags[: cfg.S], flags[cfg.S :])
