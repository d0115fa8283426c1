from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

from relay_aoi.core import Action, AoIState, NetworkConfig, check_action, feasible_actions


class UniformSource(Protocol):
    def random(self) -> float: ...


def _top(scores: Sequence[float], n: int) -> tuple[int, ...]:
    # ties go to the lowest index
    order = sorted(range(len(scores)), key=lambda k: (-scores[k], k))
    return tuple(sorted(order[:n]))


def greedy_action(state: AoIState, cfg: NetworkConfig) -> Action:
    """Sample the S largest ``w_k g_k``; update the U largest ``w_k (h_k - g_k)``."""
    w = cfg.weights
    sample = _top([w[k] * state.g[k] for k in range(cfg.K)], cfg.S)
    update = _top([w[k] * (state.h[k] - state.g[k]) for k in range(cfg.K)], cfg.U)
    return Action(sample, update)


def random_action(cfg: NetworkConfig, rng: UniformSource) -> Action:
    """Uniform draw over feasible actions; consumes exactly one variate."""
    actions = feasible_actions(cfg)
    i = min(int(rng.random() * len(actions)), len(actions) - 1)
    return actions[i]


KINDS = ("greedy", "random", "dp_optimal", "q_learned", "fixed_sequence")


@dataclass(frozen=True)
class PolicySpec:
    """A named scheduling policy.

    ``params`` carries the kind-specific payload: ``table`` for ``q_learned``
    (plus optional ``epsilon``) and ``dp_optimal``, ``actions`` for
    ``fixed_sequence``.
    """

    kind: str
    params: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)
    name: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind == "fixed_sequence" and "actions" not in self.params:
            raise ValueError("fixed_sequence policy needs an 'actions' list")
        if self.kind in ("q_learned", "dp_optimal") and "table" not in self.params:
            raise ValueError(f"{self.kind} policy needs a 'table'")

    @property
    def label(self) -> str:
        return self.name or self.kind

    @classmethod
    def greedy(cls) -> PolicySpec:
        return cls("greedy")

    @classmethod
    def random(cls) -> PolicySpec:
        return cls("random")

    @classmethod
    def fixed(cls, actions: Sequence[Action], name: str | None = None) -> PolicySpec:
        return cls("fixed_sequence", {"actions": list(actions)}, name)

    @classmethod
    def learned(cls, table, epsilon: float = 0.0, name: str | None = None) -> PolicySpec:
        return cls("q_learned", {"table": table, "epsilon": epsilon}, name)

    @classmethod
    def dp(cls, table, name: str | None = None) -> PolicySpec:
        return cls("dp_optimal", {"table": table}, name)

    @property
    def deterministic(self) -> bool:
        if self.kind == "random":
            return False
        if self.kind == "q_learned":
            return self.params.get("epsilon", 0.0) == 0.0
        return True

    def act(self, cfg: NetworkConfig, state: AoIState, rng: UniformSource | None = None) -> Action:
        if self.kind == "greedy":
            return greedy_action(state, cfg)
        if self.kind == "random":
            if rng is None:
                raise ValueError("random policy needs a uniform source")
            return random_action(cfg, rng)
        if self.kind == "fixed_sequence":
            actions = self.params["actions"]
            if not 1 <= state.t <= len(actions):
                raise ValueError(f"fixed sequence of length {len(actions)} has no action for t={state.t}")
            return actions[state.t - 1]
        if self.kind == "dp_optimal":
            return self.params["table"].action(state)
        from relay_aoi.policies.qlearn import q_action

        return q_action(self.params["table"], state, self.params.get("epsilon", 0.0), rng)

    def action_distribution(self, cfg: NetworkConfig, state: AoIState) -> list[tuple[float, Action]]:
        """Exact distribution of the action taken in ``state``."""
        if self.kind == "random":
            actions = feasible_actions(cfg)
            return [(1.0 / len(actions), a) for a in actions]
        if self.kind == "q_learned":
            from relay_aoi.policies.qlearn import best_action

            eps = self.params.get("epsilon", 0.0)
            best = best_action(self.params["table"], state)
            if eps == 0.0:
                return [(1.0, best)]
            actions = feasible_actions(cfg)
            return [((1.0 - eps) * (a == best) + eps / len(actions), a) for a in actions]
        return [(1.0, self.act(cfg, state))]


def checked_act(policy: PolicySpec, cfg: NetworkConfig, state: AoIState, rng: UniformSource | None) -> Action:
    action = policy.act(cfg, state, rng)
    check_action(cfg, action)
    return action
