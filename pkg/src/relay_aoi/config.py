"""Experiment configuration in the ``key = value`` text format.

Pairs may share a line (``K=5 S=3 U=3``) or sit one per line; ``#`` starts a
comment. Keys: K, S, U, T, weights, p, q, policies, n_runs, seed, coupled, out,
preset. ``weights`` accepts ``uniform``; ``p`` and ``q`` accept a scalar that
is broadcast over K.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from relay_aoi.core import NetworkConfig

POLICY_NAMES = ("greedy", "random", "dqn", "q_learned", "dp_optimal")
KEYS = ("K", "S", "U", "T", "weights", "p", "q", "policies", "n_runs", "seed", "coupled", "out", "preset")
REQUIRED = ("K", "S", "U", "T")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkConfig
    policies: tuple[str, ...] = ("greedy",)
    n_runs: int = 1
    seed: int = 0
    coupled: bool = False
    out: str = "out"
    preset: str | None = None


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.sub(r"\s*=\s*", "=", raw.split("#", 1)[0]).strip()
        for tok in line.split():
            if "=" not in tok:
                raise ConfigError(f"expected key=value, got {tok!r}", lineno)
            key, val = tok.split("=", 1)
            yield lineno, key, val


def _int(val: str, key: str, line: int) -> int:
    try:
        return int(val)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {val!r}", line, key) from None


def _floats(val: str, key: str, line: int) -> list[float]:
    try:
        return [float(x) for x in val.split(",")]
    except ValueError:
        raise ConfigError(f"{key} must be a number or comma-separated list, got {val!r}", line, key) from None


def parse_config(text: str) -> ExperimentConfig:
    raw: dict[str, tuple[int, str]] = {}
    for line, key, val in _tokens(text):
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", line, key)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} (first set on line {raw[key][0]})", line, key)
        raw[key] = (line, val)
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}", None, key)

    ints = {key: _int(raw[key][1], key, raw[key][0]) for key in REQUIRED}
    K, S, U, T = ints["K"], ints["S"], ints["U"], ints["T"]
    if K < 2:
        raise ConfigError(f"K must be at least 2, got {K}", raw["K"][0], "K")
    if not 1 <= S < K:
        raise ConfigError(f"S must satisfy 1 <= S < K={K}, got {S}", raw["S"][0], "S")
    if not 1 <= U < K:
        raise ConfigError(f"U must satisfy 1 <= U < K={K}, got {U}", raw["U"][0], "U")
    if T < 1:
        raise ConfigError(f"T must be positive, got {T}", raw["T"][0], "T")

    def vector(key: str, default: float, broadcast: bool) -> tuple[float, ...]:
        if key not in raw:
            return (default,) * K
        line, val = raw[key]
        if key == "weights" and val == "uniform":
            return (1.0 / K,) * K
        xs = _floats(val, key, line)
        if len(xs) == 1 and broadcast:
            xs = xs * K
        if len(xs) != K:
            raise ConfigError(f"{key} has {len(xs)} entries, expected K={K}", line, key)
        return tuple(xs)

    weights = vector("weights", 1.0 / K, broadcast=False)
    if any(w < 0 for w in weights) or sum(weights) <= 0:
        raise ConfigError("weights must be nonnegative with a positive sum", raw["weights"][0], "weights")
    p = vector("p", 0.0, broadcast=True)
    q = vector("q", 0.0, broadcast=True)
    for key, xs in (("p", p), ("q", q)):
        if any(not 0.0 <= x < 1.0 for x in xs):
            raise ConfigError(f"{key} entries must lie in [0, 1)", raw[key][0], key)

    policies: tuple[str, ...] = ("greedy",)
    if "policies" in raw:
        line, val = raw["policies"]
        policies = tuple(x for x in val.split(",") if x)
        bad = [x for x in policies if x not in POLICY_NAMES]
        if bad or not policies:
            raise ConfigError(f"unknown policy {bad[0] if bad else val!r}; expected {', '.join(POLICY_NAMES)}", line, "policies")

    n_runs = _int(raw["n_runs"][1], "n_runs", raw["n_runs"][0]) if "n_runs" in raw else 1
    if n_runs < 1:
        raise ConfigError(f"n_runs must be at least 1, got {n_runs}", raw["n_runs"][0], "n_runs")
    seed = _int(raw["seed"][1], "seed", raw["seed"][0]) if "seed" in raw else 0
    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}", raw["seed"][0], "seed")
    coupled = False
    if "coupled" in raw:
        line, val = raw["coupled"]
        if val.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"coupled must be true or false, got {val!r}", line, "coupled")
        coupled = val.lower() in ("true", "1", "yes")

    return ExperimentConfig(
        network=NetworkConfig(K, S, U, T, weights, p, q),
        policies=policies,
        n_runs=n_runs,
        seed=seed,
        coupled=coupled,
        out=raw["out"][1] if "out" in raw else "out",
        preset=raw["preset"][1] if "preset" in raw else None,
    )


def render_config(cfg: ExperimentConfig) -> str:
    net = cfg.network
    lines = [
        f"K = {net.K}",
        f"S = {net.S}",
        f"U = {net.U}",
        f"T = {net.T}",
        "weights = " + ",".join(repr(w) for w in net.weights),
        "p = " + ",".join(repr(x) for x in net.p),
        "q = " + ",".join(repr(x) for x in net.q),
        "policies = " + ",".join(cfg.policies),
        f"n_runs = {cfg.n_runs}",
        f"seed = {cfg.seed}",
        f"coupled = {'true' if cfg.coupled else 'false'}",
        f"out = {cfg.out}",
    ]
    if cfg.preset is not None:
        lines.append(f"preset = {cfg.preset}")
    return "\n".join(lines) + "\n"
