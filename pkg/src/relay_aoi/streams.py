"""Counter-based uniform variates.

A variate is a pure function of ``(seed, run, t, channel, slot)``. Two policies
reading the same coordinates see the same number no matter what else they
consumed, which is what paired (coupled) runs rely on.

Mixing: each key component is folded in with ``x = splitmix64((x ^ c) + GAMMA)``
starting from ``x = 0``; the top 53 bits of the result give a double in [0, 1).
"""

from __future__ import annotations

import numpy as np

MIX_ID = "splitmix64-fold/v1"

SAMPLE = 0
UPDATE = 1
POLICY = 2

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def _as_u64(v):
    if isinstance(v, (int, np.integer)):
        return np.uint64(int(v) & _MASK)
    return np.asarray(v).astype(np.uint64)


def uniforms(seed, run, t, channel, slot) -> np.ndarray:
    """Vectorised variates; arguments broadcast like numpy arrays."""
    with np.errstate(over="ignore"):
        x = np.zeros(np.broadcast_shapes(*(np.shape(a) for a in (seed, run, t, channel, slot))), dtype=np.uint64)
        for comp in (seed, run, t, channel, slot):
            x = _splitmix((x ^ _as_u64(comp)) + _GAMMA)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


class CounterStream:
    """Sequential view of one ``(seed, run, channel)`` lane.

    The n-th call to :meth:`random` returns ``uniforms(seed, run, n, channel, 0)``,
    so the output depends only on the stream position.
    """

    def __init__(self, seed: int, run: int = 0, channel: int = POLICY, position: int = 0):
        self.seed = seed
        self.run = run
        self.channel = channel
        self.position = position

    def random(self) -> float:
        u = float(uniforms(self.seed, self.run, self.position, self.channel, 0))
        self.position += 1
        return u
