"""Deterministic, order-independent random streams.

Each Monte Carlo trial gets its own stream keyed by (master_seed, trial_index):

    trial_seed = splitmix64_finalize(master_seed + (trial_index + 1) * GOLDEN)

and the stream itself is a SplitMix64 sequence started at that seed.  SplitMix64
is counter-based (state advances by a fixed increment, output is a finalizer of
the state), so trials are reproducible under any scheduling of workers.

The same arithmetic is reimplemented inside the numba simulation kernel
(:mod:`fpphe.simcore`); this module is the reference implementation used by
tests and by the pure-Python components.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF


def splitmix64_finalize(x: int) -> int:
    """The SplitMix64 output finalizer (a 64-bit mixing bijection)."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Derive the per-trial stream seed from the master seed and trial index."""
    return splitmix64_finalize((master_seed + (trial_index + 1) * GOLDEN) & _MASK)


class SplitMix64:
    """Minimal counter-based 64-bit stream with the draws the toolkit needs."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & _MASK
        return splitmix64_finalize(self.state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def exponential(self, rate: float) -> float:
        # 1 - u is in (0, 1], so the log is finite.
        return -np.log1p(-self.uniform()) / rate


def generator_for_trial(master_seed: int, trial_index: int) -> np.random.Generator:
    """A numpy Generator seeded deterministically for one trial (Philox)."""
    return np.random.Generator(np.random.Philox(key=trial_seed(master_seed, trial_index)))
