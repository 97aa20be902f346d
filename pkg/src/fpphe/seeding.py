"""Bernoulli seed configurations over a graph's vertices.

A seed is a dormant rate-lambda particle; every vertex except the explicit
exclusions (by default just the origin) hosts one independently with
probability mu.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .graphkit import Graph

SEEDS_MAGIC = "FPPHE-SEEDS-v1"


@dataclass
class SeedConfig:
    is_seed: np.ndarray                      # bool, one flag per vertex
    mu: float
    excluded: frozenset[int] = field(default_factory=frozenset)
    master_seed: int | None = None           # provenance metadata only

    def __post_init__(self):
        self.is_seed = np.asarray(self.is_seed, dtype=bool)
        for v in self.excluded:
            if self.is_seed[v]:
                raise InvalidParameterError(f"excluded vertex {v} is marked as a seed")

    @property
    def seed_count(self) -> int:
        return int(self.is_seed.sum())

    def to_blob(self) -> bytes:
        """Bitset blob with a JSON metadata header."""
        meta = json.dumps({
            "format": SEEDS_MAGIC,
            "n": int(len(self.is_seed)),
            "mu": self.mu,
            "excluded": sorted(self.excluded),
            "master_seed": self.master_seed,
        }).encode()
        return len(meta).to_bytes(4, "big") + meta + np.packbits(self.is_seed).tobytes()

    @classmethod
    def from_blob(cls, blob: bytes) -> "SeedConfig":
        mlen = int.from_bytes(blob[:4], "big")
        meta = json.loads(blob[4:4 + mlen].decode())
        if meta.get("format") != SEEDS_MAGIC:
            raise InvalidParameterError(f"not a {SEEDS_MAGIC} blob")
        bits = np.unpackbits(np.frombuffer(blob[4 + mlen:], dtype=np.uint8))[:meta["n"]]
        return cls(bits.astype(bool), meta["mu"],
                   frozenset(meta["excluded"]), meta["master_seed"])


def place_seeds(g: Graph, mu: float, excluded, rng: np.random.Generator,
                master_seed: int | None = None) -> SeedConfig:
    """Sample one Bernoulli(mu) flag per non-excluded vertex."""
    if not (0.0 <= mu <= 1.0):
        raise InvalidParameterError(f"mu must be in [0,1], got {mu}")
    excluded = frozenset(int(v) for v in excluded)
    for v in excluded:
        if not (0 <= v < g.vertex_count):
            raise InvalidParameterError(f"excluded vertex {v} not in graph")
    flags = rng.random(g.vertex_count) < mu
    for v in excluded:
        flags[v] = False
    return SeedConfig(flags, mu, excluded, master_seed)


def fixed_seeds(g: Graph, seeds) -> SeedConfig:
    """Deterministic configuration: exactly the listed vertices are seeds."""
    flags = np.zeros(g.vertex_count, dtype=bool)
    for v in seeds:
        if not (0 <= v < g.vertex_count):
            raise InvalidParameterError(f"seed vertex {v} not in graph")
        flags[v] = True
    return SeedConfig(flags, mu=float("nan"))


def no_seeds(g: Graph) -> SeedConfig:
    return SeedConfig(np.zeros(g.vertex_count, dtype=bool), mu=0.0)
