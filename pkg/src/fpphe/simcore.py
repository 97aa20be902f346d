"""Exact event-driven simulation of the two-type infection race.

The process: a rate-1 infection (FPP1) starts at the origin; every infected
vertex of type g schedules, on each incident edge instance with an uninfected
opposite endpoint, a tentative infection after an independent Exp(rate of g)
delay.  The earliest tentative event per vertex wins.  Infecting a vertex that
hosts a dormant seed turns it (and its progeny) into the rate-lambda type
(FPPLAMBDA); otherwise the type is inherited.

Two implementations with the same law:

* :func:`simulate` - lazy per-directed-edge sampling in a priority queue
  (a modified Dijkstra), compiled with numba.  This is the fast path.
* :func:`explicit_clock_simulate` - a literal transcription that keeps one
  live clock per boundary edge and redraws all of them at every event (valid
  by memorylessness).  Quadratic; intended as an independent oracle on small
  graphs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidParameterError, UnreachableTargetError
from .graphkit import Graph
from .seeding import SeedConfig

PTYPE_FPP1 = 0
PTYPE_FPPLAMBDA = 1
PTYPE_NAMES = {PTYPE_FPP1: "FPP1", PTYPE_FPPLAMBDA: "FPPLAMBDA"}

STOP_TARGET = 0
STOP_HORIZON = 1
STOP_EXHAUSTED = 2
STOP_BUDGET = 3
STOP_WATCH = 4
STOP_NAMES = {
    STOP_TARGET: "target-reached",
    STOP_HORIZON: "horizon",
    STOP_EXHAUSTED: "exhausted",
    STOP_BUDGET: "budget",
    STOP_WATCH: "target-reached",
}

# ---------------------------------------------------------------------------
# Counter-based RNG inside the kernel (SplitMix64, mirrors fpphe.rng).

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.1102230246251565e-16  # 2^-53


@njit(cache=True, inline="always")
def _sm_finalize(x):
    z = x
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _next_u64(st):
    st[0] = st[0] + _GOLDEN
    return _sm_finalize(st[0])


@njit(cache=True, inline="always")
def _unit(st):
    return (_next_u64(st) >> np.uint64(11)) * _INV53


@njit(cache=True, inline="always")
def _expo(st, rate):
    return -np.log1p(-_unit(st)) / rate


# ---------------------------------------------------------------------------
# Event heap keyed lexicographically by (time, vertex, edge) so that
# zero-probability floating-point ties break deterministically.  Vertex and
# edge are packed into one int64 key ((v << 32) | e), which preserves the
# (vertex, edge) order and halves the swap traffic.

@njit(cache=True, inline="always")
def _ev_less(t1, k1, t2, k2):
    if t1 != t2:
        return t1 < t2
    return k1 < k2


@njit(cache=True)
def _heap_push(ht, hk, hs, size, t, k, s):
    i = size
    ht[i] = t
    hk[i] = k
    hs[i] = s
    while i > 0:
        p = (i - 1) // 2
        if _ev_less(ht[i], hk[i], ht[p], hk[p]):
            ht[i], ht[p] = ht[p], ht[i]
            hk[i], hk[p] = hk[p], hk[i]
            hs[i], hs[p] = hs[p], hs[i]
            i = p
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(ht, hk, hs, size):
    size -= 1
    ht[0], ht[size] = ht[size], ht[0]
    hk[0], hk[size] = hk[size], hk[0]
    hs[0], hs[size] = hs[size], hs[0]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        best = i
        if l < size and _ev_less(ht[l], hk[l], ht[best], hk[best]):
            best = l
        if r < size and _ev_less(ht[r], hk[r], ht[best], hk[best]):
            best = r
        if best == i:
            break
        ht[i], ht[best] = ht[best], ht[i]
        hk[i], hk[best] = hk[best], hk[i]
        hs[i], hs[best] = hs[best], hs[i]
        i = best
    return size


@njit(cache=True)
def _sim_core(indptr, adj_v, adj_e, seeds, origin, lam, target, horizon,
              max_infected, use_watch, watch, st,
              times, types, parent_v, parent_e):
    """Run one simulation.  Returns the stop code (negative = internal error)."""
    n_dir = adj_v.shape[0]
    ht = np.empty(n_dir + 1, dtype=np.float64)
    hk = np.empty(n_dir + 1, dtype=np.int64)
    hs = np.empty(n_dir + 1, dtype=np.int64)
    size = 0

    times[origin] = 0.0
    types[origin] = PTYPE_FPP1
    n_infected = 1
    if target == origin:
        return STOP_TARGET
    if use_watch and watch[origin]:
        return STOP_WATCH
    for k in range(indptr[origin], indptr[origin + 1]):
        u = adj_v[k]
        if types[u] < 0:
            size = _heap_push(ht, hk, hs, size, _expo(st, 1.0),
                              (u << 32) | adj_e[k], origin)

    last_t = 0.0
    while size > 0:
        t = ht[0]
        v = hk[0] >> 32
        e = hk[0] & 0xFFFFFFFF
        s = hs[0]
        size = _heap_pop(ht, hk, hs, size)
        if types[v] >= 0:
            continue  # stale event
        if t > horizon:
            return STOP_HORIZON
        if t < last_t:
            return -1  # pop-order invariant violated
        last_t = t

        if seeds[v] or types[s] == PTYPE_FPPLAMBDA:
            types[v] = PTYPE_FPPLAMBDA
        else:
            types[v] = PTYPE_FPP1
        times[v] = t
        parent_v[v] = s
        parent_e[v] = e
        n_infected += 1

        if v == target:
            return STOP_TARGET
        if use_watch and watch[v] and types[v] == PTYPE_FPP1:
            return STOP_WATCH
        if n_infected >= max_infected:
            return STOP_BUDGET

        rate = lam if types[v] == PTYPE_FPPLAMBDA else 1.0
        for k in range(indptr[v], indptr[v + 1]):
            u = adj_v[k]
            if types[u] < 0:
                size = _heap_push(ht, hk, hs, size, t + _expo(st, rate),
                                  (u << 32) | adj_e[k], v)
    return STOP_EXHAUSTED


# ---------------------------------------------------------------------------
# Python-facing types.

@dataclass
class StopCondition:
    target: int | None = None
    time_horizon: float | None = None
    max_infected: int | None = None

    def __post_init__(self):
        if self.target is None and self.time_horizon is None and self.max_infected is None:
            raise InvalidParameterError("stop condition needs at least one field")
        if self.time_horizon is not None and self.time_horizon <= 0:
            raise InvalidParameterError("time_horizon must be positive")
        if self.max_infected is not None and self.max_infected <= 0:
            raise InvalidParameterError("max_infected must be positive")


@dataclass
class InfectionRecord:
    vertex: int
    infection_time: float
    ptype: int
    via_edge: int | None
    parent: int | None


@dataclass
class SimOutcome:
    times: np.ndarray         # f8, inf where uninfected
    types: np.ndarray         # i8, -1 where uninfected
    parent_vertex: np.ndarray
    parent_edge: np.ndarray
    stop_reason: str
    target: int | None = None

    def infected(self, v: int) -> bool:
        return self.types[v] >= 0

    def record(self, v: int) -> InfectionRecord | None:
        if not self.infected(v):
            return None
        pv = int(self.parent_vertex[v])
        pe = int(self.parent_edge[v])
        return InfectionRecord(v, float(self.times[v]), int(self.types[v]),
                               pe if pe >= 0 else None, pv if pv >= 0 else None)

    @property
    def target_verdict(self):
        if self.target is None or not self.infected(self.target):
            return None
        return (self.target, int(self.types[self.target]), float(self.times[self.target]))

    def parent_chain(self, v: int) -> list[int]:
        """Vertices from v back to the origin following infecting edges."""
        chain = [v]
        while self.parent_vertex[chain[-1]] >= 0:
            chain.append(int(self.parent_vertex[chain[-1]]))
        return chain

    def winning_seed(self, seeds: SeedConfig, v: int | None = None) -> int | None:
        """The seed that initiated the rate-lambda cluster reaching v."""
        v = self.target if v is None else v
        if v is None or not self.infected(v) or self.types[v] != PTYPE_FPPLAMBDA:
            return None
        cur = v
        while True:
            p = int(self.parent_vertex[cur])
            if p < 0 or self.types[p] != PTYPE_FPPLAMBDA:
                return cur
            cur = p

    def to_dict(self) -> dict:
        recs = []
        for v in np.flatnonzero(self.types >= 0):
            v = int(v)
            recs.append({
                "vertex": v,
                "time": float(self.times[v]),
                "type": PTYPE_NAMES[int(self.types[v])],
                "parent": int(self.parent_vertex[v]) if self.parent_vertex[v] >= 0 else None,
            })
        return {"stop_reason": self.stop_reason, "records": recs,
                "target_verdict": self.target_verdict}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def trace_jsonl(self) -> str:
        """Infection events in time order, one JSON record per line."""
        infected = np.flatnonzero(self.types >= 0)
        order = infected[np.argsort(self.times[infected], kind="stable")]
        lines = []
        for v in order:
            v = int(v)
            lines.append(json.dumps({
                "time": float(self.times[v]),
                "vertex": v,
                "type": PTYPE_NAMES[int(self.types[v])],
                "parent": int(self.parent_vertex[v]) if self.parent_vertex[v] >= 0 else None,
                "via_edge": int(self.parent_edge[v]) if self.parent_edge[v] >= 0 else None,
            }))
        return "\n".join(lines) + ("\n" if lines else "")


def _kernel_state(rng) -> np.uint64:
    if isinstance(rng, (int, np.integer)):
        return np.uint64(int(rng) & 0xFFFFFFFFFFFFFFFF)
    if isinstance(rng, np.random.Generator):
        return rng.integers(0, 2 ** 64, dtype=np.uint64)
    raise InvalidParameterError("rng must be an integer seed or a numpy Generator")


def _validate(g: Graph, origin: int, seeds: SeedConfig, lam: float):
    if not (0 <= origin < g.vertex_count):
        raise InvalidParameterError(f"origin {origin} not in graph")
    if len(seeds.is_seed) != g.vertex_count:
        raise InvalidParameterError("seed config length does not match graph")
    if seeds.is_seed[origin]:
        raise InvalidParameterError("origin must not host a seed")
    if lam <= 0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")


def simulate(g: Graph, origin: int, seeds: SeedConfig, lam: float,
             stop: StopCondition, rng) -> SimOutcome:
    """Event-driven simulation via lazy exponential sampling (fast path)."""
    _validate(g, origin, seeds, lam)
    indptr, adj_v, adj_e = g.csr()
    n = g.vertex_count
    times = np.full(n, np.inf)
    types = np.full(n, -1, dtype=np.int8)
    parent_v = np.full(n, -1, dtype=np.int64)
    parent_e = np.full(n, -1, dtype=np.int64)
    st = np.array([_kernel_state(rng)], dtype=np.uint64)
    code = _sim_core(
        indptr, adj_v, adj_e, seeds.is_seed, origin, float(lam),
        -1 if stop.target is None else int(stop.target),
        np.inf if stop.time_horizon is None else float(stop.time_horizon),
        np.iinfo(np.int64).max if stop.max_infected is None else int(stop.max_infected),
        False, np.zeros(1, dtype=np.bool_), st,
        times, types, parent_v, parent_e,
    )
    if code < 0:
        raise AssertionError("event pop order was not nondecreasing")
    return SimOutcome(times, types, parent_v, parent_e,
                      STOP_NAMES[code], stop.target)


def first_passage_time(g: Graph, origin: int, target: int, seeds: SeedConfig,
                       lam: float, rng) -> tuple[float, int]:
    """Infection time and type of `target` (the mixed passage time)."""
    out = simulate(g, origin, seeds, lam, StopCondition(target=target), rng)
    if out.stop_reason != "target-reached":
        raise UnreachableTargetError(f"target {target} never infected ({out.stop_reason})")
    return float(out.times[target]), int(out.types[target])


def explicit_clock_simulate(g: Graph, origin: int, seeds: SeedConfig, lam: float,
                            stop: StopCondition, rng) -> SimOutcome:
    """Literal clock bookkeeping oracle: every boundary edge keeps a live
    exponential clock, redrawn at each event (memorylessness), and the global
    clock advances to the earliest ring.  O(E^2); small graphs only."""
    _validate(g, origin, seeds, lam)
    if isinstance(rng, (int, np.integer)):
        rng = np.random.Generator(np.random.Philox(key=int(rng)))
    n = g.vertex_count
    times = np.full(n, np.inf)
    types = np.full(n, -1, dtype=np.int8)
    parent_v = np.full(n, -1, dtype=np.int64)
    parent_e = np.full(n, -1, dtype=np.int64)

    times[origin] = 0.0
    types[origin] = PTYPE_FPP1
    t = 0.0
    n_infected = 1
    target = -1 if stop.target is None else stop.target
    horizon = np.inf if stop.time_horizon is None else stop.time_horizon
    budget = np.iinfo(np.int64).max if stop.max_infected is None else stop.max_infected

    def finish(code):
        return SimOutcome(times, types, parent_v, parent_e, STOP_NAMES[code], stop.target)

    if target == origin:
        return finish(STOP_TARGET)

    while True:
        best = None  # (dt, v, eid, u)
        for eid, (a, b) in enumerate(g.edges):
            for u, v in ((a, b), (b, a)):
                if types[u] >= 0 and types[v] < 0:
                    rate = lam if types[u] == PTYPE_FPPLAMBDA else 1.0
                    cand = (rng.exponential(1.0 / rate), v, eid, u)
                    if best is None or cand[:3] < best[:3]:
                        best = cand
        if best is None:
            return finish(STOP_EXHAUSTED)
        dt, v, eid, u = best
        t += dt
        if t > horizon:
            return finish(STOP_HORIZON)
        types[v] = (PTYPE_FPPLAMBDA if (seeds.is_seed[v] or types[u] == PTYPE_FPPLAMBDA)
                    else PTYPE_FPP1)
        times[v] = t
        parent_v[v] = u
        parent_e[v] = eid
        n_infected += 1
        if v == target:
            return finish(STOP_TARGET)
        if n_infected >= budget:
            return finish(STOP_BUDGET)
