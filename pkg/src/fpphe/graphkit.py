"""Builders for the finite multigraphs the toolkit simulates on.

All graphs are immutable after construction: dense integer vertex ids assigned
in breadth-first order, an explicit edge list (parallel edges allowed, each
with its own id = list index), named landmark vertices, per-vertex role tags
and generation tags.
"""

from __future__ import annotations

import json
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, ResourceCapError

GRAPH_MAGIC = "FPPHE-GRAPH-v1"

# Role tags.
ROLE_GENERIC = 0
ROLE_ORIGIN = 1
ROLE_UPPER = 2
ROLE_LOWER = 3
ROLE_TAIL = 4
ROLE_CAP = 5

ROLE_NAMES = {
    ROLE_GENERIC: "generic",
    ROLE_ORIGIN: "origin",
    ROLE_UPPER: "upper-part",
    ROLE_LOWER: "lower-part",
    ROLE_TAIL: "tail",
    ROLE_CAP: "cap",
}

DEFAULT_VERTEX_CAP = 50_000_000


def vertex_cap() -> int:
    """Hard cap on constructed vertex counts; FPPHE_VERTEX_CAP overrides."""
    return int(os.environ.get("FPPHE_VERTEX_CAP", DEFAULT_VERTEX_CAP))


@dataclass
class TileParams:
    """Sizes of the two-branch tile: D-ary upper tree of height L, binary
    lower tree of height H, and a connecting path of R edges."""

    D: int
    L: int
    H: int
    R: int

    def __post_init__(self):
        if self.D < 2:
            raise InvalidParameterError(f"tile needs D >= 2, got {self.D}")
        for name in ("L", "H", "R"):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"tile needs {name} >= 1")


@dataclass
class Graph:
    """Immutable finite multigraph with landmark labels.

    Edges are undirected, stored once as (a, b) with implicit edge id = index.
    Self-loops are forbidden; parallel edges are distinct by index.
    """

    vertex_count: int
    edges: list[tuple[int, int]]
    landmarks: dict[str, int] = field(default_factory=dict)
    roles: np.ndarray | None = None          # int8, one tag per vertex
    generation: np.ndarray | None = None     # int32, -1 where undefined

    def __post_init__(self):
        if self.roles is None:
            self.roles = np.zeros(self.vertex_count, dtype=np.int8)
        else:
            self.roles = np.asarray(self.roles, dtype=np.int8)
        if self.generation is None:
            self.generation = np.full(self.vertex_count, -1, dtype=np.int32)
        else:
            self.generation = np.asarray(self.generation, dtype=np.int32)
        self._validate()
        self._csr = None

    def _validate(self):
        n = self.vertex_count
        for a, b in self.edges:
            if a == b:
                raise InvalidParameterError(f"self-loop at vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise InvalidParameterError(f"edge ({a},{b}) out of range")
        for name, v in self.landmarks.items():
            if not (0 <= v < n):
                raise InvalidParameterError(f"landmark {name!r} -> invalid vertex {v}")
        if len(self.roles) != n or len(self.generation) != n:
            raise InvalidParameterError("role/generation arrays must match vertex count")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return sum((a == v) + (b == v) for a, b in self.edges)

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Adjacency in CSR form over directed edge instances:
        (indptr, neighbor vertex, edge id).  Cached; order deterministic."""
        if self._csr is None:
            n = self.vertex_count
            deg = np.zeros(n, dtype=np.int64)
            for a, b in self.edges:
                deg[a] += 1
                deg[b] += 1
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(deg, out=indptr[1:])
            adj_v = np.empty(indptr[-1], dtype=np.int64)
            adj_e = np.empty(indptr[-1], dtype=np.int64)
            cursor = indptr[:-1].copy()
            for eid, (a, b) in enumerate(self.edges):
                adj_v[cursor[a]] = b
                adj_e[cursor[a]] = eid
                cursor[a] += 1
                adj_v[cursor[b]] = a
                adj_e[cursor[b]] = eid
                cursor[b] += 1
            self._csr = (indptr, adj_v, adj_e)
        return self._csr

    def bfs_distances(self, source: int) -> np.ndarray:
        dist = np.full(self.vertex_count, -1, dtype=np.int32)
        dist[source] = 0
        indptr, adj_v, _ = self.csr()
        q = deque([source])
        while q:
            u = q.popleft()
            for k in range(indptr[u], indptr[u + 1]):
                v = adj_v[k]
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    q.append(v)
        return dist

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": GRAPH_MAGIC,
            "vertex_count": self.vertex_count,
            "edges": [[int(a), int(b)] for a, b in self.edges],
            "landmarks": {k: int(v) for k, v in self.landmarks.items()},
            "roles": self.roles.tolist(),
            "generation": self.generation.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        if d.get("format") != GRAPH_MAGIC:
            raise InvalidParameterError(f"not a {GRAPH_MAGIC} dump")
        return cls(
            vertex_count=d["vertex_count"],
            edges=[(a, b) for a, b in d["edges"]],
            landmarks=dict(d["landmarks"]),
            roles=np.array(d["roles"], dtype=np.int8),
            generation=np.array(d["generation"], dtype=np.int32),
        )

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))


def _check_cap(n_vertices: int):
    cap = vertex_cap()
    if n_vertices > cap:
        raise ResourceCapError(f"construction needs {n_vertices} vertices, cap is {cap}")


def complete_tree_size(d: int, h: int) -> int:
    if d == 1:
        return h + 1
    return (d ** (h + 1) - 1) // (d - 1)


def build_complete_tree(d: int, h: int) -> Graph:
    """Rooted tree where every vertex above depth h has exactly d children.

    Vertex ids are breadth-first: the root is 0, generation g occupies a
    contiguous block.
    """
    if d < 1:
        raise InvalidParameterError(f"tree degree must be >= 1, got {d}")
    if h < 0:
        raise InvalidParameterError(f"tree height must be >= 0, got {h}")
    n = complete_tree_size(d, h)
    _check_cap(n)
    edges = []
    generation = np.empty(n, dtype=np.int32)
    generation[0] = 0
    next_id = 1
    frontier = [0]
    for g in range(h):
        new_frontier = []
        for parent in frontier:
            for _ in range(d):
                edges.append((parent, next_id))
                generation[next_id] = g + 1
                new_frontier.append(next_id)
                next_id += 1
        frontier = new_frontier
    return Graph(n, edges, landmarks={"root": 0}, generation=generation)


def build_capped_tree(d: int, h: int, merge_parallel_edges: bool = False) -> Graph:
    """Complete tree of height h+1 with the whole last generation merged into
    a single cap vertex W.

    The merge keeps edge multiplicity by default (W gets d parallel edges from
    each generation-h vertex, d^{h+1} in total); `merge_parallel_edges=True`
    collapses them to simple edges.
    """
    core = build_complete_tree(d, h)
    n = core.vertex_count + 1
    _check_cap(n)
    w = n - 1
    edges = list(core.edges)
    gen_h = [v for v in range(core.vertex_count) if core.generation[v] == h]
    per_parent = 1 if merge_parallel_edges else d
    for parent in gen_h:
        for _ in range(per_parent):
            edges.append((parent, w))
    roles = np.zeros(n, dtype=np.int8)
    roles[w] = ROLE_CAP
    generation = np.concatenate([core.generation, np.array([h + 1], dtype=np.int32)])
    return Graph(n, edges, landmarks={"root": 0, "W": w}, roles=roles, generation=generation)


def capped_tree_size(d: int, h: int) -> int:
    return complete_tree_size(d, h) + 1


def tile_size(p: TileParams) -> int:
    return 1 + capped_tree_size(p.D, p.L) + capped_tree_size(2, p.H) + (p.R - 1) + 1


def build_tile(p: TileParams, merge_parallel_edges: bool = False) -> Graph:
    """The two-branch tile: origin O, upper capped D-ary tree of height L
    ending in W_up with a single edge to the tail B, and lower capped binary
    tree of height H ending in W_low with a path of R edges to B."""
    n_up = capped_tree_size(p.D, p.L)
    n_low = capped_tree_size(2, p.H)
    n = tile_size(p)
    _check_cap(n)

    o = 0
    up_base = 1
    low_base = up_base + n_up
    path_base = low_base + n_low
    b = n - 1

    o_up = up_base
    o_low = low_base

    edges = [(o, o_up), (o, o_low)]

    upper = build_capped_tree(p.D, p.L, merge_parallel_edges)
    w_up = up_base + upper.landmarks["W"]
    for a, bb in upper.edges:
        edges.append((up_base + a, up_base + bb))

    lower = build_capped_tree(2, p.H, merge_parallel_edges)
    w_low = low_base + lower.landmarks["W"]
    for a, bb in lower.edges:
        edges.append((low_base + a, low_base + bb))

    edges.append((w_up, b))

    # Path of R edges from W_low to B via R-1 fresh vertices.
    prev = w_low
    for i in range(p.R - 1):
        v = path_base + i
        edges.append((prev, v))
        prev = v
    edges.append((prev, b))

    roles = np.zeros(n, dtype=np.int8)
    roles[o] = ROLE_ORIGIN
    roles[up_base:up_base + n_up] = ROLE_UPPER
    roles[low_base:low_base + n_low] = ROLE_LOWER
    roles[path_base:path_base + p.R - 1] = ROLE_LOWER
    roles[b] = ROLE_TAIL

    landmarks = {
        "O": o, "O_up": o_up, "O_low": o_low,
        "W_up": w_up, "W_low": w_low, "B": b,
    }
    g = Graph(n, edges, landmarks=landmarks, roles=roles)
    g.generation = g.bfs_distances(o)
    return g


def tile_tree_size(phi: int, depth: int, p: TileParams) -> int:
    junctions = (depth + 1) if phi == 1 else (phi ** (depth + 1) - 1) // (phi - 1)
    tiles = junctions - 1
    return junctions + tiles * (tile_size(p) - 2)


def build_tile_tree(phi: int, depth: int, p: TileParams,
                    merge_parallel_edges: bool = False) -> Graph:
    """Depth-truncated forward tile-tree: a rooted phi-ary tree of junction
    vertices where each junction edge is a fresh tile copy, the tile's O
    identified with the parent junction and B with the child junction.

    Junction generation tags carry the tree level; tile-internal vertices are
    tagged -1.  The root landmark is the global origin "o".
    """
    if phi < 1:
        raise InvalidParameterError(f"phi must be >= 1, got {phi}")
    if depth < 1:
        raise InvalidParameterError(f"depth must be >= 1, got {depth}")
    n = tile_tree_size(phi, depth, p)
    _check_cap(n)

    template = build_tile(p, merge_parallel_edges)
    t_n = template.vertex_count
    t_b = t_n - 1  # tail is the last id by construction

    junctions = (depth + 1) if phi == 1 else (phi ** (depth + 1) - 1) // (phi - 1)
    level = np.empty(junctions, dtype=np.int32)
    level[0] = 0
    nid = 1
    frontier = [0]
    slots = []  # (parent junction, child junction) in BFS order
    for ell in range(depth):
        nxt = []
        for pj in frontier:
            for _ in range(phi):
                level[nid] = ell + 1
                slots.append((pj, nid))
                nxt.append(nid)
                nid += 1
        frontier = nxt

    edges = []
    roles = np.zeros(n, dtype=np.int8)
    generation = np.full(n, -1, dtype=np.int32)
    roles[0] = ROLE_ORIGIN
    roles[1:junctions] = ROLE_TAIL
    generation[:junctions] = level

    base = junctions
    for pj, cj in slots:
        # tile vertex v maps to: O -> pj, B -> cj, internal -> base + v - 1
        def vmap(v, pj=pj, cj=cj, base=base):
            if v == 0:
                return pj
            if v == t_b:
                return cj
            return base + v - 1
        for a, bb in template.edges:
            edges.append((vmap(a), vmap(bb)))
        roles[base:base + t_n - 2] = template.roles[1:t_b]
        base += t_n - 2

    return Graph(n, edges, landmarks={"o": 0}, roles=roles, generation=generation)


def is_tile(g: Graph) -> bool:
    needed = {"O", "O_up", "O_low", "W_up", "W_low", "B"}
    return (needed <= g.landmarks.keys()
            and int(np.sum(g.roles == ROLE_ORIGIN)) == 1
            and int(np.sum(g.roles == ROLE_TAIL)) == 1)


def restrict_to_side(tile: Graph, side: str) -> Graph:
    """Subgraph of a tile induced by O, B and one branch ("upper" or "lower").

    Vertex ids are compacted in ascending original order; landmarks that fall
    inside the kept set are preserved.  Idempotent per side.
    """
    if side not in ("upper", "lower"):
        raise InvalidParameterError(f"side must be 'upper' or 'lower', got {side!r}")
    if "O" not in tile.landmarks or "B" not in tile.landmarks:
        raise InvalidParameterError("restrict_to_side needs a tile with O and B landmarks")
    if int(np.sum(tile.roles == ROLE_ORIGIN)) != 1 or int(np.sum(tile.roles == ROLE_TAIL)) != 1:
        raise InvalidParameterError("restrict_to_side needs tile role tags")
    side_role = ROLE_UPPER if side == "upper" else ROLE_LOWER
    keep = (tile.roles == side_role) | (tile.roles == ROLE_ORIGIN) | (tile.roles == ROLE_TAIL)
    old_ids = np.flatnonzero(keep)
    remap = {int(v): i for i, v in enumerate(old_ids)}
    edges = [(remap[a], remap[b]) for a, b in tile.edges if keep[a] and keep[b]]
    landmarks = {k: remap[v] for k, v in tile.landmarks.items() if keep[v]}
    return Graph(
        vertex_count=len(old_ids),
        edges=edges,
        landmarks=landmarks,
        roles=tile.roles[old_ids].copy(),
        generation=tile.generation[old_ids].copy(),
    )


def export_dot(g: Graph, name: str = "fpphe") -> str:
    """DOT text; landmark vertices carry label attributes, parallel edges are
    emitted as separate edge statements."""
    by_vertex: dict[int, list[str]] = {}
    for lname, v in g.landmarks.items():
        by_vertex.setdefault(v, []).append(lname)
    lines = [f"graph {name} {{"]
    for v in sorted(by_vertex):
        label = ",".join(sorted(by_vertex[v]))
        lines.append(f'  {v} [label="{label}"];')
    for a, b in g.edges:
        lines.append(f"  {a} -- {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def articulation_points(g: Graph) -> set[int]:
    """Cutpoints of the multigraph (iterative Tarjan; parallel edges count as
    a single adjacency for this purpose)."""
    n = g.vertex_count
    adj = [set() for _ in range(n)]
    for a, b in g.edges:
        adj[a].add(b)
        adj[b].add(a)
    disc = [-1] * n
    low = [0] * n
    result: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        stack = [(root, -1, iter(adj[root]))]
        disc[root] = low[root] = timer
        timer += 1
        root_children = 0
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v in it:
                if disc[v] == -1:
                    disc[v] = low[v] = timer
                    timer += 1
                    if u == root:
                        root_children += 1
                    stack.append((v, u, iter(adj[v])))
                    advanced = True
                    break
                elif v != parent:
                    low[u] = min(low[u], disc[v])
            if not advanced:
                stack.pop()
                if stack:
                    pu = stack[-1][0]
                    low[pu] = min(low[pu], low[u])
                    if pu != root and low[u] >= disc[pu]:
                        result.add(pu)
        if root_children > 1:
            result.add(root)
    return result


def graph_from_spec(spec: dict) -> Graph:
    """Build a graph from a JSON-friendly description (used by CLI plans)."""
    kind = spec.get("kind")
    merge = bool(spec.get("merge_parallel_edges", False))
    if kind == "complete-tree":
        return build_complete_tree(spec["d"], spec["h"])
    if kind == "capped-tree":
        return build_capped_tree(spec["d"], spec["h"], merge)
    if kind == "tile":
        return build_tile(TileParams(spec["D"], spec["L"], spec["H"], spec["R"]), merge)
    if kind == "tile-side":
        tile = build_tile(TileParams(spec["D"], spec["L"], spec["H"], spec["R"]), merge)
        return restrict_to_side(tile, spec["side"])
    if kind == "tile-tree":
        p = TileParams(spec["D"], spec["L"], spec["H"], spec["R"])
        return build_tile_tree(spec["phi"], spec["depth"], p, merge)
    if kind == "path":
        k = spec["length"]
        g = Graph(k + 1, [(i, i + 1) for i in range(k)],
                  landmarks={"O": 0, "B": k})
        g.generation = np.arange(k + 1, dtype=np.int32)
        return g
    if kind == "explicit":
        return Graph.from_dict(spec["graph"])
    raise InvalidParameterError(f"unknown graph kind {kind!r}")
