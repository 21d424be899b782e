"""Problem graphs: random regular sampling, ring completion and coupler accounting."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    """Invalid graph or infeasible generator parameters."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    Edges are stored canonically as a sorted tuple of ``(u, v)`` with ``u < v``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise GraphError(f"vertex count must be >= 0, got {self.n}")
        canon = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {(u, v)} has endpoint outside [0, {self.n})")
            key = (min(u, v), max(u, v))
            if key in canon:
                raise GraphError(f"duplicate edge {key}")
            canon.add(key)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(n, tuple((u, v) for u in range(n) for v in range(u + 1, n)))

    @classmethod
    def cycle(cls, n: int) -> Graph:
        return cls(n, tuple((i, (i + 1) % n) for i in range(n)))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_set

    @property
    def _edge_set(self) -> frozenset:
        cached = self.__dict__.get("_es")
        if cached is None:
            cached = frozenset(self.edges)
            object.__setattr__(self, "_es", cached)
        return cached

    def neighbors(self, u: int) -> list[int]:
        out = [b for a, b in self.edges if a == u] + [a for a, b in self.edges if b == u]
        return sorted(out)

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> Graph:
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))


def write_graph(g: Graph, path) -> None:
    Path(path).write_text(json.dumps(g.to_dict()) + "\n")


def read_graph(path) -> Graph:
    return Graph.from_dict(json.loads(Path(path).read_text()))


def generate_random_regular(n: int, d: int, seed) -> Graph:
    """Sample a uniformly random simple ``d``-regular graph on ``n`` vertices.

    Pairing (configuration) model: shuffle the ``n*d`` stubs, pair them off in
    order, and restart from scratch whenever a loop or a repeated edge
    appears. Conditioning a uniform pairing on simplicity yields the uniform
    distribution over simple regular graphs. Dense requests are served by
    sampling the complementary ``(n-1-d)``-regular graph the same way.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if n < 2:
        raise GraphError(f"need n >= 2, got {n}")
    if d < 0 or d >= n:
        raise GraphError(f"need 0 <= d < n, got d={d}, n={n}")
    if (n * d) % 2:
        raise GraphError(f"n*d must be even, got n={n}, d={d}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if d == 0:
        return Graph(n, ())
    if 2 * d > n - 1:
        # complementing is a bijection onto (n-1-d)-regular graphs, which pair far more easily
        sparse = generate_random_regular(n, n - 1 - d, rng)
        return Graph(n, tuple(e for e in Graph.complete(n).edges if not sparse.has_edge(*e)))
    stubs = np.repeat(np.arange(n), d)
    # independent pairings are drawn in batches; the first simple one wins
    batch = 1024
    while True:
        perms = rng.permuted(np.broadcast_to(stubs, (batch, stubs.size)), axis=1)
        pairs = perms.reshape(batch, -1, 2)
        lo = pairs.min(axis=2)
        hi = pairs.max(axis=2)
        keys = np.sort(lo * n + hi, axis=1)
        simple = ~np.any(lo == hi, axis=1) & ~np.any(np.diff(keys, axis=1) == 0, axis=1)
        hits = np.flatnonzero(simple)
        if hits.size:
            r = hits[0]
            return Graph(n, tuple(zip(lo[r].tolist(), hi[r].tolist())))


def _check_ordering(ordering, n: int) -> list[int]:
    order = [int(x) for x in ordering]
    if sorted(order) != list(range(n)):
        raise GraphError(f"ordering must be a permutation of 0..{n - 1}")
    return order


def ring_edges(ordering) -> set[tuple[int, int]]:
    order = list(ordering)
    n = len(order)
    if n < 2:
        return set()
    out = set()
    for i in range(n):
        u, v = order[i], order[(i + 1) % n]
        if u != v:
            out.add((min(u, v), max(u, v)))
    return out


def cycle_completion(g: Graph, ordering) -> set[tuple[int, int]]:
    """Ring edges along ``ordering`` that ``g`` lacks (extra XY-driver couplers)."""
    order = _check_ordering(ordering, g.n)
    return {e for e in ring_edges(order) if not g.has_edge(*e)}


def greedy_ordering(g: Graph) -> list[int]:
    """Walk the graph preferring existing edges, to shrink the ring completion.

    Deterministic: start at vertex 0, step to the smallest unvisited
    neighbour; when stuck, jump to the smallest unvisited vertex.
    """
    if g.n == 0:
        return []
    adj = [set() for _ in range(g.n)]
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    order = [0]
    seen = {0}
    while len(order) < g.n:
        cur = order[-1]
        nxt = sorted(adj[cur] - seen)
        step = nxt[0] if nxt else min(set(range(g.n)) - seen)
        order.append(step)
        seen.add(step)
    return order


@dataclass(frozen=True)
class ResourceReport:
    method: str
    base_edges: int
    additional_edges: int
    max_degree: int
    # order-of-magnitude proxy, not an embedding result
    embedding_qubit_estimate: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def resource_report(g: Graph, method: str, ordering=None) -> ResourceReport:
    """Count the couplers each encoding needs on top of the problem graph.

    The penalty method needs the complete graph (the squared magnetization
    couples every pair). CQA needs only the ring edges missing from ``g``.
    """
    n = g.n
    if method == "penalty":
        full = n * (n - 1) // 2
        return ResourceReport(
            method="penalty",
            base_edges=len(g.edges),
            additional_edges=full - len(g.edges),
            max_degree=max(n - 1, 0),
            embedding_qubit_estimate=full + n,
        )
    if method == "cqa":
        order = list(range(n)) if ordering is None else ordering
        extra = cycle_completion(g, order)
        combined = Graph(n, g.edges + tuple(sorted(extra)))
        return ResourceReport(
            method="cqa",
            base_edges=len(g.edges),
            additional_edges=len(extra),
            max_degree=combined.max_degree,
            embedding_qubit_estimate=len(extra),
        )
    raise ValueError(f"unknown method {method!r}")
