"""Simple undirected graphs, edge-list I/O and exhaustive clique search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import atomic_write_text

MAX_CLIQUE_SEARCH_N = 20


@dataclass(frozen=True)
class Graph:
    """Vertices are ``0..n-1``; edges are stored as sorted pairs."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __init__(self, n: int, edges=()):
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        norm = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) out of range for n = {n}")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(norm))

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def non_edges(self) -> list[tuple[int, int]]:
        return [e for e in itertools.combinations(range(self.n), 2) if e not in self.edges]

    def is_clique(self, S) -> bool:
        return all(self.has_edge(a, b) for a, b in itertools.combinations(sorted(S), 2))

    def canonical(self) -> tuple:
        """Lexicographically smallest edge list over all relabelings (small n only)."""
        best = None
        for perm in itertools.permutations(range(self.n)):
            key = tuple(sorted((min(perm[a], perm[b]), max(perm[a], perm[b])) for a, b in self.edges))
            if best is None or key < best:
                best = key
        return (self.n, best)

    def to_text(self) -> str:
        lines = [f"{self.n} {len(self.edges)}"]
        lines += [f"{a + 1} {b + 1}" for a, b in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise ValueError("edge list must start with an 'n m' header")
        n, m = int(rows[0][0]), int(rows[0][1])
        if len(rows) - 1 != m:
            raise ValueError(f"header promises {m} edges, found {len(rows) - 1}")
        edges = []
        for r in rows[1:]:
            if len(r) != 2:
                raise ValueError(f"bad edge line {' '.join(r)!r}")
            edges.append((int(r[0]) - 1, int(r[1]) - 1))
        return cls(n, edges)


def read_graph(path) -> Graph:
    return Graph.from_text(Path(path).read_text(encoding="utf-8"))


def write_graph(path, G: Graph) -> None:
    atomic_write_text(path, G.to_text())


def find_clique(G: Graph, k: int) -> tuple[int, ...] | None:
    """First k-clique in lexicographic order, or None."""
    if G.n > MAX_CLIQUE_SEARCH_N:
        raise ValueError(f"exhaustive clique search is capped at n = {MAX_CLIQUE_SEARCH_N}; supply the clique")
    adj = [set() for _ in range(G.n)]
    for a, b in G.edges:
        adj[a].add(b)
        adj[b].add(a)

    def grow(chosen: list[int], cands: list[int]):
        if len(chosen) == k:
            return tuple(chosen)
        for j, v in enumerate(cands):
            if len(chosen) + len(cands) - j < k:
                return None
            found = grow(chosen + [v], [u for u in cands[j + 1:] if u in adj[v]])
            if found:
                return found
        return None

    return grow([], list(range(G.n))) if 1 <= k <= G.n else None


def all_graphs(n: int):
    pairs = list(itertools.combinations(range(n), 2))
    for bits in range(1 << len(pairs)):
        yield Graph(n, [p for j, p in enumerate(pairs) if bits >> j & 1])


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    pairs = list(itertools.combinations(range(n), 2))
    keep = rng.random(len(pairs)) < p
    return Graph(n, [e for e, on in zip(pairs, keep) if on])


def plant_clique(G: Graph, S) -> Graph:
    return Graph(G.n, set(G.edges) | set(itertools.combinations(sorted(S), 2)))
