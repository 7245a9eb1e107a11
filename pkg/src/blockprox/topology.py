"""Coupling structure between nodes: graphs, hypergraphs and their statistics.

Node and component indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class IsolatedNodeError(ValueError):
    """Raised when an operation needs an incident edge and the node has none."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on ``n`` nodes.

    Edges are stored as an ``(m, 2)`` integer array with ``i < j`` in each row.
    """

    n: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.n < 0:
            raise ValueError("node count must be non-negative")
        if e.size:
            if np.any(e[:, 0] >= e[:, 1]):
                raise ValueError("edges must satisfy i < j (no self-loops)")
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if len(np.unique(e, axis=0)) != len(e):
                raise ValueError("duplicate edge")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph from unordered pairs, normalising each to ``i < j``."""
        rows = [(min(i, j), max(i, j)) for i, j in pairs]
        return cls(n, np.array(rows, dtype=np.int64).reshape(-1, 2))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def incident_edges(self, i: int) -> np.ndarray:
        """Indices of edges touching node ``i``, in edge order."""
        return np.flatnonzero((self.edges[:, 0] == i) | (self.edges[:, 1] == i))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        a[self.edges[:, 0], self.edges[:, 1]] = 1.0
        a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a


@dataclass(frozen=True)
class Hypergraph:
    """Support sets ``S_j`` of a partially separable regularizer."""

    n: int
    supports: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        sup = tuple(tuple(sorted(set(int(i) for i in s))) for s in self.supports)
        if not sup:
            raise ValueError("a hypergraph needs at least one support set")
        for s in sup:
            if not s:
                raise ValueError("support sets must be nonempty")
            if s[0] < 0 or s[-1] >= self.n:
                raise ValueError(f"support {s} has a member outside 0..{self.n - 1}")
        object.__setattr__(self, "supports", sup)

    @property
    def m(self) -> int:
        return len(self.supports)

    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.supports], dtype=np.int64)

    def membership_counts(self) -> np.ndarray:
        """``d_i``: number of supports containing node ``i``."""
        d = np.zeros(self.n, dtype=np.int64)
        for s in self.supports:
            d[list(s)] += 1
        return d

    def membership_matrix(self) -> np.ndarray:
        """Boolean ``(n, m)`` matrix with entry ``[i, j] = (i in S_j)``."""
        delta = np.zeros((self.n, self.m), dtype=bool)
        for j, s in enumerate(self.supports):
            delta[list(s), j] = True
        return delta


def hypergraph_from_graph(g: Graph) -> Hypergraph:
    """One size-two support per edge, in edge order."""
    return Hypergraph(g.n, tuple((int(i), int(j)) for i, j in g.edges))


def expected_comm_per_iteration(h: Hypergraph) -> float:
    """Expected unit messages per BlockProx iteration, ``sum_j (a_j^2 - a_j) / m``."""
    a = h.sizes()
    return float(np.sum(a * a - a) / h.m)


def node_comm_probability(h: Hypergraph, i: int) -> float:
    """Probability ``d_i / m`` that node ``i`` samples a component containing it."""
    if not 0 <= i < h.n:
        raise IndexError(f"node {i} out of range")
    return float(h.membership_counts()[i] / h.m)


def uniform_index(u, k):
    """Map uniform draws ``u`` in [0, 1) to integers in ``0..k-1``.

    Shared by every sampler so that one double is consumed per index.
    """
    return np.minimum((np.asarray(u) * k).astype(np.int64), np.asarray(k) - 1)


def sample_component(h: Hypergraph, rng: np.random.Generator) -> int:
    """Draw ``j ~ Unif{0..m-1}``.

    Consumes exactly one ``rng.random()`` double.
    """
    return int(uniform_index(rng.random(), h.m))


def sample_incident_edge(g: Graph, i: int, rng: np.random.Generator) -> int:
    """Draw an edge index uniformly among the edges incident to ``i``.

    Consumes exactly one ``rng.random()`` double.
    """
    inc = g.incident_edges(i)
    if len(inc) == 0:
        raise IsolatedNodeError(f"node {i} has no incident edges")
    return int(inc[uniform_index(rng.random(), len(inc))])


def sbm_generate(
    group_sizes: Sequence[int],
    p_in: float,
    p_out: float,
    rng: np.random.Generator,
) -> Graph:
    """Stochastic block model graph.

    Every pair ``i < j`` is considered once in row-major order and kept with
    probability ``p_in`` (same group) or ``p_out`` (different groups). One
    double is drawn per pair, so the draw count is ``n(n-1)/2`` regardless of
    the probabilities. Isolated nodes are possible.
    """
    if len(group_sizes) == 0:
        raise ValueError("at least one group is required")
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    labels = np.repeat(np.arange(len(group_sizes)), group_sizes)
    n = len(labels)
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(len(iu)) < p
    return Graph(n, np.column_stack([iu[keep], ju[keep]]))


def group_labels(group_sizes: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(group_sizes)), group_sizes)


def metropolis_hastings_weights(g: Graph) -> np.ndarray:
    """Symmetric doubly stochastic mixing matrix supported on the graph.

    Off-diagonal weight for edge ``(i, j)`` is ``1 / (1 + max(deg i, deg j))``;
    the diagonal takes what is left of each row.
    """
    deg = g.degrees()
    w = np.zeros((g.n, g.n))
    if g.m:
        i, j = g.edges[:, 0], g.edges[:, 1]
        wij = 1.0 / (1.0 + np.maximum(deg[i], deg[j]))
        w[i, j] = wij
        w[j, i] = wij
    w[np.diag_indices(g.n)] = 1.0 - w.sum(axis=1)
    return w


# -- plain-text formats ------------------------------------------------------


def graph_text(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"] + [f"{i} {j}" for i, j in g.edges]
    return "\n".join(lines) + "\n"


def write_graph(g: Graph, path) -> None:
    Path(path).write_text(graph_text(g))


def read_graph(path) -> Graph:
    rows = _read_rows(path)
    n, m = _header(rows, path)
    if len(rows) - 1 != m:
        raise ValueError(f"{path}: header declares {m} edges, found {len(rows) - 1}")
    pairs = []
    for k, r in enumerate(rows[1:], start=2):
        if len(r) != 2:
            raise ValueError(f"{path}: line {k}: expected 'i j'")
        pairs.append((int(r[0]), int(r[1])))
    return Graph.from_pairs(n, pairs)


def write_hypergraph(h: Hypergraph, path) -> None:
    lines = [f"{h.n} {h.m}"]
    lines += [" ".join(map(str, (len(s),) + s)) for s in h.supports]
    Path(path).write_text("\n".join(lines) + "\n")


def read_hypergraph(path) -> Hypergraph:
    rows = _read_rows(path)
    n, m = _header(rows, path)
    if len(rows) - 1 != m:
        raise ValueError(f"{path}: header declares {m} supports, found {len(rows) - 1}")
    supports = []
    for k, r in enumerate(rows[1:], start=2):
        a = int(r[0])
        if len(r) != a + 1:
            raise ValueError(f"{path}: line {k}: declared size {a}, got {len(r) - 1} members")
        supports.append(tuple(int(v) for v in r[1:]))
    return Hypergraph(n, tuple(supports))


def read_topology(path) -> Hypergraph:
    """Read either file format; a graph file becomes its edge hypergraph.

    A file whose rows all have two entries is read as a graph, so a
    hypergraph made only of singleton supports must be read with
    :func:`read_hypergraph`.
    """
    rows = _read_rows(path)
    if all(len(r) == 2 for r in rows[1:]):
        return hypergraph_from_graph(read_graph(path))
    return read_hypergraph(path)


def _read_rows(path) -> list[list[str]]:
    text = Path(path).read_text()
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty topology file")
    return rows


def _header(rows, path) -> tuple[int, int]:
    if len(rows[0]) != 2:
        raise ValueError(f"{path}: first line must be 'n m'")
    return int(rows[0][0]), int(rows[0][1])
