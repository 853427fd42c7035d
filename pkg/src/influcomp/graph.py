"""Undirected social graphs: loading, writing, power-law generation."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph in CSR form over node ids ``0..n-1``.

    ``labels[i]`` is the id node ``i`` carried in its source file (identity
    for generated graphs).  ``latent_edges`` lists pairs added by latent-space
    link recovery, if any; they are already part of the adjacency.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    labels: np.ndarray = field(default=None)
    latent_edges: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.labels is None:
            object.__setattr__(self, "labels", np.arange(self.n, dtype=np.int64))
        if self.latent_edges is None:
            object.__setattr__(self, "latent_edges", np.empty((0, 2), dtype=np.int64))

    @classmethod
    def from_edges(cls, n: int, edges, labels=None, latent_edges=None) -> "Graph":
        """Build from an iterable/array of (u, v) pairs; drops loops and duplicates."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint outside 0..n-1")
        e = e[e[:, 0] != e[:, 1]]
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0) if len(e) else e
        both = np.concatenate([e, e[:, ::-1]]) if len(e) else e
        order = np.lexsort((both[:, 1], both[:, 0])) if len(both) else np.empty(0, int)
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=n) if len(both) else np.zeros(n, int)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = both[:, 1].astype(np.int64) if len(both) else np.empty(0, np.int64)
        return cls(n, indptr, indices, labels=labels, latent_edges=latent_edges)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"node {i} out of range 0..{self.n - 1}")
        return int(self.indptr[i + 1] - self.indptr[i])

    def edges(self) -> np.ndarray:
        """Sorted (u, v) pairs with u < v."""
        src = np.repeat(np.arange(self.n), self.degrees)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < len(nb) and nb[k] == v)

    def adjacency_sets(self) -> list[set]:
        return [set(self.neighbors(i).tolist()) for i in range(self.n)]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"Graph(n={self.n}, |E|={self.edge_count})"


def degree(graph: Graph, i: int) -> int:
    return graph.degree(i)


def _parse_pair(line: str, lineno: int, path) -> tuple[int, int]:
    parts = line.split()
    if len(parts) < 2:
        raise GraphFormatError(f"{path}:{lineno}: expected two node ids, got {line!r}")
    try:
        u, v = int(parts[0]), int(parts[1])
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {line!r}") from None
    if u < 0 or v < 0:
        raise GraphFormatError(f"{path}:{lineno}: negative node id in {line!r}")
    if len(parts) > 2:
        raise GraphFormatError(f"{path}:{lineno}: trailing tokens in {line!r}")
    return u, v


def load_edge_list(path) -> Graph:
    """Read a whitespace-separated ``u v`` edge list.

    Lines starting with ``#`` are comments, as is anything after ``#`` on an
    edge line.  A ``# nodes: N`` comment (written by :func:`write_edge_list`)
    declares ids ``0..N-1`` up front so isolated nodes survive a round trip.
    Ids are remapped to ``0..n-1`` in increasing order of the original id.
    """
    pairs = []
    declared = None
    latent = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("nodes:"):
                    try:
                        declared = int(body.split(":", 1)[1])
                    except ValueError:
                        raise GraphFormatError(f"{path}:{lineno}: bad nodes header") from None
                continue
            data, _, comment = line.partition("#")
            u, v = _parse_pair(data, lineno, path)
            pairs.append((u, v))
            if comment.strip() == "latent":
                latent.append((u, v))
    if not pairs and declared is None:
        raise GraphFormatError(f"{path}: no edges")
    raw_edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    ids = np.unique(raw_edges)
    if declared is not None:
        ids = np.union1d(ids, np.arange(declared))
    remap = {int(x): k for k, x in enumerate(ids)}
    edges = np.vectorize(remap.__getitem__, otypes=[np.int64])(raw_edges) if len(pairs) else raw_edges
    lat = None
    if latent:
        lat = np.sort(np.vectorize(remap.__getitem__, otypes=[np.int64])(np.array(latent)), axis=1)
    return Graph.from_edges(len(ids), edges, labels=ids.astype(np.int64), latent_edges=lat)


def write_edge_list(graph: Graph, path) -> None:
    """Write sorted ``u v`` pairs (u < v); latent edges carry a ``# latent`` marker."""
    latent = {tuple(e) for e in graph.latent_edges.tolist()}
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(f"# nodes: {graph.n}\n")
        for u, v in graph.edges().tolist():
            fh.write(f"{u} {v} # latent\n" if (u, v) in latent else f"{u} {v}\n")
    os.replace(tmp, path)


@dataclass(frozen=True)
class DegreeModel:
    """Truncated discrete power law P(k) = C / k**exponent on k = 1..kmax."""

    exponent: float
    kmax: int

    def __post_init__(self):
        if not self.exponent > 1:
            raise ValueError(f"power-law exponent must exceed 1, got {self.exponent}")
        if self.kmax < 1:
            raise ValueError("kmax must be >= 1")

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.kmax + 1)

    @property
    def normalization(self) -> float:
        return 1.0 / np.sum(self.support.astype(float) ** -self.exponent)

    def pmf(self) -> np.ndarray:
        return self.normalization * self.support.astype(float) ** -self.exponent

    def mean(self) -> float:
        return float(np.sum(self.support * self.pmf()))


def sample_degrees(model: DegreeModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. degrees from ``model``, nudging one so the sum is even."""
    deg = rng.choice(model.support, size=n, p=model.pmf())
    if deg.sum() % 2:
        i = rng.integers(n)
        deg[i] += 1 if deg[i] < model.kmax else -1
    return deg


def generate_power_law(n: int, exponent: float, rng_seed: int, rounds: int = 20) -> Graph:
    """Configuration-model graph with degrees drawn from ``C/k**exponent`` on 1..n-1.

    Stubs are paired at random; self-loops and repeated pairs are rejected and
    their stubs re-paired for up to ``rounds`` rounds, leftovers are dropped.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(rng_seed)
    deg = sample_degrees(DegreeModel(exponent, n - 1), n, rng)
    stubs = np.repeat(np.arange(n), deg)
    accepted: set[tuple[int, int]] = set()
    for _ in range(rounds):
        if len(stubs) < 2:
            break
        rng.shuffle(stubs)
        if len(stubs) % 2:
            stubs = stubs[:-1]
        pairs = np.sort(stubs.reshape(-1, 2), axis=1)
        leftover = []
        for u, v in pairs.tolist():
            if u == v or (u, v) in accepted:
                leftover.extend((u, v))
            else:
                accepted.add((u, v))
        stubs = np.array(leftover, dtype=np.int64)
        if not leftover:
            break
    edges = np.array(sorted(accepted), dtype=np.int64).reshape(-1, 2)
    return Graph.from_edges(n, edges)
