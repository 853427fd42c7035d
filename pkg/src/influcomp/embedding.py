"""Latent-space coordinates for users.

Biased second-order random walks feed a window co-occurrence count matrix;
embeddings maximise the full-softmax log-likelihood of those co-occurrences
under a squared-Euclidean similarity, then an isotropic Gaussian is fitted.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .graph import Graph

log = logging.getLogger(__name__)


class EmbeddingError(RuntimeError):
    pass


@dataclass(frozen=True)
class WalkParams:
    return_bias: float = 1.0   # p
    inout_bias: float = 1.0    # q
    walk_length: int = 80
    walks_per_node: int = 10
    window: int = 10

    def __post_init__(self):
        if self.return_bias <= 0 or self.inout_bias <= 0:
            raise ValueError("walk biases p and q must be positive")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if not 1 <= self.window < self.walk_length:
            raise ValueError("window must satisfy 1 <= window < walk_length")


def transition_weights(graph: Graph, prev: int, cur: int, p: float, q: float):
    """Candidates and normalised probabilities for the step after ``prev -> cur``."""
    cand = graph.neighbors(cur)
    prev_nb = graph.neighbors(prev)
    w = np.where(np.isin(cand, prev_nb), 1.0, 1.0 / q)
    w[cand == prev] = 1.0 / p
    return cand, w / w.sum()


def _walk(start, length, adj, adj_sets, inv_p, inv_q, wmax, rnd):
    walk = [start]
    nb = adj[start]
    if not nb:
        return walk
    walk.append(nb[int(rnd.random() * len(nb))])
    while len(walk) < length:
        prev, cur = walk[-2], walk[-1]
        nb = adj[cur]
        prev_set = adj_sets[prev]
        # rejection sampling against the largest of the three weights
        while True:
            x = nb[int(rnd.random() * len(nb))]
            if x == prev:
                w = inv_p
            elif x in prev_set:
                w = 1.0
            else:
                w = inv_q
            if rnd.random() * wmax < w:
                break
        walk.append(x)
    return walk


def sample_walks(graph: Graph, params: WalkParams, rng_seed: int) -> list[np.ndarray]:
    """``walks_per_node`` walks from every node, each with its own RNG stream.

    Isolated nodes yield singleton walks.
    """
    if graph.n == 0:
        raise ValueError("graph is empty")
    adj = [graph.neighbors(i).tolist() for i in range(graph.n)]
    adj_sets = [set(a) for a in adj]
    inv_p, inv_q = 1.0 / params.return_bias, 1.0 / params.inout_bias
    wmax = max(inv_p, 1.0, inv_q)
    streams = np.random.SeedSequence(rng_seed).spawn(graph.n)
    walks = []
    for start in range(graph.n):
        rnd = random.Random(int(streams[start].generate_state(1, np.uint64)[0]))
        for _ in range(params.walks_per_node):
            walks.append(np.array(_walk(start, params.walk_length, adj, adj_sets,
                                        inv_p, inv_q, wmax, rnd), dtype=np.int64))
    return walks


@dataclass(frozen=True)
class NeighborhoodSet:
    """Multisets N_S(i) stored as a sparse count matrix ``counts[i, j]``."""

    counts: sparse.csr_matrix

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def sizes(self) -> np.ndarray:
        return np.asarray(self.counts.sum(axis=1)).ravel()

    def of(self, i: int) -> list[int]:
        row = self.counts.getrow(i)
        return sorted(np.repeat(row.indices, row.data.astype(int)).tolist())


def build_neighborhoods(walks, window: int, n: int | None = None) -> NeighborhoodSet:
    """Co-occurrence within ``window`` positions, both directions, self excluded."""
    if len(walks) == 0:
        raise ValueError("no walks")
    if n is None:
        n = int(max(int(np.max(w)) for w in walks)) + 1
    rows, cols = [], []
    for w in walks:
        w = np.asarray(w)
        for off in range(1, min(window, len(w) - 1) + 1):
            a, b = w[:-off], w[off:]
            keep = a != b
            rows += [a[keep], b[keep]]
            cols += [b[keep], a[keep]]
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.empty(0, dtype=np.int64)
    m = sparse.coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    return NeighborhoodSet(m)


@dataclass
class EmbeddingSet:
    vectors: np.ndarray
    objective_history: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


def pairwise_sq_dists(x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    y = x if y is None else y
    d = (x * x).sum(1)[:, None] + (y * y).sum(1)[None, :] - 2.0 * x @ y.T
    np.maximum(d, 0.0, out=d)
    return d


def _as_vectors(embeddings) -> np.ndarray:
    return embeddings.vectors if isinstance(embeddings, EmbeddingSet) else np.asarray(embeddings, float)


def _value_and_gradient(v: np.ndarray, nbhd: NeighborhoodSet, rows=None, need_grad=True):
    rows = np.arange(len(v)) if rows is None else np.asarray(rows)
    counts = nbhd.counts[rows].tocoo()
    dist = pairwise_sq_dists(v[rows], v)
    sizes = np.bincount(counts.row, weights=counts.data, minlength=len(rows))
    lse = logsumexp(-dist, axis=1)
    value = -(float(counts.data @ dist[counts.row, counts.col]) + float(sizes @ lse))
    if not need_grad:
        return value, None
    # g = dO/dl_ij over the selected rows
    g = np.exp(-dist - lse[:, None])
    g *= sizes[:, None]
    g[counts.row, counts.col] -= counts.data
    grad = np.zeros_like(v)
    # l_ij = |v_i - v_j|^2 sends 2 g_ij (v_i - v_j) to v_i and its negative to v_j
    grad[rows] += 2.0 * (g.sum(1)[:, None] * v[rows] - g @ v)
    grad += 2.0 * (g.sum(0)[:, None] * v - g.T @ v[rows])
    return value, grad


def objective(embeddings, nbhd: NeighborhoodSet, rows=None) -> float:
    """Full-softmax co-occurrence log-likelihood (optionally over a subset of rows)."""
    return _value_and_gradient(_as_vectors(embeddings), nbhd, rows, need_grad=False)[0]


def objective_gradient(embeddings, nbhd: NeighborhoodSet, rows=None) -> np.ndarray:
    """Gradient of :func:`objective` with respect to every embedding vector."""
    return _value_and_gradient(_as_vectors(embeddings), nbhd, rows)[1]


def optimize(graph: Graph, params: WalkParams, d: int = 8, epochs: int = 100,
             learning_rate: float = 30.0, rng_seed: int = 0,
             batch_size: int | None = None, nbhd: NeighborhoodSet | None = None) -> EmbeddingSet:
    """Gradient ascent on the co-occurrence objective.

    ``batch_size=None`` is full-batch ascent with step halving whenever a step
    would lower the objective, so the recorded history is non-decreasing.
    Otherwise each epoch sweeps shuffled mini-batches of source nodes at a
    fixed rate.  Steps use the gradient divided by the total co-occurrence
    count, so ``learning_rate`` is per pair.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    rng = np.random.default_rng(rng_seed)
    if nbhd is None:
        walks = sample_walks(graph, params, int(rng.integers(2**63)))
        nbhd = build_neighborhoods(walks, params.window, graph.n)
    total = max(float(nbhd.sizes.sum()), 1.0)
    v = rng.uniform(-0.5 / d, 0.5 / d, size=(graph.n, d))
    value = objective(v, nbhd)
    history = [value]
    step = learning_rate
    for epoch in range(1, epochs + 1):
        if batch_size is None:
            value, grad = _value_and_gradient(v, nbhd)
            grad /= total
            for _ in range(40):
                trial = v + step * grad
                new = objective(trial, nbhd)
                if np.isfinite(new) and new >= value:
                    break
                step *= 0.5
            else:
                log.debug("no ascent step found at epoch %d; stopping", epoch)
                break
            v, value = trial, new
            step = min(step * 1.25, learning_rate)
        else:
            order = rng.permutation(graph.n)
            for start in range(0, graph.n, batch_size):
                rows = order[start:start + batch_size]
                v = v + step * objective_gradient(v, nbhd, rows) / total
            value = objective(v, nbhd)
        if not np.isfinite(value) or not np.all(np.isfinite(v)):
            raise EmbeddingError(f"objective diverged at epoch {epoch}")
        history.append(value)
    log.debug("embedding objective %.6g -> %.6g", history[0], history[-1])
    return EmbeddingSet(v, history)


@dataclass(frozen=True)
class LatentModel:
    mean: np.ndarray
    variance: float

    @property
    def d(self) -> int:
        return len(self.mean)


def fit_gaussian(embeddings) -> LatentModel:
    """Maximum-likelihood isotropic Gaussian N(u, s2 I) for the embedding cloud."""
    v = _as_vectors(embeddings)
    n, d = v.shape
    if n < 2:
        raise ValueError("need at least two embedded nodes")
    u = v.mean(axis=0)
    s2 = float(((v - u) ** 2).sum() / (n * d))
    if not s2 > 0:
        raise ValueError("degenerate embedding: zero variance")
    return LatentModel(u, s2)


def save_embeddings(emb, path) -> None:
    v = _as_vectors(emb)
    with open(path, "w") as fh:
        fh.write(f"{v.shape[0]} {v.shape[1]}\n")
        for i, row in enumerate(v):
            fh.write(f"{i} " + " ".join(repr(float(x)) for x in row) + "\n")


def load_embeddings(path) -> EmbeddingSet:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be 'n d'")
        n, d = int(header[0]), int(header[1])
        v = np.full((n, d), np.nan)
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != d + 1:
                raise ValueError(f"{path}:{lineno}: expected {d + 1} fields")
            v[int(parts[0])] = [float(x) for x in parts[1:]]
    if np.isnan(v).any():
        raise ValueError(f"{path}: missing node rows")
    return EmbeddingSet(v)
