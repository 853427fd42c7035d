"""Latent-space distance law, connect probability, overload onset, link recovery."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincinv, gammaln

from .embedding import EmbeddingSet, pairwise_sq_dists
from .graph import Graph


class ExpansionDomainError(ValueError):
    """The tail expansion is singular at x == a and useless close to it."""


def _check(sigma2, d=None):
    if not sigma2 > 0:
        raise ValueError(f"variance must be positive, got {sigma2}")
    if d is not None and d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")


@dataclass(frozen=True)
class DistanceLaw:
    """Gamma law of the squared distance between two N(u, sigma2 I) points in R^d."""

    d: int
    sigma2: float

    def __post_init__(self):
        _check(self.sigma2, self.d)

    @property
    def shape(self) -> float:
        return self.d / 2.0

    @property
    def rate(self) -> float:
        return 1.0 / (4.0 * self.sigma2)

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def pdf(self, z):
        return distance_pdf(z, self.d, self.sigma2)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return gammainc(self.shape, np.maximum(z, 0.0) * self.rate)


def distance_pdf(z, d: int, sigma2: float):
    _check(sigma2, d)
    z = np.asarray(z, dtype=float)
    alpha, beta = d / 2.0, 1.0 / (4.0 * sigma2)
    pos = z > 0
    zp = np.where(pos, z, 1.0)
    logf = alpha * np.log(beta) - gammaln(alpha) + (alpha - 1) * np.log(zp) - beta * zp
    out = np.where(pos, np.exp(logf), 0.0)
    if alpha == 1:
        out = np.where(z == 0, beta, out)
    elif alpha < 1:
        out = np.where(z == 0, np.inf, out)
    return out if out.ndim else float(out)


def connect_probability(r: float, sigma2: float, d: int) -> float:
    """P(L <= r): regularized lower incomplete gamma at r / (4 sigma2)."""
    _check(sigma2, d)
    if not r > 0:
        raise ValueError(f"distance threshold must be positive, got {r}")
    return float(gammainc(d / 2.0, r / (4.0 * sigma2)))


def range_for_probability(p: float, sigma2: float, d: int) -> float:
    """Threshold r at which :func:`connect_probability` equals ``p``."""
    _check(sigma2, d)
    if not 0 < p < 1:
        raise ValueError("target probability must lie in (0, 1)")
    return float(4.0 * sigma2 * gammaincinv(d / 2.0, p))


def connect_probability_approx(r: float, sigma2: float, d: int, with_error: bool = False):
    """Asymptotic tail expansion of the connect probability.

    With ``a = d/2 - 1`` and ``x = r/(4 sigma2)`` the upper tail is taken as
    ``exp(-x) x**(a+1) / (x-a) * (1 - a/(x-a)**2 + 2a/(x-a)**3)`` and the
    probability as ``1 - tail / Gamma(d/2)``.  Only a comparison routine:
    it diverges near ``x = a`` and is poor for ``x < a``.
    """
    _check(sigma2, d)
    a = d / 2.0 - 1.0
    x = r / (4.0 * sigma2)
    gap = x - a
    if abs(gap) <= 1.0:
        raise ExpansionDomainError(f"|x - a| = {abs(gap):.3g} <= 1 (x={x:.4g}, a={a:.4g})")
    series = 1.0 - a / gap**2 + 2.0 * a / gap**3
    # log-space keeps exp(-x) x**(a+1) finite for large x
    log_tail = -x + (a + 1.0) * np.log(x) - np.log(abs(gap)) - gammaln(a + 1.0)
    approx = float(1.0 - np.sign(gap) * series * np.exp(log_tail))
    if not with_error:
        return approx
    exact = connect_probability(r, sigma2, d)
    return approx, abs(approx - exact) / exact


def overload_time(capacity: float, p: float) -> float:
    """Predicted overload onset t_c = capacity / p (o(1) factor dropped)."""
    if not capacity > 0:
        raise ValueError("capacity must be positive")
    if not 0 < p <= 1:
        raise ValueError(f"connect probability must lie in (0, 1], got {p}")
    return capacity / p


def recover_links(graph: Graph, emb, r: float, block: int = 1024) -> Graph:
    """Union of observed edges with every pair whose squared distance is < r."""
    v = emb.vectors if isinstance(emb, EmbeddingSet) else np.asarray(emb, float)
    if len(v) != graph.n:
        raise ValueError(f"embedding has {len(v)} rows for {graph.n} nodes")
    found = []
    for start in range(0, graph.n, block):
        dist = pairwise_sq_dists(v[start:start + block], v)
        ii, jj = np.nonzero(dist < r)
        ii = ii + start
        keep = ii < jj
        found.append(np.column_stack([ii[keep], jj[keep]]))
    close = np.concatenate(found) if found else np.empty((0, 2), np.int64)
    observed = graph.edges()
    if len(close):
        key = close[:, 0] * graph.n + close[:, 1]
        okey = observed[:, 0] * graph.n + observed[:, 1]
        latent = close[~np.isin(key, okey)]
    else:
        latent = close
    merged = np.concatenate([observed, latent]) if len(latent) else observed
    return Graph.from_edges(graph.n, merged, labels=graph.labels, latent_edges=latent)
