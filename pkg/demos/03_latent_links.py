"""
Distance law, connect probability and latent links
==================================================

Squared distances between Gaussian users follow a Gamma law; its CDF is the
probability that two users fall within influence range r.
"""

import numpy as np
from scipy import stats

from influcomp.embedding import EmbeddingSet
from influcomp.graph import Graph
from influcomp.latent import (DistanceLaw, ExpansionDomainError, connect_probability,
                              connect_probability_approx, overload_time, range_for_probability,
                              recover_links)

rng = np.random.default_rng(1)
for d, s2 in ((2, 0.25), (8, 0.1), (128, 0.0147)):
    x, y = rng.normal(0, np.sqrt(s2), size=(2, 50_000, d))
    z = ((x - y) ** 2).sum(1)
    p = stats.kstest(z, DistanceLaw(d, s2).cdf).pvalue
    print(f"d={d:3d} sigma2={s2}: sample mean {z.mean():.4f} vs {DistanceLaw(d, s2).mean:.4f}, KS p={p:.3f}")

# Dataset-scale reference point: r=4, sigma2=0.0147, d=128.
p_ref = connect_probability(4.0, 0.0147, 128)
print(f"p(4, 0.0147) in d=128 = {p_ref:.6f}; capacity 30 -> onset step {overload_time(30, p_ref):.1f}")

# The asymptotic tail expansion is only a comparison: good far out, useless near x = d/2 - 1.
for x in (5.0, 10.0, 50.0, 2.5):
    r = 4 * 0.1 * x
    try:
        approx, rel = connect_probability_approx(r, 0.1, 4, with_error=True)
        print(f"d=4 x={x:5.1f}: expansion {approx:.8f}, relative error {rel:.2e}")
    except ExpansionDomainError as err:
        print(f"d=4 x={x:5.1f}: {err}")

# Recovering links: every pair closer than r joins the observed edges.
v = rng.normal(0, 0.3, size=(300, 8))
g = Graph.from_edges(300, rng.integers(0, 300, size=(400, 2)))
for target in (0.01, 0.1, 0.5):
    r = range_for_probability(target, 0.09, 8)
    rec = recover_links(g, EmbeddingSet(v), r)
    density = rec.edge_count / (300 * 299 / 2)
    print(f"target p={target}: r={r:.3f}, {len(rec.latent_edges)} latent links, pair density {density:.3f}")
