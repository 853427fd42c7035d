"""
When does overload start?
=========================

The predicted onset is capacity / p.  The simulator switches regime at the
first riser whose exposure exceeds the capacity; with heterogeneous degrees
that happens a little early, and the gap closes as the recovered graph gets
denser (p -> 1).
"""

import numpy as np

from influcomp.embedding import WalkParams, fit_gaussian, optimize
from influcomp.graph import generate_power_law
from influcomp.harness import monte_carlo
from influcomp.latent import connect_probability, overload_time, range_for_probability, recover_links
from influcomp.sim import CompetitionConfig

n = 1000
g = generate_power_law(n, 2.5, rng_seed=7)
emb = optimize(g, WalkParams(walk_length=20, walks_per_node=4, window=5), d=8, epochs=40)
s2 = fit_gaussian(emb).variance

for target in (0.5, 0.8, 0.9, 0.95, 0.98):
    r = range_for_probability(target, s2, 8)
    p = connect_probability(r, s2, 8)
    rec = recover_links(g, emb, r)
    capacity = p * n / 4
    predicted = overload_time(capacity, p)
    mc = monte_carlo(rec, CompetitionConfig(capacity=capacity, seeds=(16, 24)), 20, master_seed=0)
    observed = np.mean(mc.trigger_steps)
    density = rec.edge_count / (n * (n - 1) / 2)
    print(f"p={p:.2f} (pair density {density:.3f}): onset {observed:6.1f} vs predicted "
          f"{predicted:6.1f}, ratio {observed / predicted:.3f}")
