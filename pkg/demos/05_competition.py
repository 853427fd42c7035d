"""
Agent-based competition versus the mean field
=============================================

Run the discrete simulator on a recovered graph and compare the mean share
of the weaker influence with the analytic curve.
"""

import numpy as np

from influcomp.analytic import InitialState, full_trajectory
from influcomp.embedding import WalkParams, fit_gaussian, optimize
from influcomp.graph import generate_power_law
from influcomp.harness import compare, monte_carlo
from influcomp.latent import connect_probability, overload_time, range_for_probability, recover_links
from influcomp.sim import CompetitionConfig

g = generate_power_law(1000, 2.5, rng_seed=7)
emb = optimize(g, WalkParams(walk_length=20, walks_per_node=4, window=5), d=8, epochs=40)
s2 = fit_gaussian(emb).variance
r = range_for_probability(0.95, s2, 8)
p = connect_probability(r, s2, 8)
rec = recover_links(g, emb, r)
print(f"recovered {rec.edge_count} edges ({len(rec.latent_edges)} latent), p={p:.3f}")

for name, seeds in (("S1", (16, 24)), ("S2", (24, 16)), ("S3", (32, 8))):
    for capacity in (float(g.n), 30.0):
        cfg = CompetitionConfig(a=1, b=2, capacity=capacity, mu=10, seeds=seeds)
        t_c = overload_time(capacity, p)
        mc = monte_carlo(rec, cfg, 40, master_seed=1, vectors=emb.vectors, predicted_onset=t_c)
        ana = full_trajectory(1, 2, InitialState.from_counts(*seeds), mc.t, mu=10,
                              t_c=t_c if capacity < g.n else None)
        rep = compare(mc, ana)
        print(f"{name} capacity {capacity:6.0f}: final I1 {mc.mean_share1[-1]:.3f} "
              f"+/- {mc.ci_half_width[-1]:.3f}, analytic {ana.share1[-1]:.3f}, MAE {rep.mae:.4f}")
