"""
Priority strategies all reduce to follower counts
=================================================

First arrival, latest arrival, nearest neighbour and most popular neighbour:
with 3 neighbours on one side and 7 on the other each picks the first side
about 30% of the time, whatever the underlying distribution.
"""

import numpy as np

from influcomp.sim import (I1, I2, ArrivalDistribution, strategy_first, strategy_highest_degree,
                           strategy_latest, strategy_most_similar)

rng = np.random.default_rng(0)
labels = np.array([I1] * 3 + [I2] * 7)
ids = np.arange(1, 11)
trials = 20_000

for dist in ("exponential(1)", "uniform(0,1)", "lognormal(0,1)"):
    arr = ArrivalDistribution.parse(dist)
    f = np.mean([strategy_first(labels, arr, rng) == I1 for _ in range(trials)])
    l = np.mean([strategy_latest(labels, arr, rng) == I1 for _ in range(trials)])
    print(f"{dist:16s} first {f:.3f}  latest {l:.3f}")

sim = np.mean([strategy_most_similar(0, ids, labels, rng.normal(size=(11, 8)), rng) == I1
               for _ in range(trials)])
deg = np.mean([strategy_highest_degree(ids, labels, rng.poisson(5, size=11), rng) == I1
               for _ in range(trials)])
print(f"most similar {sim:.3f}  highest degree {deg:.3f}")
