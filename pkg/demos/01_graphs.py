"""
Social graphs and their degree law
==================================

Generate a configuration-model graph with power-law degrees, check the
exponent, and push it through the edge-list format.
"""

import os
import tempfile

import numpy as np
from scipy.optimize import minimize_scalar

from influcomp.graph import DegreeModel, generate_power_law, load_edge_list, write_edge_list

# A 2000-user graph with P(k) proportional to k**-2.5 on 1..n-1.
g = generate_power_law(2000, 2.5, rng_seed=7)
print(g, "max degree", g.degrees.max(), "isolated", int(np.sum(g.degrees == 0)))

# Maximum-likelihood exponent of the realised degrees.
k = g.degrees[g.degrees > 0].astype(float)
support = np.arange(1, g.n, dtype=float)
fit = minimize_scalar(lambda lam: lam * np.log(k).sum() + len(k) * np.log(np.sum(support**-lam)),
                      bounds=(1.01, 6), method="bounded").x
print(f"fitted exponent {fit:.3f}")

# Heavier tails lose more stubs to loop/duplicate rejection.
for lam in (1.5, 2.0, 2.5, 3.0):
    model = DegreeModel(lam, 999)
    real = generate_power_law(1000, lam, 7).degrees.mean()
    print(f"lambda={lam}: model mean {model.mean():6.2f}, realised mean {real:6.2f}")

# Round trip through the text format (sorted u<v pairs, '# nodes:' header).
with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "g.txt")
    write_edge_list(g, path)
    print("round trip equal:", load_edge_list(path) == g)
