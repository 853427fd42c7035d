"""Acceptance run on the desk-scale vehicle.

Synthetic power-law graph (n=2000, exponent 2.5, seed 7), 8-dimensional
embedding, links recovered at the influence range whose connect probability
is 0.95, R=100 replications.  Each test records one PASS/FAIL line that is
echoed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest
from scipy import sparse, stats

from influcomp.analytic import (InitialState, corollary_closed_form, default_grid,
                                full_trajectory, integrate_ode, post_overload, pre_overload,
                                theorem4_check)
from influcomp.embedding import (NeighborhoodSet, WalkParams, fit_gaussian, objective,
                                 objective_gradient, optimize)
from influcomp.graph import generate_power_law
from influcomp.harness import compare, equivalent_capacity, monte_carlo
from influcomp.latent import (DistanceLaw, connect_probability, overload_time,
                              range_for_probability, recover_links)
from influcomp.sim import (I1, ArrivalDistribution, CompetitionConfig, strategy_first,
                           strategy_highest_degree, strategy_latest, strategy_most_similar)

N = 2000
R = 100
CONNECT_TARGET = 0.95


class Vehicle:
    def __init__(self):
        start = time.perf_counter()
        self.graph = generate_power_law(N, 2.5, 7)
        params = WalkParams(walk_length=20, walks_per_node=4, window=5)
        self.emb = optimize(self.graph, params, d=8, epochs=50, learning_rate=30.0, rng_seed=0)
        self.sigma2 = fit_gaussian(self.emb).variance
        self.r = range_for_probability(CONNECT_TARGET, self.sigma2, 8)
        self.p = connect_probability(self.r, self.sigma2, 8)
        self.recovered = recover_links(self.graph, self.emb, self.r)
        self.build_seconds = time.perf_counter() - start
        self._cache = {}

    def mc(self, seeds, capacity, a=1.0, b=2.0, reps=R, master_seed=2024, strategy="first"):
        key = (seeds, capacity, a, b, reps, master_seed, strategy)
        if key not in self._cache:
            cfg = CompetitionConfig(a=a, b=b, capacity=capacity, seeds=seeds, strategy=strategy)
            predicted = overload_time(capacity, self.p)
            start = time.perf_counter()
            res = monte_carlo(self.recovered, cfg, reps, master_seed,
                              vectors=self.emb.vectors, predicted_onset=predicted)
            self._cache[key] = (res, time.perf_counter() - start)
        return self._cache[key]


@pytest.fixture(scope="module")
def vehicle():
    return Vehicle()


def test_criterion_01_winner_takes_all(vehicle, report):
    mc, secs = vehicle.mc((24, 16), float(N))
    share2 = 1 - mc.mean_share1[-1]
    runtime = vehicle.build_seconds + secs
    ok = share2 > 0.95 and runtime < 120
    report(1, ok, f"mean final I2 share {share2:.4f} (need > 0.95), runtime {runtime:.1f}s (< 120s)")
    assert ok


def test_criterion_02_equal_power_preserves_split(vehicle, report):
    mc, _ = vehicle.mc((16, 24), float(N), a=1.0, b=1.0)
    share1 = mc.mean_share1[-1]
    ok = abs(share1 - 0.40) <= 0.05
    report(2, ok, f"final I1 share {share1:.4f} (need 0.40 +/- 0.05)")
    assert ok


def test_criterion_03_pre_overload_agreement(vehicle, report):
    worst = 0.0
    for seeds in ((16, 24), (24, 16), (32, 8)):
        mc, _ = vehicle.mc(seeds, float(N))
        ana = pre_overload(1, 2, InitialState.from_counts(*seeds), mc.t)
        worst = max(worst, compare(mc, ana).mae)
    ok = worst <= 0.05
    report(3, ok, f"max I1-share MAE over S1/S2/S3 {worst:.4f} (need <= 0.05)")
    assert ok


def test_criterion_04_overload_time(vehicle, report):
    capacity = vehicle.p * N / 4
    predicted = overload_time(capacity, vehicle.p)
    mc, _ = vehicle.mc((16, 24), capacity, reps=50)
    steps = [s for s in mc.trigger_steps if s is not None]
    observed = float(np.mean(steps))
    ratio = observed / predicted
    ok = len(steps) == 50 and abs(ratio - 1) <= 0.10
    report(4, ok, f"mean trigger step {observed:.1f} vs predicted {predicted:.1f} "
                  f"(ratio {ratio:.3f}, need within 10%; p={vehicle.p:.3f})")
    assert ok


def test_criterion_05_stabilization(vehicle, report):
    mc, _ = vehicle.mc((16, 24), 30.0)
    mu = 10.0
    start = max(mc.trigger_steps) + max(1.0, 1.0 / mu)
    tail = mc.mean_share1[mc.t >= start]
    drift = float(tail.max() - tail.min())
    ok = drift < 0.03
    report(5, ok, f"I1 share drift after trigger + window {drift:.4f} (need < 0.03)")
    assert ok


def test_criterion_06_overload_favors_weaker(vehicle, report):
    over, _ = vehicle.mc((16, 24), 30.0)
    plain, _ = vehicle.mc((16, 24), float(N))
    margin = over.mean_share1[-1] - plain.mean_share1[-1]
    check = theorem4_check(1, 2, 10, InitialState(40, 16, 24), default_grid(40, 4000, 400))
    check_swapped = theorem4_check(2, 1, 10, InitialState(40, 24, 16), default_grid(40, 4000, 400))
    violations = check.violations + check_swapped.violations
    ok = margin >= 0.05 and violations == 0
    report(6, ok, f"I1 share {over.mean_share1[-1]:.4f} (cap 30) vs {plain.mean_share1[-1]:.4f} "
                  f"(cap n), margin {margin:.4f} (need >= 0.05); ordering violations {violations}")
    assert ok


def test_criterion_07_weaker_can_win(vehicle, report):
    low, _ = vehicle.mc((32, 8), 30.0)
    cap_high = equivalent_capacity(500.0, vehicle.p)
    high, _ = vehicle.mc((32, 8), cap_high)
    s_low, s_high = low.mean_share1[-1], high.mean_share1[-1]
    ok = s_low > 0.5 and s_high < 0.5
    report(7, ok, f"I1 share {s_low:.4f} at cap 30 (need > 0.5), {s_high:.4f} at cap "
                  f"{cap_high:.1f} = 500 rescaled (need < 0.5)")
    assert ok


def _strategy_trials(kind, dist, trials, rng):
    lab = np.array([I1] * 3 + [2] * 7)
    ids = np.arange(1, 11)
    hits = 0
    if kind in ("first", "latest"):
        fn = strategy_first if kind == "first" else strategy_latest
        arrival = ArrivalDistribution.parse(dist)
        for _ in range(trials):
            hits += fn(lab, arrival, rng) == I1
    elif kind == "most_similar":
        for _ in range(trials):
            if dist == "gaussian8":
                v = rng.normal(size=(11, 8))
            elif dist == "gaussian2":
                v = rng.normal(scale=[1.0, 5.0], size=(11, 2))
            else:
                v = rng.uniform(size=(11, 3))
            hits += strategy_most_similar(0, ids, lab, v, rng) == I1
    else:
        for _ in range(trials):
            if dist == "power_law":
                deg = np.floor(rng.pareto(1.5, size=11)) + 1
            elif dist == "poisson":
                deg = rng.poisson(5, size=11)
            else:
                deg = rng.integers(1, 101, size=11)
            hits += strategy_highest_degree(ids, lab, deg, rng) == I1
    return hits / trials


def test_criterion_08_strategy_equivalence(report):
    cases = {"first": ["exponential(1)", "uniform(0,1)", "lognormal(0,1)"],
             "latest": ["exponential(1)", "uniform(0,1)", "lognormal(0,1)"],
             "most_similar": ["gaussian8", "gaussian2", "uniform3"],
             "highest_degree": ["power_law", "poisson", "uniform_int"]}
    rng = np.random.default_rng(8)
    freqs = {(k, d): _strategy_trials(k, d, 100_000, rng) for k, ds in cases.items() for d in ds}
    worst = max(freqs.items(), key=lambda kv: abs(kv[1] - 0.3))
    ok = all(abs(f - 0.3) <= 0.02 for f in freqs.values())
    report(8, ok, f"12 strategy/distribution cases, worst {worst[0][0]}/{worst[0][1]} "
                  f"= {worst[1]:.4f} (need 0.30 +/- 0.02)")
    assert ok


def test_criterion_09_distance_law(report):
    rng = np.random.default_rng(9)
    pvals = {}
    for d, sigma2 in ((2, 0.25), (8, 0.1), (128, 0.0147)):
        u = rng.normal(size=d)
        x = rng.normal(u, math.sqrt(sigma2), size=(100_000, d))
        y = rng.normal(u, math.sqrt(sigma2), size=(100_000, d))
        z = ((x - y) ** 2).sum(1)
        pvals[(d, sigma2)] = stats.kstest(z, DistanceLaw(d, sigma2).cdf).pvalue
    ok = all(p > 0.01 for p in pvals.values())
    detail = ", ".join(f"d={d}: p={p:.3f}" for (d, _), p in pvals.items())
    report(9, ok, f"KS p-values {detail} (need > 0.01)")
    assert ok


def test_criterion_10_gradient(report):
    rng = np.random.default_rng(10)
    worst = 0.0
    h = 1e-5
    for _ in range(20):
        m = rng.integers(0, 4, size=(5, 5)).astype(float)
        np.fill_diagonal(m, 0)
        nb = NeighborhoodSet(sparse.csr_matrix(m))
        v = rng.normal(scale=0.7, size=(5, 3))
        g = objective_gradient(v, nb)
        fd = np.zeros_like(v)
        for idx in np.ndindex(v.shape):
            up, dn = v.copy(), v.copy()
            up[idx] += h
            dn[idx] -= h
            fd[idx] = (objective(up, nb) - objective(dn, nb)) / (2 * h)
        worst = max(worst, np.max(np.abs(g - fd)) / np.max(np.abs(fd)))
    ok = worst < 1e-4
    report(10, ok, f"max relative gradient error {worst:.2e} (need < 1e-4)")
    assert ok


def test_criterion_11_solver_cross_check(report):
    gaps = []
    for a, b in ((1, 2), (2, 1), (1, 1)):
        for init in (InitialState(40, 16, 24), InitialState(40, 32, 8)):
            t = default_grid(40, 4e5, 200)
            x1, x2 = corollary_closed_form(a / b, init, t)
            traj = pre_overload(a, b, init, t)
            gaps.append(max(np.max(np.abs(x1 - traj.x1) / t), np.max(np.abs(x2 - traj.x2) / t)))
    closed_gap = max(gaps)
    init = InitialState(40, 16, 24)
    t_out = np.linspace(40, 400, 73)
    ode_gaps = {}
    ode = integrate_ode(1, 2, init, 400, step=1e-3, t_out=t_out)
    imp = pre_overload(1, 2, init, t_out)
    ode_gaps["pre"] = np.max(np.abs(ode.x1 - imp.x1) / imp.x1)
    for mu in (10.0, 0.05):
        ode = integrate_ode(1, 2, init, 400, step=1e-3, mu=mu, t_out=t_out)
        imp = post_overload(1, 2, mu, init, t_out)
        ode_gaps[f"post mu={mu:g}"] = max(np.max(np.abs(ode.x1 - imp.x1) / imp.x1),
                                          np.max(np.abs(ode.x2 - imp.x2) / imp.x2))
    # overload starting mid-run, anchored at the mean-field state
    ode = integrate_ode(1, 2, init, 400, step=1e-3, mu=0.05, t_c=100, t_out=t_out)
    imp = full_trajectory(1, 2, init, t_out, mu=0.05, t_c=100)
    ode_gaps["anchored"] = np.max(np.abs(ode.x1 - imp.x1) / imp.x1)
    ok = closed_gap < 1e-8 and max(ode_gaps.values()) < 1e-4
    detail = ", ".join(f"{k} {v:.1e}" for k, v in ode_gaps.items())
    report(11, ok, f"closed form vs root finder {closed_gap:.1e} (need < 1e-8); ODE vs implicit "
                   f"{detail} (need < 1e-4)")
    assert ok
