"""Discrete-step agent-based competition between two influences.

At every step one uninfected user with at least one influenced neighbour
(the riser) adopts an influence for good.  Before overload the choice is
proportional to power times exposure count; once a riser's exposure exceeds
the capacity the whole population is overloaded and, with probability
``1 - exp(-mu (t - t_c))``, risers fall back on a priority strategy.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .analytic import Trajectory
from .graph import Graph

log = logging.getLogger(__name__)

UNINFECTED, I1, I2 = 0, 1, 2
STRATEGIES = ("first", "latest", "most_similar", "highest_degree")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ArrivalDistribution:
    """Propagation-time law used by the first/latest strategies."""

    kind: str = "exponential"
    params: tuple = (1.0,)

    def __post_init__(self):
        need = {"exponential": 1, "uniform": 2, "lognormal": 2}
        if self.kind not in need:
            raise ConfigError(f"unknown arrival distribution {self.kind!r}")
        if len(self.params) != need[self.kind]:
            raise ConfigError(f"{self.kind} takes {need[self.kind]} parameter(s)")
        if self.kind == "exponential" and not self.params[0] > 0:
            raise ConfigError("exponential rate must be positive")
        if self.kind == "uniform" and not self.params[0] < self.params[1]:
            raise ConfigError("uniform needs lo < hi")
        if self.kind == "lognormal" and not self.params[1] > 0:
            raise ConfigError("lognormal sigma must be positive")

    @classmethod
    def parse(cls, text: str) -> "ArrivalDistribution":
        m = re.fullmatch(r"\s*(\w+)\s*\(([^)]*)\)\s*", text)
        if not m:
            raise ConfigError(f"cannot parse arrival distribution {text!r}")
        params = tuple(float(x) for x in m.group(2).split(",") if x.strip())
        return cls(m.group(1), params)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "exponential":
            return rng.exponential(1.0 / self.params[0], size)
        if self.kind == "uniform":
            return rng.uniform(self.params[0], self.params[1], size)
        return rng.lognormal(self.params[0], self.params[1], size)

    def __str__(self):
        return f"{self.kind}({','.join(repr(p) for p in self.params)})"


@dataclass(frozen=True)
class CompetitionConfig:
    a: float = 1.0
    b: float = 2.0
    capacity: float = math.inf        # delta_c
    mu: float = 10.0
    strategy: str = "first"
    arrival: ArrivalDistribution = field(default_factory=ArrivalDistribution)
    seeds: tuple = (16, 24)
    horizon: int | None = None        # None: run until nobody can arise
    rng_seed: int = 0
    r: float | None = None            # influence range, informational here

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigError("influence powers must be positive")
        if not self.capacity > 0:
            raise ConfigError("capacity must be positive")
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}")
        if len(self.seeds) != 2 or min(self.seeds) < 1:
            raise ConfigError("need at least one seed per influence")
        if self.horizon is not None and self.horizon < sum(self.seeds):
            raise ConfigError("horizon is shorter than the seeded population")

    @property
    def t0(self) -> int:
        return int(sum(self.seeds))


class SimState:
    """Labels, per-node exposure counts and the pool of possible risers."""

    def __init__(self, n: int):
        self.labels = np.zeros(n, dtype=np.int8)
        self.k1 = np.zeros(n, dtype=np.int64)
        self.k2 = np.zeros(n, dtype=np.int64)
        self.x1 = 0
        self.x2 = 0
        self.overloaded = False
        self.t_c: int | None = None
        self._pool: list[int] = []
        self._pos = np.full(n, -1, dtype=np.int64)

    @property
    def t(self) -> int:
        return self.x1 + self.x2

    @property
    def eligible(self) -> list[int]:
        return list(self._pool)

    def exposure(self, i: int) -> int:
        return int(self.k1[i] + self.k2[i])

    def _pool_add(self, i: int):
        self._pos[i] = len(self._pool)
        self._pool.append(i)

    def _pool_remove(self, i: int):
        k = self._pos[i]
        if k < 0:
            return
        last = self._pool.pop()
        if last != i:
            self._pool[k] = last
            self._pos[last] = k
        self._pos[i] = -1

    def infect(self, graph: Graph, i: int, label: int) -> None:
        if self.labels[i] != UNINFECTED:
            raise RuntimeError(f"node {i} already carries label {self.labels[i]}")
        self.labels[i] = label
        self._pool_remove(i)
        nb = graph.neighbors(i)
        if label == I1:
            self.x1 += 1
            self.k1[nb] += 1
        else:
            self.x2 += 1
            self.k2[nb] += 1
        fresh = nb[(self.k1[nb] + self.k2[nb] == 1) & (self.labels[nb] == UNINFECTED)]
        for j in fresh.tolist():
            self._pool_add(j)


def init_state(graph: Graph, config: CompetitionConfig, rng: np.random.Generator) -> SimState:
    """Seed both influences on distinct uniformly random users."""
    s1, s2 = config.seeds
    if s1 + s2 > graph.n:
        raise ConfigError(f"{s1 + s2} seeds do not fit in {graph.n} nodes")
    chosen = rng.choice(graph.n, size=s1 + s2, replace=False)
    state = SimState(graph.n)
    for k, node in enumerate(chosen.tolist()):
        state.infect(graph, node, I1 if k < s1 else I2)
    return state


def pick_riser(state: SimState, rng: np.random.Generator) -> int | None:
    """Uniform over uninfected users with an influenced neighbour; None when none is left."""
    if not state._pool:
        return None
    return state._pool[int(rng.integers(len(state._pool)))]


def adoption_prob_pre(k1: int, k2: int, a: float, b: float) -> float:
    return a * k1 / (a * k1 + b * k2)


def decide_pre_overload(riser: int, state: SimState, a: float, b: float,
                        rng: np.random.Generator) -> int:
    k1, k2 = int(state.k1[riser]), int(state.k2[riser])
    if k1 + k2 == 0:
        raise RuntimeError(f"node {riser} has no influenced neighbour")
    return I1 if rng.random() < adoption_prob_pre(k1, k2, a, b) else I2


def _argbest(values: np.ndarray, rng, largest: bool) -> int:
    best = values.max() if largest else values.min()
    ties = np.flatnonzero(values == best)
    return int(ties[0] if len(ties) == 1 else ties[rng.integers(len(ties))])


def strategy_first(neighbor_labels, arrival: ArrivalDistribution, rng) -> int:
    """Label of the influenced neighbour whose message arrives first."""
    lab = np.asarray(neighbor_labels)
    times = arrival.sample(rng, len(lab))
    return int(lab[np.argmin(times)])


def strategy_latest(neighbor_labels, arrival: ArrivalDistribution, rng) -> int:
    """Label of the influenced neighbour whose message arrives last."""
    lab = np.asarray(neighbor_labels)
    times = arrival.sample(rng, len(lab))
    return int(lab[np.argmax(times)])


def strategy_most_similar(riser: int, neighbor_ids, neighbor_labels, vectors, rng) -> int:
    """Label of the influenced neighbour nearest to the riser in latent space."""
    if vectors is None:
        raise ConfigError("most_similar strategy needs embeddings")
    ids = np.asarray(neighbor_ids)
    diff = vectors[ids] - vectors[riser]
    dist = np.einsum("ij,ij->i", diff, diff)
    return int(np.asarray(neighbor_labels)[_argbest(dist, rng, largest=False)])


def strategy_highest_degree(neighbor_ids, neighbor_labels, degrees, rng) -> int:
    """Label of the influenced neighbour with the largest degree."""
    deg = np.asarray(degrees)[np.asarray(neighbor_ids)]
    return int(np.asarray(neighbor_labels)[_argbest(deg, rng, largest=True)])


def apply_strategy(riser: int, state: SimState, graph: Graph, config: CompetitionConfig,
                   rng, vectors=None) -> int:
    nb = graph.neighbors(riser)
    lab = state.labels[nb]
    mask = lab != UNINFECTED
    ids, lab = nb[mask], lab[mask]
    if config.strategy == "first":
        return strategy_first(lab, config.arrival, rng)
    if config.strategy == "latest":
        return strategy_latest(lab, config.arrival, rng)
    if config.strategy == "most_similar":
        return strategy_most_similar(riser, ids, lab, vectors, rng)
    return strategy_highest_degree(ids, lab, graph.degrees, rng)


def decide_post_overload(riser: int, state: SimState, graph: Graph, config: CompetitionConfig,
                         rng, t: float | None = None, vectors=None) -> int:
    """Power-weighted choice with probability exp(-mu (t - t_c)), else the strategy."""
    if not state.overloaded:
        raise RuntimeError("decide_post_overload called before overload")
    t = state.t if t is None else t
    if rng.random() < math.exp(-config.mu * (t - state.t_c)):
        return decide_pre_overload(riser, state, config.a, config.b, rng)
    return apply_strategy(riser, state, graph, config, rng, vectors)


@dataclass
class SimResult:
    trajectory: Trajectory
    trigger_step: int | None
    predicted_onset: float | None
    exhausted: bool

    @property
    def final_share1(self) -> float:
        return float(self.trajectory.share1[-1])

    @property
    def final_share2(self) -> float:
        return float(self.trajectory.share2[-1])


def run(graph: Graph, config: CompetitionConfig, vectors=None, rng=None,
        predicted_onset: float | None = None) -> SimResult:
    """One competition from seeding to the horizon (or until nobody can arise)."""
    if config.strategy == "most_similar" and vectors is None:
        raise ConfigError("most_similar strategy needs embeddings")
    rng = np.random.default_rng(config.rng_seed) if rng is None else rng
    horizon = graph.n if config.horizon is None else min(config.horizon, graph.n)
    state = init_state(graph, config, rng)
    ts, x1s, x2s = [state.t], [state.x1], [state.x2]
    exhausted = False
    while state.t < horizon:
        riser = pick_riser(state, rng)
        if riser is None:
            exhausted = True
            break
        if not state.overloaded and state.exposure(riser) > config.capacity:
            state.overloaded = True
            state.t_c = state.t
            log.debug("overload triggered at t=%d (predicted %s)", state.t, predicted_onset)
        if state.overloaded:
            label = decide_post_overload(riser, state, graph, config, rng, vectors=vectors)
        else:
            label = decide_pre_overload(riser, state, config.a, config.b, rng)
        state.infect(graph, riser, label)
        ts.append(state.t)
        x1s.append(state.x1)
        x2s.append(state.x2)
    traj = Trajectory(np.array(ts, float), np.array(x1s, float), np.array(x2s, float))
    return SimResult(traj, state.t_c, predicted_onset, exhausted)
