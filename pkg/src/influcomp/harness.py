"""Experiment orchestration: replication, analytic comparison, reports."""

from __future__ import annotations

import logging
import math
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .analytic import InitialState, Trajectory, read_trajectory_csv, write_trajectory_csv
from .embedding import (EmbeddingSet, WalkParams, fit_gaussian, load_embeddings, optimize,
                        save_embeddings)
from .graph import Graph, generate_power_law, load_edge_list, write_edge_list
from .latent import connect_probability, overload_time, range_for_probability, recover_links
from .sim import ArrivalDistribution, CompetitionConfig, SimResult, run

log = logging.getLogger(__name__)

# Translates a dataset-scale capacity into an onset step, using the
# reference latent model (d=128, sigma2=0.0147) at influence range r=4.
REFERENCE_LATENT = {"r": 4.0, "sigma2": 0.0147, "d": 128}


class StageError(RuntimeError):
    def __init__(self, stage: str, err: Exception):
        super().__init__(f"[{stage}] {err}")
        self.stage = stage


def equivalent_capacity(capacity: float, p: float, reference=REFERENCE_LATENT) -> float:
    """Capacity giving the same onset step ``capacity / p_ref`` on a graph with connect prob ``p``."""
    p_ref = connect_probability(reference["r"], reference["sigma2"], reference["d"])
    return capacity * p / p_ref


# ---------------------------------------------------------------- replication

_WORKER = {}


def _init_worker(graph, vectors):
    _WORKER["graph"] = graph
    _WORKER["vectors"] = vectors


def _one_run(args):
    idx, config, seed_seq, predicted = args
    rng = np.random.default_rng(seed_seq)
    res = run(_WORKER["graph"], config, _WORKER["vectors"], rng=rng, predicted_onset=predicted)
    return idx, res


@dataclass
class MonteCarloResult:
    t: np.ndarray
    share1: np.ndarray              # (R, T) per-run I1 share aligned on t
    runs: list = field(repr=False)

    @property
    def replications(self) -> int:
        return self.share1.shape[0]

    @property
    def mean_share1(self) -> np.ndarray:
        return self.share1.mean(axis=0)

    @property
    def ci_half_width(self) -> np.ndarray:
        """95% normal-approximation half-width; exactly 0 for a single run."""
        if self.replications < 2:
            return np.zeros_like(self.t)
        return 1.96 * self.share1.std(axis=0, ddof=1) / math.sqrt(self.replications)

    @property
    def trigger_steps(self) -> list:
        return [r.trigger_step for r in self.runs]

    def mean_trajectory(self) -> Trajectory:
        s = self.mean_share1
        return Trajectory(self.t.copy(), s * self.t, (1 - s) * self.t)


def align_runs(results: list[SimResult], horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Shares on the common step clock t0..horizon; exhausted runs hold their last share."""
    t0 = int(results[0].trajectory.t[0])
    end = max(int(r.trajectory.t[-1]) for r in results)
    end = min(end, horizon) if horizon else end
    t = np.arange(t0, end + 1, dtype=float)
    out = np.empty((len(results), len(t)))
    for k, r in enumerate(results):
        s = r.trajectory.share1
        m = min(len(s), len(t))
        out[k, :m] = s[:m]
        out[k, m:] = s[m - 1]
    return t, out


def monte_carlo(graph: Graph, config: CompetitionConfig, replications: int, master_seed: int,
                vectors=None, predicted_onset=None, workers: int = 1) -> MonteCarloResult:
    """Independent runs with per-run streams spawned from ``master_seed``."""
    if replications < 1:
        raise ValueError("need at least one replication")
    streams = np.random.SeedSequence(master_seed).spawn(replications)
    tasks = [(k, config, streams[k], predicted_onset) for k in range(replications)]
    if workers > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker,
                                 initargs=(graph, vectors)) as pool:
            done = list(pool.map(_one_run, tasks, chunksize=max(1, replications // (4 * workers))))
    else:
        _init_worker(graph, vectors)
        done = [_one_run(task) for task in tasks]
    done.sort(key=lambda x: x[0])
    results = [r for _, r in done]
    horizon = graph.n if config.horizon is None else config.horizon
    t, shares = align_runs(results, horizon)
    return MonteCarloResult(t, shares, results)


# ---------------------------------------------------------------- comparison

@dataclass
class ComparisonReport:
    t: np.ndarray
    empirical_share1: np.ndarray
    ci_half_width: np.ndarray
    analytic_share1: np.ndarray
    mae: float
    branch_mae: dict
    predicted_onset: float | None = None
    observed_onset: float | None = None


def compare(empirical, analytic_traj: Trajectory, ci_half_width=None, onset: float | None = None,
            mu: float | None = None, predicted_onset: float | None = None,
            observed_onset: float | None = None) -> ComparisonReport:
    """Mean absolute I1-share error over the overlapping time range.

    ``empirical`` is a :class:`MonteCarloResult` or a :class:`Trajectory`.
    With ``onset`` and ``mu`` the error is also broken down into before
    onset, the transition window ``[onset, onset + max(1, 1/mu))`` and after.
    """
    if isinstance(empirical, MonteCarloResult):
        t_emp, s_emp = empirical.t, empirical.mean_share1
        ci = empirical.ci_half_width if ci_half_width is None else ci_half_width
    else:
        t_emp, s_emp = np.asarray(empirical.t, float), np.asarray(empirical.share1, float)
        ci = np.zeros_like(t_emp) if ci_half_width is None else np.asarray(ci_half_width)
    lo = max(t_emp[0], analytic_traj.t[0])
    hi = min(t_emp[-1], analytic_traj.t[-1])
    keep = (t_emp >= lo) & (t_emp <= hi)
    if hi < lo or not keep.any():
        raise ValueError("empirical and analytic time ranges do not overlap")
    t = t_emp[keep]
    emp = s_emp[keep]
    ana = np.interp(t, analytic_traj.t, analytic_traj.share1)
    err = np.abs(emp - ana)
    branches = {}
    if onset is not None:
        width = max(1.0, 1.0 / mu) if mu else 1.0
        masks = {"pre": t < onset,
                 "transition": (t >= onset) & (t < onset + width),
                 "stabilized": t >= onset + width}
    else:
        masks = {"pre": np.ones_like(t, dtype=bool)}
    for name, m in masks.items():
        branches[name] = float(err[m].mean()) if m.any() else float("nan")
    return ComparisonReport(t, emp, ci[keep], ana, float(err.mean()), branches,
                            predicted_onset, observed_onset)


# ---------------------------------------------------------------- specs

SPEC_KEYS = {
    # key: (type, default, help)
    "graph": (str, None, "edge-list file; omit to generate a power-law graph"),
    "nodes": (int, 2000, "synthetic graph size"),
    "exponent": (float, 2.5, "synthetic power-law exponent"),
    "graph_seed": (int, 7, "synthetic graph seed"),
    "embeddings": (str, None, "precomputed embedding file; skips training"),
    "dim": (int, 8, "embedding dimension"),
    "walk_length": (int, 20, "steps per walk"),
    "walks_per_node": (int, 4, "walks started at each node"),
    "window": (int, 5, "co-occurrence radius"),
    "return_bias": (float, 1.0, "walk parameter p"),
    "inout_bias": (float, 1.0, "walk parameter q"),
    "epochs": (int, 50, "embedding epochs"),
    "learning_rate": (float, 30.0, "per-pair ascent step"),
    "embed_seed": (int, 0, "embedding seed"),
    "r": (float, None, "influence range (squared latent distance)"),
    "connect_target": (float, 0.95, "choose r so the connect probability equals this (unless r is set)"),
    "a": (float, 1.0, "power of influence 1"),
    "b": (float, 2.0, "power of influence 2"),
    "capacity": (str, "n", "overload capacity; 'n' means the node count"),
    "capacity_reference": (bool, False, "treat capacity as dataset-scale and rescale by onset step"),
    "mu": (float, 10.0, "decay rate of the discrimination probability"),
    "strategy": (str, "first", "first | latest | most_similar | highest_degree"),
    "arrival": (str, "exponential(1)", "arrival-time law for first/latest"),
    "seeds": (str, "16,24", "initial followers of influence 1 and 2"),
    "horizon": (int, None, "last step (default: node count)"),
    "replications": (int, 100, "Monte Carlo runs"),
    "master_seed": (int, 0, "seed for the run streams"),
    "analytic": (bool, True, "also solve the mean-field trajectory"),
    "workers": (int, 1, "worker processes for replications"),
    "write_graph": (bool, False, "write the recovered edge list"),
}


def _coerce(kind, text):
    if kind is bool:
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    return kind(text.strip())


@dataclass
class ExperimentSpec:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def parse(cls, text: str, base_dir: str = ".") -> "ExperimentSpec":
        values = {k: v[1] for k, v in SPEC_KEYS.items()}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in SPEC_KEYS:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            try:
                values[key] = _coerce(SPEC_KEYS[key][0], val)
            except ValueError as err:
                raise ValueError(f"line {lineno}: {key}: {err}") from None
        for key in ("graph", "embeddings"):
            if values[key] is not None and not os.path.isabs(values[key]):
                values[key] = os.path.join(base_dir, values[key])
        spec = cls(values)
        spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            return cls.parse(fh.read(), os.path.dirname(os.path.abspath(path)))

    def validate(self):
        v = self.values
        if v["replications"] < 1:
            raise ValueError("replications must be >= 1")
        for key in ("graph", "embeddings"):
            if v[key] is not None and not os.path.exists(v[key]):
                raise ValueError(f"{key} file not found: {v[key]}")
        if v["r"] is None and not 0 < v["connect_target"] < 1:
            raise ValueError("connect_target must lie in (0, 1)")
        if v["r"] is not None and not v["r"] > 0:
            raise ValueError("r must be positive")
        self.seeds()
        ArrivalDistribution.parse(v["arrival"])

    def seeds(self) -> tuple[int, int]:
        parts = [int(s) for s in self.values["seeds"].split(",")]
        if len(parts) != 2:
            raise ValueError("seeds must be two comma-separated counts")
        return parts[0], parts[1]

    def with_overrides(self, **kw) -> "ExperimentSpec":
        vals = dict(self.values)
        vals.update({k: v for k, v in kw.items() if v is not None})
        spec = ExperimentSpec(vals)
        spec.validate()
        return spec


def spec_help() -> str:
    lines = ["experiment spec keys (flat 'key = value', '#' comments):"]
    for key, (kind, default, text) in SPEC_KEYS.items():
        lines.append(f"  {key:<20} {kind.__name__:<6} default={default!s:<16} {text}")
    return "\n".join(lines)


# ---------------------------------------------------------------- pipeline

@dataclass
class Prepared:
    graph: Graph
    recovered: Graph
    embeddings: EmbeddingSet
    sigma2: float
    r: float
    p: float


def prepare(spec: ExperimentSpec) -> Prepared:
    v = spec.values
    stage = "graph"
    try:
        if v["graph"]:
            graph = load_edge_list(v["graph"])
        else:
            graph = generate_power_law(v["nodes"], v["exponent"], v["graph_seed"])
        stage = "embed"
        if v["embeddings"]:
            emb = load_embeddings(v["embeddings"])
            if emb.n != graph.n:
                raise ValueError(f"embedding rows {emb.n} != graph nodes {graph.n}")
        else:
            params = WalkParams(v["return_bias"], v["inout_bias"], v["walk_length"],
                                v["walks_per_node"], v["window"])
            emb = optimize(graph, params, v["dim"], v["epochs"], v["learning_rate"], v["embed_seed"])
        stage = "fit"
        model = fit_gaussian(emb)
        stage = "recover"
        if v["r"] is not None:
            r = v["r"]
        else:
            r = range_for_probability(v["connect_target"], model.variance, emb.d)
        p = connect_probability(r, model.variance, emb.d)
        recovered = recover_links(graph, emb, r)
    except Exception as err:
        raise StageError(stage, err) from err
    return Prepared(graph, recovered, emb, model.variance, r, p)


def competition_config(spec: ExperimentSpec, n: int, p: float) -> CompetitionConfig:
    v = spec.values
    cap = float(n) if v["capacity"].strip().lower() == "n" else float(v["capacity"])
    if v["capacity_reference"]:
        cap = equivalent_capacity(cap, p)
    return CompetitionConfig(a=v["a"], b=v["b"], capacity=cap, mu=v["mu"], strategy=v["strategy"],
                             arrival=ArrivalDistribution.parse(v["arrival"]), seeds=spec.seeds(),
                             horizon=v["horizon"], rng_seed=v["master_seed"])


def run_experiment(spec, out_dir: str, prepared: Prepared | None = None) -> dict:
    """Full pipeline; writes per-run CSVs, mean/analytic CSVs and ``summary.txt``.

    Outputs are staged in a sibling temporary directory and moved into place
    only when every stage succeeded.
    """
    if not isinstance(spec, ExperimentSpec):
        spec = ExperimentSpec.load(spec)
    v = spec.values
    parent = os.path.dirname(os.path.abspath(out_dir)) or "."
    os.makedirs(parent, exist_ok=True)
    stage_dir = tempfile.mkdtemp(prefix=".partial-", dir=parent)
    try:
        prep = prepared or prepare(spec)
        try:
            config = competition_config(spec, prep.recovered.n, prep.p)
        except Exception as err:
            raise StageError("config", err) from err
        predicted = overload_time(config.capacity, prep.p) if math.isfinite(config.capacity) else None
        try:
            mc = monte_carlo(prep.recovered, config, v["replications"], v["master_seed"],
                             vectors=prep.embeddings.vectors, predicted_onset=predicted,
                             workers=v["workers"])
        except Exception as err:
            raise StageError("simulate", err) from err
        meta = {"nodes": prep.recovered.n, "edges": prep.recovered.edge_count,
                "latent_edges": len(prep.recovered.latent_edges), "sigma2": repr(prep.sigma2),
                "r": repr(prep.r), "connect_prob": repr(prep.p)}
        save_embeddings(prep.embeddings, os.path.join(stage_dir, "embeddings.txt"))
        if v["write_graph"]:
            write_edge_list(prep.recovered, os.path.join(stage_dir, "recovered.txt"))
        ana = None
        if v["analytic"]:
            try:
                ana = analytic.full_trajectory(config.a, config.b,
                                               InitialState.from_counts(*config.seeds), mc.t,
                                               mu=config.mu, t_c=predicted)
            except Exception as err:
                raise StageError("solve", err) from err
        write_runs(stage_dir, mc, config, meta, predicted, ana)
        summary = summarize(stage_dir)
        if os.path.exists(out_dir):
            shutil.rmtree(out_dir)
        os.replace(stage_dir, out_dir)
    except BaseException:
        shutil.rmtree(stage_dir, ignore_errors=True)
        raise
    return summary


def write_runs(out_dir: str, mc: MonteCarloResult, config: CompetitionConfig, meta: dict,
               predicted_onset: float | None = None, analytic_traj: Trajectory | None = None):
    """Per-run CSVs (with trigger metadata) and the optional analytic CSV."""
    meta = dict(meta, a=config.a, b=config.b, capacity=config.capacity, mu=config.mu,
                strategy=config.strategy, seeds=f"{config.seeds[0]},{config.seeds[1]}",
                predicted_onset=repr(predicted_onset) if predicted_onset is not None else "none")
    os.makedirs(os.path.join(out_dir, "runs"), exist_ok=True)
    for k, res in enumerate(mc.runs):
        run_meta = dict(meta, replication=k,
                        trigger_step=res.trigger_step if res.trigger_step is not None else "none",
                        exhausted=res.exhausted)
        write_trajectory_csv(res.trajectory, os.path.join(out_dir, "runs", f"run_{k:04d}.csv"),
                             run_meta)
    if analytic_traj is not None:
        write_trajectory_csv(analytic_traj, os.path.join(out_dir, "analytic.csv"),
                             {"predicted_onset": meta["predicted_onset"], "mu": config.mu})


def _load_runs(out_dir):
    run_dir = os.path.join(out_dir, "runs")
    files = sorted(f for f in os.listdir(run_dir) if f.endswith(".csv"))
    if not files:
        raise ValueError(f"no run files in {run_dir}")
    results, metas = [], []
    for f in files:
        traj, meta = read_trajectory_csv(os.path.join(run_dir, f))
        trig = meta.get("trigger_step", "none")
        results.append(SimResult(traj, None if trig == "none" else int(trig), None,
                                 meta.get("exhausted") == "True"))
        metas.append(meta)
    return results, metas


def summarize(out_dir: str) -> dict:
    """Rebuild ``mean.csv`` and ``summary.txt`` from the per-run CSVs in ``out_dir``."""
    results, metas = _load_runs(out_dir)
    meta = metas[0]
    t, shares = align_runs(results, 0)
    mc = MonteCarloResult(t, shares, results)
    mean = mc.mean_trajectory()
    ci = mc.ci_half_width
    with open(os.path.join(out_dir, "mean.csv"), "w") as fh:
        fh.write("t,x1,x2,share1,share2,ci_share1\n")
        for row in zip(mean.t, mean.x1, mean.x2, mean.share1, mean.share2, ci):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    triggers = [r.trigger_step for r in results if r.trigger_step is not None]
    predicted = meta.get("predicted_onset", "none")
    horizon = float(t[-1])
    summary = {
        "replications": len(results),
        "final_share1": float(mc.mean_share1[-1]),
        "final_share2": float(1 - mc.mean_share1[-1]),
        "final_ci_share1": float(ci[-1]),
        "winner": "I1" if mc.mean_share1[-1] > 0.5 else ("I2" if mc.mean_share1[-1] < 0.5 else "tie"),
        "horizon_steps": horizon,
        "predicted_onset": None if predicted == "none" else float(predicted),
        "observed_onset_mean": float(np.mean(triggers)) if triggers else None,
        "observed_onset_fraction": float(np.mean(triggers)) / horizon if triggers else None,
        "triggered_runs": len(triggers),
        "exhausted_runs": sum(r.exhausted for r in results),
    }
    ana_path = os.path.join(out_dir, "analytic.csv")
    if os.path.exists(ana_path):
        ana, ameta = read_trajectory_csv(ana_path)
        onset = summary["predicted_onset"]
        mu = float(ameta["mu"]) if "mu" in ameta else None
        rep = compare(mc, ana, onset=onset, mu=mu)
        summary["mae_share1"] = rep.mae
        for k, val in rep.branch_mae.items():
            summary[f"mae_{k}"] = val
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        for k in ("nodes", "edges", "latent_edges", "a", "b", "capacity", "mu", "strategy",
                  "seeds", "sigma2", "r", "connect_prob"):
            fh.write(f"{k} = {meta.get(k, '')}\n")
        for k, val in summary.items():
            fh.write(f"{k} = {_fmt(val)}\n")
    return summary


def _fmt(val):
    if val is None:
        return "none"
    if isinstance(val, float):
        return f"{val:.6g}"
    return str(val)
