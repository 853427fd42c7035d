"""Command-line front end: embed, recover, simulate, solve, compare, experiment."""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import analytic, harness
from .analytic import InitialState, read_trajectory_csv, write_trajectory_csv
from .embedding import WalkParams, fit_gaussian, load_embeddings, optimize, save_embeddings
from .graph import load_edge_list, write_edge_list
from .latent import connect_probability, overload_time, range_for_probability, recover_links
from .sim import STRATEGIES, ArrivalDistribution, CompetitionConfig


def _seeds(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated counts, e.g. 16,24")
    return int(parts[0]), int(parts[1])


def _capacity(text):
    return text if text.strip().lower() == "n" else float(text)


def cmd_embed(args):
    graph = load_edge_list(args.graph)
    params = WalkParams(args.return_bias, args.inout_bias, args.walk_length,
                        args.walks_per_node, args.window)
    emb = optimize(graph, params, args.dim, args.epochs, args.learning_rate, args.seed)
    save_embeddings(emb, args.out)
    model = fit_gaussian(emb)
    print(f"nodes={graph.n} d={emb.d} sigma2={model.variance:.6g} "
          f"objective={emb.objective_history[-1]:.6g}")


def cmd_recover(args):
    graph = load_edge_list(args.graph)
    emb = load_embeddings(args.embeddings)
    model = fit_gaussian(emb)
    r = args.r if args.r is not None else range_for_probability(args.connect_target,
                                                                model.variance, emb.d)
    rec = recover_links(graph, emb, r)
    write_edge_list(rec, args.out)
    p = connect_probability(r, model.variance, emb.d)
    print(f"r={r:.6g} connect_prob={p:.6g} edges={rec.edge_count} latent={len(rec.latent_edges)}")


def cmd_simulate(args):
    graph = load_edge_list(args.graph)
    vectors, p, sigma2 = None, None, None
    if args.embeddings:
        emb = load_embeddings(args.embeddings)
        vectors = emb.vectors
        sigma2 = fit_gaussian(emb).variance
        if args.r is not None:
            p = connect_probability(args.r, sigma2, emb.d)
    cap = float(graph.n) if args.capacity == "n" else args.capacity
    config = CompetitionConfig(a=args.a, b=args.b, capacity=cap, mu=args.mu,
                               strategy=args.strategy, arrival=ArrivalDistribution.parse(args.arrival),
                               seeds=args.seeds, horizon=args.horizon, rng_seed=args.seed)
    predicted = overload_time(cap, p) if p is not None else None
    mc = harness.monte_carlo(graph, config, args.replications, args.seed, vectors=vectors,
                             predicted_onset=predicted, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    meta = {"nodes": graph.n, "edges": graph.edge_count, "latent_edges": len(graph.latent_edges),
            "sigma2": repr(sigma2) if sigma2 else "none", "r": args.r if args.r else "none",
            "connect_prob": repr(p) if p else "none"}
    harness.write_runs(args.out, mc, config, meta, predicted)
    summary = harness.summarize(args.out)
    _print_summary(summary)


def cmd_solve(args):
    init = InitialState.from_counts(*args.seeds)
    t_end = args.t_end if args.t_end else 100 * init.t0
    grid = np.linspace(init.t0, t_end, args.points)
    t_c = args.t_c
    if t_c is None and args.capacity is not None and args.connect_prob is not None:
        t_c = overload_time(args.capacity, args.connect_prob)
    traj = analytic.full_trajectory(args.a, args.b, init, grid, mu=args.mu, t_c=t_c)
    write_trajectory_csv(traj, args.out, {"a": args.a, "b": args.b, "mu": args.mu,
                                          "predicted_onset": t_c if t_c is not None else "none"})
    print(f"t={traj.t[-1]:.6g} share1={traj.share1[-1]:.6g} share2={traj.share2[-1]:.6g}")


def cmd_compare(args):
    if os.path.isdir(args.empirical):
        emp = harness.MonteCarloResult(*harness.align_runs(harness._load_runs(args.empirical)[0], 0),
                                       runs=[])
    else:
        emp, _ = read_trajectory_csv(args.empirical)
    ana, meta = read_trajectory_csv(args.analytic)
    onset = meta.get("predicted_onset", "none")
    onset = None if onset == "none" else float(onset)
    mu = float(meta["mu"]) if meta.get("mu", "None") != "None" else None
    rep = harness.compare(emp, ana, onset=onset, mu=mu)
    print(f"mae_share1 = {rep.mae:.6g}")
    for k, v in rep.branch_mae.items():
        print(f"mae_{k} = {v:.6g}")


def cmd_experiment(args):
    spec = harness.ExperimentSpec.load(args.spec)
    spec = spec.with_overrides(master_seed=args.seed, replications=args.replications)
    summary = harness.run_experiment(spec, args.out)
    _print_summary(summary)


def _print_summary(summary):
    for k, v in summary.items():
        print(f"{k} = {harness._fmt(v)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="influcomp", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=harness.spec_help())
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="train latent embeddings for an edge list")
    p.add_argument("graph")
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--walk-length", type=int, default=20)
    p.add_argument("--walks-per-node", type=int, default=4)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--return-bias", type=float, default=1.0)
    p.add_argument("--inout-bias", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="embedding file")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("recover", help="add latent links below an influence range")
    p.add_argument("graph")
    p.add_argument("embeddings")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--r", type=float)
    g.add_argument("--connect-target", type=float)
    p.add_argument("--out", required=True, help="edge list with '# latent' markers")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("simulate", help="Monte Carlo competition runs on an edge list")
    p.add_argument("graph")
    p.add_argument("--embeddings", help="needed for most_similar and for the onset prediction")
    p.add_argument("--r", type=float, help="influence range used to predict the onset")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--capacity", type=_capacity, default="n")
    p.add_argument("--mu", type=float, default=10.0)
    p.add_argument("--strategy", choices=STRATEGIES, default="first")
    p.add_argument("--arrival", default="exponential(1)")
    p.add_argument("--seeds", type=_seeds, default=(16, 24))
    p.add_argument("--horizon", type=int)
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", help="mean-field trajectory")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--seeds", type=_seeds, default=(16, 24))
    p.add_argument("--mu", type=float)
    p.add_argument("--t-c", type=float, help="overload onset")
    p.add_argument("--capacity", type=float, help="with --connect-prob, sets the onset")
    p.add_argument("--connect-prob", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--out", required=True, help="trajectory CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="MAE between an empirical and an analytic trajectory")
    p.add_argument("empirical", help="trajectory CSV or simulate output directory")
    p.add_argument("analytic", help="trajectory CSV")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("experiment", help="full pipeline from a spec file",
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog=harness.spec_help())
    p.add_argument("spec")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="overrides master_seed")
    p.add_argument("--replications", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except harness.StageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as err:
        print(f"error: [{args.command}] {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
