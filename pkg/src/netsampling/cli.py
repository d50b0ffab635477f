"""Command-line entry point: ``netsampling <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .ci import CiMethod, fast_ci, gile_ss_ci, naive_ci, salganik_ci
from .estimators import ATTRIBUTES, hansen_hurwitz_mean, horvitz_thompson_mean
from .graph import GraphError, load_graph, save_graph
from .harness import ExperimentSpec, run_experiment
from .inclusion import (InclusionMethod, InclusionModel, estimate_pk_rw, fit_inclusion,
                        kurant_direct, kurant_simplified_from_sample, pi_with_replacement)
from .netgen import InfeasibleParams, NetgenParams, generate, measure_summary
from .samplers import SamplerConfig, SamplerKind, read_trace, run_sampler, srw, validate_trace, write_trace


class CliError(ValueError):
    """Bad command-line input; reported without a traceback."""


def _sidecar(trace_path: str | Path) -> Path:
    return Path(str(trace_path) + ".json")


def _category_path(edge_path: Path) -> Path:
    return edge_path.with_suffix(".categories") if edge_path.suffix else Path(str(edge_path) + ".categories")


def _load_trace(args):
    """Trace plus its graph; graph paths come from flags or the sidecar."""
    meta = {}
    side = _sidecar(args.trace)
    if side.exists():
        meta = json.loads(side.read_text())
    graph_path = args.graph or meta.get("graph")
    cat_path = args.categories or meta.get("categories")
    if graph_path is None:
        raise CliError("no graph given (--graph) and no trace sidecar found")
    config = SamplerConfig.from_dict(meta["sampler"]) if "sampler" in meta else None
    trace = read_trace(args.trace, config)
    g = load_graph(graph_path, cat_path)
    validate_trace(g, trace)
    return trace, g


def cmd_netgen(args) -> int:
    params = NetgenParams(args.population, args.prop_a, args.mean_degree, args.homophily,
                          args.activity, args.seed, homophily_basis=args.homophily_basis)
    g = generate(params, clamp=args.clamp)
    out = Path(args.out)
    cats = Path(args.categories_out) if args.categories_out else _category_path(out)
    save_graph(g, out, cats)
    s = measure_summary(g)
    print(json.dumps({"edges": str(out), "categories": str(cats), "nodes": g.num_nodes,
                      "edge_count": s.edge_count, "mean_degree": s.measured_mean_degree,
                      "homophily": s.measured_homophily,
                      "homophily_degree_baseline": s.measured_homophily_degree,
                      "activity": s.measured_activity}))
    return 0


def cmd_sample(args) -> int:
    g = load_graph(args.graph, args.categories)
    config = SamplerConfig(SamplerKind(args.method), args.size, with_replacement=args.with_replacement,
                           coupons_n=args.coupons, fire_prob=args.fire_prob,
                           num_chains=args.chains, rng_seed=args.seed)
    trace = run_sampler(g, config, np.random.default_rng(args.seed))
    write_trace(trace, args.out)
    meta = {"sampler": trace.sampler.to_dict(), "graph": str(Path(args.graph).resolve()),
            "categories": str(Path(args.categories).resolve()) if args.categories else None}
    _sidecar(args.out).write_text(json.dumps(meta, indent=2) + "\n")
    print(json.dumps({"trace": args.out, "records": len(trace),
                      "distinct_nodes": int(len(trace.distinct_nodes()))}))
    return 0


def _fit_for_cli(method: InclusionMethod, trace, g, population, f, seed) -> InclusionModel:
    nodes = trace.estimation_nodes()
    degrees = g.degrees[nodes]
    if method is InclusionMethod.WITH_REPLACEMENT:
        return pi_with_replacement(degrees)
    if trace.with_replacement:
        raise CliError(f"{method.value} needs a traversal trace; use --method wr")
    rng = np.random.default_rng(seed)
    if method is InclusionMethod.GILE_SS:
        if population is None:
            raise CliError("gile-ss needs --population")
        return fit_inclusion(method, degrees, population, rng=rng)
    if f is None:
        if population is None:
            raise CliError("give --population or --f")
        f = len(degrees) / population
    if method is InclusionMethod.KURANT_SIMPLIFIED:
        return kurant_simplified_from_sample(degrees, f)
    pk = estimate_pk_rw(srw(g, None, population or g.num_nodes, rng), g)
    model = kurant_direct(pk, f)
    return InclusionModel({int(k): float(p) for k, p in zip(np.unique(degrees), model.pi(np.unique(degrees)))},
                          model.method, f=model.f, t_star=model.t_star)


def cmd_estimate_pi(args) -> int:
    trace, g = _load_trace(args)
    model = _fit_for_cli(InclusionMethod(args.method), trace, g, args.population, args.f, args.seed)
    nodes = trace.estimation_nodes()
    ks = np.unique(np.maximum(g.degrees[nodes], 1))
    pis = model.pi(ks)
    if model.method is InclusionMethod.WITH_REPLACEMENT:
        # expected draws per node, the same scale as the traversal models
        pis = len(nodes) * pis / max(g.volume, 1)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["degree", "pi"])
        for k, p in zip(ks.tolist(), pis.tolist()):
            w.writerow([k, repr(float(p))])
    print(json.dumps({"pi": args.out, "method": model.method.value, "degrees": len(ks),
                      "f": _finite(model.f), "t_star": _finite(model.t_star)}))
    return 0


def _finite(v):
    # NaN is not valid JSON
    return None if v is None or not math.isfinite(v) else v


def _read_pi(path) -> dict[int, float]:
    with open(path, newline="") as fh:
        return {int(r["degree"]): float(r["pi"]) for r in csv.DictReader(fh)}


def cmd_estimate(args) -> int:
    trace, g = _load_trace(args)
    table = _read_pi(args.pi)
    nodes = trace.estimation_nodes()
    ks = np.maximum(g.degrees[nodes], 1)
    missing = sorted(set(ks.tolist()) - set(table))
    if missing:
        raise CliError(f"pi file has no entry for degrees {missing}")
    pi = np.array([table[k] for k in ks.tolist()])
    x = ATTRIBUTES[args.attribute](g.is_a[nodes], g.degrees[nodes])
    if args.estimator == "hh":
        est = hansen_hurwitz_mean(x, pi)
    else:
        if args.population is None:
            raise CliError("the ht estimator needs --population")
        # pi files hold inclusion probabilities; the estimator takes per-draw ones
        est = horvitz_thompson_mean(x, pi / len(nodes), args.population)
    print(json.dumps({"estimate": est, "estimator": args.estimator,
                      "attribute": args.attribute, "sample_size": int(len(nodes))}))
    return 0


def cmd_ci(args) -> int:
    trace, g = _load_trace(args)
    method = CiMethod(args.method)
    attribute = ATTRIBUTES[args.attribute]
    population = args.population or g.num_nodes
    rng = np.random.default_rng(args.seed)
    nodes = trace.estimation_nodes()
    if method is CiMethod.NAIVE:
        res = naive_ci(attribute(g.is_a[nodes], g.degrees[nodes]), args.level)
    elif method is CiMethod.SALGANIK:
        if trace.with_replacement:
            model = pi_with_replacement(g.degrees[nodes])
        else:
            model = fit_inclusion(InclusionMethod.KURANT_SIMPLIFIED, g.degrees[nodes], population)
        res = salganik_ci(trace, g, attribute, model, args.resamples, args.level, rng)
    else:
        if trace.with_replacement:
            raise CliError(f"the {method.value} interval needs a traversal trace")
        if method is CiMethod.GILE_SS:
            res = gile_ss_ci(trace, g, attribute, population, args.resamples, args.level, rng)
        else:
            res = fast_ci(trace, g, attribute, population, args.resamples, args.level, rng)
    print(json.dumps(res.to_dict()))
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    manifest = run_experiment(spec, args.out, threads=args.threads, full_scale=args.full_scale,
                              plots=not args.no_plots)
    print(json.dumps({k: manifest[k] for k in ("experiment", "outputs", "wall_clock_seconds")}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netsampling", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("netgen", help="generate a two-category network")
    q.add_argument("--population", type=int, required=True)
    q.add_argument("--prop-a", type=float, default=0.3)
    q.add_argument("--mean-degree", type=float, default=10.0)
    q.add_argument("--homophily", type=float, default=1.0)
    q.add_argument("--activity", type=float, default=1.0)
    q.add_argument("--homophily-basis", choices=("degree", "pairs"), default="degree")
    q.add_argument("--clamp", action="store_true", help="clamp infeasible targets instead of failing")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True, help="edge-list path")
    q.add_argument("--categories-out", help="category file path (default: <out>.categories)")
    q.set_defaults(func=cmd_netgen)

    q = sub.add_parser("sample", help="draw one sample trace")
    q.add_argument("--graph", required=True)
    q.add_argument("--categories")
    q.add_argument("--method", choices=[k.value for k in SamplerKind], default="rds")
    q.add_argument("--size", type=int, required=True)
    q.add_argument("--coupons", type=int, default=3)
    q.add_argument("--chains", type=int, default=1)
    q.add_argument("--fire-prob", type=float, default=0.7)
    q.add_argument("--with-replacement", action="store_true")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_sample)

    def trace_args(q):
        q.add_argument("--trace", required=True)
        q.add_argument("--graph", help="edge list (default: from the trace sidecar)")
        q.add_argument("--categories")

    q = sub.add_parser("estimate-pi", help="fit inclusion probabilities per degree")
    trace_args(q)
    q.add_argument("--method", choices=[m.value for m in InclusionMethod], required=True)
    q.add_argument("--population", type=int)
    q.add_argument("--f", type=float, help="sampling fraction (overrides size/population)")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_estimate_pi)

    q = sub.add_parser("estimate", help="weighted point estimate")
    trace_args(q)
    q.add_argument("--pi", required=True)
    q.add_argument("--attribute", choices=sorted(ATTRIBUTES), default="prop-a")
    q.add_argument("--estimator", choices=("hh", "ht"), default="hh")
    q.add_argument("--population", type=int)
    q.set_defaults(func=cmd_estimate)

    q = sub.add_parser("ci", help="confidence interval")
    trace_args(q)
    q.add_argument("--method", choices=[m.value for m in CiMethod], required=True)
    q.add_argument("--attribute", choices=sorted(ATTRIBUTES), default="prop-a")
    q.add_argument("--level", type=float, default=0.95)
    q.add_argument("--resamples", type=int, default=1000)
    q.add_argument("--population", type=int)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_ci)

    q = sub.add_parser("experiment", help="run a Monte-Carlo experiment")
    q.add_argument("--spec", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--threads", type=int, default=1)
    q.add_argument("--full-scale", action="store_true")
    q.add_argument("--no-plots", action="store_true")
    q.set_defaults(func=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphError, InfeasibleParams, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
