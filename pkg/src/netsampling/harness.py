"""Monte-Carlo experiment driver.

An experiment is described by an :class:`ExperimentSpec` (loadable from JSON).
Every random stream is derived from ``master_seed`` plus a tuple of integer
counters (experiment, grid cell, network, replicate, ...), so results do not
depend on execution order or on the number of worker processes.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import math
import platform
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from . import __version__
from .ci import CiMethod, fast_ci, gile_ss_ci, naive_ci, salganik_ci
from .estimators import category_a, correlation, hansen_hurwitz_mean
from .fdist import AnovaResult, one_way_anova
from .graph import Graph
from .inclusion import InclusionMethod, estimate_pk_rw, fit_inclusion
from .netgen import InfeasibleParams, NetgenParams, generate, plan_blocks
from .plots import Panel, emit_plot
from .samplers import SamplerConfig, SamplerKind, run_sampler, srw

FULL_SCALE = (100, 100)  # networks, replicates per network


class ExperimentKind(str, enum.Enum):
    ERROR_CURVE = "ErrorCurve"
    ERROR_DECOMPOSITION = "ErrorDecomposition"
    METHOD_COMPARISON = "MethodComparison"
    POPULATION_SWEEP = "PopulationSweep"
    COVERAGE_STUDY = "CoverageStudy"
    ANOVA = "Anova"
    CORRELATION_STUDY = "CorrelationStudy"


# stable integer codes used as the first spawn-key element
_CODES = {kind: i + 1 for i, kind in enumerate(ExperimentKind)}

_NETGEN_KEYS = ("population", "prop_a", "mean_degree", "homophily", "activity")
_SAMPLER_KEYS = ("kind", "coupons_n", "with_replacement", "proportion", "target_size", "fire_prob")

_BASE_NETGEN = {"population": [1000], "prop_a": [0.3], "mean_degree": [10.0],
                "homophily": [1.0], "activity": [1.0]}
_PROPORTIONS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
_TRAVERSAL_INCLUSION = ["kurant", "kurant-simple", "gile-ss"]

DEFAULT_CASES = [
    {"case": "A", "homophily": 1.0, "activity": 1.0, "proportion": 0.1},
    {"case": "B", "homophily": 1.0, "activity": 2.0, "proportion": 0.2},
    {"case": "C", "homophily": 2.0, "activity": 2.0, "proportion": 0.3},
]

_DEFAULTS: dict[ExperimentKind, dict[str, Any]] = {
    ExperimentKind.ERROR_CURVE: {
        "netgen": {**_BASE_NETGEN, "homophily": [1.0, 2.0], "activity": [0.5, 1.0, 2.0]},
        "sampler": {"kind": ["srw", "rds"], "coupons_n": [3], "with_replacement": [True],
                    "proportion": _PROPORTIONS},
    },
    ExperimentKind.ERROR_DECOMPOSITION: {
        "netgen": {**_BASE_NETGEN, "homophily": [1.0, 2.0], "activity": [0.5, 1.0, 2.0]},
        "sampler": {"kind": ["srw", "rds"], "coupons_n": [3], "with_replacement": [True],
                    "proportion": _PROPORTIONS},
    },
    ExperimentKind.METHOD_COMPARISON: {
        "netgen": {**_BASE_NETGEN, "homophily": [1.0, 2.0], "activity": [0.5, 1.0, 2.0]},
        "sampler": {"kind": ["rds"], "coupons_n": [3], "with_replacement": [True, False],
                    "proportion": _PROPORTIONS},
    },
    ExperimentKind.POPULATION_SWEEP: {
        "netgen": {**_BASE_NETGEN, "population": [500, 700, 1000, 1300, 1700, 2000]},
        "sampler": {"kind": ["rds"], "coupons_n": [3], "with_replacement": [False],
                    "target_size": [100]},
        "inclusion": ["gile-ss", "kurant-simple"],
    },
    ExperimentKind.COVERAGE_STUDY: {
        "netgen": dict(_BASE_NETGEN),
        "sampler": {"kind": ["rds"], "coupons_n": [3], "with_replacement": [False]},
        "networks": 20,
        "replicates_per_network": 10,
    },
    ExperimentKind.ANOVA: {
        "netgen": dict(_BASE_NETGEN),
        "sampler": {"kind": ["rds"], "coupons_n": [3], "with_replacement": [False],
                    "target_size": [100]},
        "inclusion": ["kurant-simple"],
        "networks": 20,
        "replicates_per_network": 25,
    },
    ExperimentKind.CORRELATION_STUDY: {
        "netgen": {**_BASE_NETGEN, "activity": [0.5, 1.0, 2.0]},
        "sampler": {"kind": ["rds"], "coupons_n": [3], "with_replacement": [False],
                    "proportion": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]},
        "replicates_per_network": 5,
    },
}


@dataclass
class ExperimentSpec:
    """One experiment: a network grid, a sampler grid and replication sizes.

    ``netgen`` and ``sampler`` map parameter names to lists; the grid is
    their cross product. A sampler grid may give sample sizes as
    ``proportion`` (trace length over population) or absolute ``target_size``.
    """

    experiment: ExperimentKind
    netgen: dict = field(default_factory=dict)
    sampler: dict = field(default_factory=dict)
    replicates_per_network: int | None = None  # kind default, 50 unless overridden below
    networks: int | None = None  # kind default, 30 unless overridden below
    master_seed: int = 0
    output_dir: str = "results"
    inclusion: list | None = None
    ci_methods: list = field(default_factory=lambda: ["salganik", "gile-ss", "fast"])
    cases: list = field(default_factory=lambda: [dict(c) for c in DEFAULT_CASES])
    resamples: int = 1000
    level: float = 0.95
    repetitions: int = 1
    pk_walk_length: int | None = None  # auxiliary walk for the direct model; default |V|

    def __post_init__(self):
        self.experiment = ExperimentKind(self.experiment)
        defaults = _DEFAULTS[self.experiment]
        if self.networks is None:
            self.networks = defaults.get("networks", 30)
        if self.replicates_per_network is None:
            self.replicates_per_network = defaults.get("replicates_per_network", 50)
        if self.inclusion is None:
            self.inclusion = list(defaults.get("inclusion", _TRAVERSAL_INCLUSION))
        self.netgen = {**defaults["netgen"], **(self.netgen or {})}
        self.sampler = {**defaults["sampler"], **(self.sampler or {})}
        for key in self.netgen:
            if key not in _NETGEN_KEYS:
                raise ValueError(f"unknown netgen grid key {key!r}")
        for key in self.sampler:
            if key not in _SAMPLER_KEYS:
                raise ValueError(f"unknown sampler grid key {key!r}")
        self.netgen = {k: _as_list(v) for k, v in self.netgen.items()}
        self.sampler = {k: _as_list(v) for k, v in self.sampler.items()}
        self.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["experiment"] = self.experiment.value
        return d

    def scaled(self, networks: int, replicates: int) -> "ExperimentSpec":
        return replace(self, networks=networks, replicates_per_network=replicates)

    def full_scale(self) -> "ExperimentSpec":
        return self.scaled(*FULL_SCALE)

    def validate(self) -> None:
        for name, grid in (("netgen", self.netgen), ("sampler", self.sampler)):
            for key, values in grid.items():
                if len(values) == 0:
                    raise ValueError(f"{name} grid entry {key!r} is empty")
        if self.networks < 1:
            raise ValueError("networks must be at least 1")
        if self.replicates_per_network < 1:
            raise ValueError("replicates_per_network must be at least 1")
        if self.experiment is ExperimentKind.ANOVA:
            if self.networks < 2 or self.replicates_per_network < 2:
                raise ValueError("ANOVA needs at least 2 networks and 2 replicates")
        elif self.experiment is not ExperimentKind.CORRELATION_STUDY:
            if self.networks * self.replicates_per_network < 2:
                raise ValueError("variance-based outputs need at least 2 replicates")
        if self.experiment is not ExperimentKind.COVERAGE_STUDY:
            if "proportion" not in self.sampler and "target_size" not in self.sampler:
                raise ValueError("sampler grid needs 'proportion' or 'target_size'")
        for kind in self.sampler["kind"]:
            if SamplerKind(kind) is SamplerKind.WRW:
                raise ValueError("weighted random walks need edge weights; not available in experiments")
        for m in self.inclusion:
            InclusionMethod(m)
        for m in self.ci_methods:
            CiMethod(m)
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


# ---------------------------------------------------------------- seeding

def stream(master_seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for a counter tuple under ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(keys)))


def stream_seed(master_seed: int, *keys: int) -> int:
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


# ---------------------------------------------------------------- grids

@dataclass(frozen=True)
class NetCell:
    index: int
    population: int
    prop_a: float
    mean_degree: float
    homophily: float
    activity: float

    def params(self, seed: int) -> NetgenParams:
        return NetgenParams(self.population, self.prop_a, self.mean_degree,
                            self.homophily, self.activity, seed)

    def columns(self) -> dict:
        return {"population": self.population, "prop_a": self.prop_a,
                "mean_degree": self.mean_degree, "homophily": self.homophily,
                "activity": self.activity}


@dataclass(frozen=True)
class SamplerCell:
    kind: str
    coupons_n: int
    with_replacement: bool
    proportion: float | None
    target_size: int | None
    fire_prob: float

    @property
    def label(self) -> str:
        kind = SamplerKind(self.kind)
        if kind in (SamplerKind.RDS, SamplerKind.SNOWBALL_N):
            base = f"{kind.value}-n{self.coupons_n}"
        elif kind is SamplerKind.FOREST_FIRE:
            base = f"{kind.value}-p{self.fire_prob:g}"
        else:
            base = kind.value
        if kind is SamplerKind.RDS:
            base += "-wr" if self.with_replacement else "-traversal"
        return base

    @property
    def trace_with_replacement(self) -> bool:
        kind = SamplerKind(self.kind)
        if kind in (SamplerKind.SRW, SamplerKind.MHRW, SamplerKind.UNIFORM_LINK):
            return True
        return kind is SamplerKind.RDS and self.with_replacement

    def size_for(self, population: int) -> int:
        if self.target_size is not None:
            size = int(self.target_size)
        else:
            size = int(round(self.proportion * population))
        if not self.trace_with_replacement:
            size = min(size, population)
        return max(size, 1)

    def config(self, population: int) -> SamplerConfig:
        return SamplerConfig(SamplerKind(self.kind), self.size_for(population),
                             with_replacement=self.trace_with_replacement,
                             coupons_n=self.coupons_n, fire_prob=self.fire_prob)

    def inclusion_methods(self, requested: list) -> list[str]:
        if self.trace_with_replacement:
            return ["stationary"]
        if SamplerKind(self.kind) is SamplerKind.UNIFORM_NODE:
            return ["stationary"]
        return list(requested)

    def columns(self) -> dict:
        return {"sampler": self.label, "kind": self.kind, "coupons_n": self.coupons_n,
                "with_replacement": self.trace_with_replacement,
                "proportion": "" if self.proportion is None else self.proportion,
                "target_size": "" if self.target_size is None else self.target_size}


def net_cells(spec: ExperimentSpec) -> list[NetCell]:
    grid = spec.netgen
    combos = itertools.product(*(grid[k] for k in _NETGEN_KEYS))
    return [NetCell(i, int(p), float(q), float(d), float(h), float(a))
            for i, (p, q, d, h, a) in enumerate(combos)]


def sampler_cells(spec: ExperimentSpec) -> list[SamplerCell]:
    s = spec.sampler
    sizes = ([(float(f), None) for f in s.get("proportion", [])]
             + [(None, int(t)) for t in s.get("target_size", [])])
    out: list[SamplerCell] = []
    seen = set()
    for kind, n, wr, fp in itertools.product(s["kind"], s.get("coupons_n", [3]),
                                             s.get("with_replacement", [False]),
                                             s.get("fire_prob", [0.7])):
        kind = SamplerKind(kind).value
        for prop, target in sizes:
            cell = SamplerCell(kind, int(n), bool(wr), prop, target, float(fp))
            key = (cell.label, prop, target)
            if key not in seen:
                seen.add(key)
                out.append(cell)
    return out


def _feasible(cells: list[NetCell]) -> tuple[list[NetCell], list[dict]]:
    ok, skipped = [], []
    for cell in cells:
        try:
            plan_blocks(cell.params(0))
        except InfeasibleParams as exc:
            warnings.warn(f"skipping infeasible network cell {cell.columns()}: {exc}")
            skipped.append({**cell.columns(), "reason": str(exc)})
        else:
            ok.append(cell)
    return ok, skipped


def _network(spec: ExperimentSpec, cell: NetCell, net: int, *extra: int) -> Graph:
    code = _CODES[spec.experiment]
    return generate(cell.params(stream_seed(spec.master_seed, code, *extra, cell.index, net)))


def _map(fn: Callable, tasks: list, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


def _giant_fraction(g: Graph) -> float:
    labels = g.component_labels
    return float(np.bincount(labels).max() / g.num_nodes) if g.num_nodes else float("nan")


def _stationary_pi(kind: str, degrees: np.ndarray) -> np.ndarray:
    if SamplerKind(kind) in (SamplerKind.MHRW, SamplerKind.UNIFORM_NODE):
        return np.ones(len(degrees))
    return np.maximum(degrees, 1).astype(float)


def _fit(method: str, g: Graph, trace, nodes: np.ndarray, pk_walk: int,
         rng: np.random.Generator) -> np.ndarray:
    degrees = g.degrees[nodes]
    if method == "stationary":
        return _stationary_pi(trace.sampler.kind.value, degrees)
    pk = None
    if InclusionMethod(method) is InclusionMethod.KURANT_DIRECT:
        pk = estimate_pk_rw(srw(g, None, pk_walk, rng), g)
    return fit_inclusion(method, degrees, g.num_nodes, pk=pk, rng=rng).pi(degrees)


# ---------------------------------------------------------------- error studies

def _error_unit(task) -> dict:
    spec, cell, net, samplers = task
    code = _CODES[spec.experiment]
    g = _network(spec, cell, net)
    truth = float(g.is_a.mean())
    pk_walk = spec.pk_walk_length or g.num_nodes
    out: dict = {"giant": _giant_fraction(g), "truth": truth, "errors": {}}
    for si, sc in enumerate(samplers):
        config = sc.config(g.num_nodes)
        methods = sc.inclusion_methods(spec.inclusion)
        errs = {m: np.empty(spec.replicates_per_network) for m in methods}
        for rep in range(spec.replicates_per_network):
            rng = stream(spec.master_seed, code, cell.index, net, si, rep)
            trace = run_sampler(g, config, rng)
            nodes = trace.estimation_nodes()
            x = g.is_a[nodes].astype(float)
            for m in methods:
                est = hansen_hurwitz_mean(x, _fit(m, g, trace, nodes, pk_walk, rng))
                errs[m][rep] = (est - truth) / truth
        for m in methods:
            out["errors"][(si, m)] = errs[m]
    return out


def _summarise_errors(rel_errors: list[np.ndarray], level_z: float = 1.959963984540054) -> dict:
    """Relative error summary from per-network arrays of relative errors."""
    e = np.concatenate(rel_errors)
    sq = e ** 2
    mse = float(sq.mean())
    per_net = np.array([np.mean(x ** 2) for x in rel_errors])
    if len(per_net) >= 2:
        mse_se = float(per_net.std(ddof=1) / math.sqrt(len(per_net)))
    else:
        mse_se = float(sq.std(ddof=1) / math.sqrt(len(sq))) if len(sq) > 1 else float("nan")
    lo = math.sqrt(max(mse - level_z * mse_se, 0.0))
    hi = math.sqrt(mse + level_z * mse_se)
    return {"estimates": len(e), "rel_mean_error": math.sqrt(mse),
            "rel_error_ci_low": lo, "rel_error_ci_high": hi,
            "rel_bias": float(e.mean()), "rel_sd": float(e.std()),
            "rel_mse": mse, "rel_mse_se": mse_se,
            "rel_median_abs_error": float(np.median(np.abs(e)))}


def _error_study(spec: ExperimentSpec, threads: int = 1) -> tuple[list[dict], list[dict]]:
    cells, skipped = _feasible(net_cells(spec))
    samplers = sampler_cells(spec)
    tasks = [(spec, c, net, samplers) for c in cells for net in range(spec.networks)]
    results = _map(_error_unit, tasks, threads)
    rows = []
    for ci_, cell in enumerate(cells):
        units = results[ci_ * spec.networks:(ci_ + 1) * spec.networks]
        truth = float(np.mean([u["truth"] for u in units]))
        giant = float(np.mean([u["giant"] for u in units]))
        for si, sc in enumerate(samplers):
            for m in sc.inclusion_methods(spec.inclusion):
                summary = _summarise_errors([u["errors"][(si, m)] for u in units])
                rows.append({"experiment": spec.experiment.value, **cell.columns(),
                             **sc.columns(), "inclusion": m,
                             "networks": spec.networks,
                             "replicates_per_network": spec.replicates_per_network,
                             "master_seed": spec.master_seed,
                             "true_proportion": truth, "giant_fraction": giant,
                             **summary})
    return rows, skipped


def run_error_curve(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    """Relative mean error per (network cell, sampler, size, inclusion model)."""
    return _error_study(spec, threads)[0]


def run_decomposition(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    """Same grid as :func:`run_error_curve`; rows carry relative bias and SD
    with ``rel_mean_error**2 == rel_bias**2 + rel_sd**2``."""
    return _error_study(spec, threads)[0]


def run_method_comparison(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    return _error_study(spec, threads)[0]


def run_population_sweep(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    """Relative standard error per population size and inclusion model."""
    return _error_study(spec, threads)[0]


def population_table(rows: list[dict]) -> list[dict]:
    """Pivot sweep rows into one row per inclusion model, one column per population."""
    table: dict[str, dict] = {}
    for r in rows:
        key = f"{r['sampler']}/{r['inclusion']}"
        t = table.setdefault(key, {"method": key})
        t[str(r["population"])] = r["rel_mean_error"]
    return list(table.values())


# ---------------------------------------------------------------- coverage

def _coverage_unit(task) -> list[dict]:
    spec, cell, case_index, proportion, net, sampler = task
    code = _CODES[spec.experiment]
    g = _network(spec, cell, net, case_index)
    truth = float(g.is_a.mean())
    config = replace(sampler, proportion=proportion).config(g.num_nodes)
    out = []
    for rep in range(spec.replicates_per_network):
        trace = run_sampler(g, config, stream(spec.master_seed, code, case_index, net, rep, 0))
        nodes = trace.estimation_nodes()
        for mi, method in enumerate(spec.ci_methods):
            rng = stream(spec.master_seed, code, case_index, net, rep, mi + 1)
            method = CiMethod(method)
            if method is CiMethod.SALGANIK:
                model = fit_inclusion("kurant-simple", g.degrees[nodes], g.num_nodes)
                res = salganik_ci(trace, g, category_a, model, spec.resamples, spec.level, rng)
            elif method is CiMethod.GILE_SS:
                res = gile_ss_ci(trace, g, category_a, g.num_nodes, spec.resamples, spec.level, rng)
            elif method is CiMethod.FAST:
                res = fast_ci(trace, g, category_a, g.num_nodes, spec.resamples, spec.level, rng)
            else:
                res = naive_ci(g.is_a[nodes].astype(float), spec.level)
            out.append({"method": method.value, "covers": res.covers(truth), "se": res.se,
                        "width": res.width, "flagged": bool(res.flags)})
    return out


def run_coverage_study(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    """Coverage probability and mean standard error per (case, CI method)."""
    base = net_cells(spec)[0]
    s = spec.sampler
    sampler = SamplerCell(SamplerKind(s["kind"][0]).value, int(s.get("coupons_n", [3])[0]),
                          bool(s.get("with_replacement", [False])[0]), None, None,
                          float(s.get("fire_prob", [0.7])[0]))
    tasks, cells = [], []
    for ci_, case in enumerate(spec.cases):
        cell = replace(base, index=0, homophily=float(case["homophily"]),
                       activity=float(case["activity"]))
        cells.append(cell)
        for net in range(spec.networks):
            tasks.append((spec, cell, ci_, float(case["proportion"]), net, sampler))
    results = _map(_coverage_unit, tasks, threads)
    rows = []
    for ci_, case in enumerate(spec.cases):
        units = results[ci_ * spec.networks:(ci_ + 1) * spec.networks]
        records = [r for u in units for r in u]
        for method in spec.ci_methods:
            rec = [r for r in records if r["method"] == CiMethod(method).value]
            cov = np.array([r["covers"] for r in rec], dtype=float)
            rows.append({"experiment": spec.experiment.value, "case": case["case"],
                         **cells[ci_].columns(), "proportion": float(case["proportion"]),
                         "sampler": sampler.label, "ci_method": CiMethod(method).value,
                         "level": spec.level, "resamples": spec.resamples,
                         "networks": spec.networks,
                         "replicates_per_network": spec.replicates_per_network,
                         "master_seed": spec.master_seed, "trials": len(rec),
                         "coverage": float(cov.mean()),
                         "coverage_mc_se": float(cov.std() / math.sqrt(len(cov))),
                         "mean_sd": float(np.mean([r["se"] for r in rec])),
                         "mean_width": float(np.mean([r["width"] for r in rec])),
                         "flagged_fraction": float(np.mean([r["flagged"] for r in rec]))})
    return rows


def coverage_table(rows: list[dict]) -> list[dict]:
    """One row per case with a CP and SD column per CI method."""
    table: dict[str, dict] = {}
    for r in rows:
        t = table.setdefault(r["case"], {"case": r["case"]})
        t[f"cp_{r['ci_method']}"] = r["coverage"]
        t[f"sd_{r['ci_method']}"] = r["mean_sd"]
    return list(table.values())


# ---------------------------------------------------------------- anova

def _anova_unit(task) -> np.ndarray:
    spec, cell, rep, net, sampler = task
    code = _CODES[spec.experiment]
    g = _network(spec, cell, net, rep)
    config = sampler.config(g.num_nodes)
    method = spec.inclusion[0]
    pk_walk = spec.pk_walk_length or g.num_nodes
    ests = np.empty(spec.replicates_per_network)
    for r in range(spec.replicates_per_network):
        rng = stream(spec.master_seed, code, rep, cell.index, net, r)
        trace = run_sampler(g, config, rng)
        nodes = trace.estimation_nodes()
        ests[r] = hansen_hurwitz_mean(g.is_a[nodes].astype(float),
                                      _fit(method, g, trace, nodes, pk_walk, rng))
    return ests


def run_anova(spec: ExperimentSpec, threads: int = 1) -> list[AnovaResult]:
    """One-way ANOVA of estimates grouped by network, once per repetition."""
    cell = net_cells(spec)[0]
    sampler = sampler_cells(spec)[0]
    tasks = [(spec, cell, rep, net, sampler)
             for rep in range(spec.repetitions) for net in range(spec.networks)]
    groups = _map(_anova_unit, tasks, threads)
    return [one_way_anova(groups[rep * spec.networks:(rep + 1) * spec.networks])
            for rep in range(spec.repetitions)]


def anova_rows(spec: ExperimentSpec, results: list[AnovaResult]) -> list[dict]:
    cell = net_cells(spec)[0]
    sampler = sampler_cells(spec)[0]
    return [{"experiment": spec.experiment.value, "repetition": i, **cell.columns(),
             **sampler.columns(), "inclusion": spec.inclusion[0],
             "networks": spec.networks,
             "replicates_per_network": spec.replicates_per_network,
             "master_seed": spec.master_seed, "f_statistic": r.f_statistic,
             "df_between": r.df_between, "df_within": r.df_within,
             "right_tail_p": r.right_tail_p}
            for i, r in enumerate(results)]


# ---------------------------------------------------------------- correlation

def _correlation_unit(task) -> dict:
    spec, cell, net, samplers = task
    code = _CODES[spec.experiment]
    g = _network(spec, cell, net)
    pk_walk = spec.pk_walk_length or g.num_nodes
    out = {}
    for si, sc in enumerate(samplers):
        config = sc.config(g.num_nodes)
        vals = []
        for rep in range(spec.replicates_per_network):
            rng = stream(spec.master_seed, code, cell.index, net, si, rep)
            trace = run_sampler(g, config, rng)
            nodes = trace.estimation_nodes()
            degrees = g.degrees[nodes]
            pk = estimate_pk_rw(srw(g, None, pk_walk, rng), g)
            gile = fit_inclusion("gile-ss", degrees, g.num_nodes, rng=rng).pi(degrees)
            direct = fit_inclusion("kurant", degrees, g.num_nodes, pk=pk).pi(degrees)
            try:
                vals.append(correlation(gile, direct))
            except ValueError:
                vals.append(float("nan"))
        out[si] = vals
    return out


def run_correlation_study(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    """Pearson correlation over sampled nodes between the successive-sampling
    and stub-activation inclusion estimates, per network cell and proportion."""
    cells, _ = _feasible(net_cells(spec))
    samplers = sampler_cells(spec)
    tasks = [(spec, c, net, samplers) for c in cells for net in range(spec.networks)]
    results = _map(_correlation_unit, tasks, threads)
    rows = []
    for ci_, cell in enumerate(cells):
        units = results[ci_ * spec.networks:(ci_ + 1) * spec.networks]
        for si, sc in enumerate(samplers):
            vals = np.array([v for u in units for v in u[si]])
            ok = vals[~np.isnan(vals)]
            rows.append({"experiment": spec.experiment.value, **cell.columns(), **sc.columns(),
                         "networks": spec.networks,
                         "replicates_per_network": spec.replicates_per_network,
                         "master_seed": spec.master_seed, "samples": len(vals),
                         "degenerate": int(len(vals) - len(ok)),
                         "mean_correlation": float(ok.mean()) if len(ok) else float("nan"),
                         "min_correlation": float(ok.min()) if len(ok) else float("nan"),
                         "max_correlation": float(ok.max()) if len(ok) else float("nan")})
    return rows


# ---------------------------------------------------------------- output

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(rows: list[dict], path: str | Path) -> Path:
    if not rows:
        raise ValueError("no rows to write")
    header: list[str] = []
    for r in rows:
        header.extend(k for k in r if k not in header)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(r.get(k, "")) for k in header])
    return path


def read_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _group(rows: Iterable[dict], keys: tuple[str, ...]) -> dict[tuple, list[dict]]:
    out: dict[tuple, list[dict]] = {}
    for r in rows:
        out.setdefault(tuple(r[k] for k in keys), []).append(r)
    return out


def _x(r: dict) -> float:
    if r["proportion"] != "":
        return float(r["proportion"])
    return float(r["target_size"]) / float(r["population"])


def emit_plots(rows: list[dict], kind: ExperimentKind, out_dir: str | Path) -> list[Path]:
    """Render the SVG plot for an error-study table."""
    out_dir = Path(out_dir)
    kind = ExperimentKind(kind)
    if not rows:
        raise ValueError("empty table")
    if kind is ExperimentKind.POPULATION_SWEEP:
        series: dict[str, list] = {}
        for r in rows:
            series.setdefault(r["inclusion"], []).append((float(r["population"]),
                                                          float(r["rel_mean_error"])))
        panel = Panel("relative standard error vs population", series,
                      xlabel="population", ylabel="relative standard error")
        return [emit_plot([panel], out_dir / "population_sweep.svg")]
    if kind not in (ExperimentKind.ERROR_CURVE, ExperimentKind.ERROR_DECOMPOSITION,
                    ExperimentKind.METHOD_COMPARISON):
        return []
    panels = []
    for (pop, h, a), group in _group(rows, ("population", "homophily", "activity")).items():
        series = {}
        for r in group:
            label = r["sampler"] if r["inclusion"] == "stationary" else f"{r['sampler']}/{r['inclusion']}"
            if kind is ExperimentKind.ERROR_DECOMPOSITION:
                series.setdefault(f"{label} |bias|", []).append((_x(r), abs(float(r["rel_bias"]))))
                series.setdefault(f"{label} sd", []).append((_x(r), float(r["rel_sd"])))
            else:
                series.setdefault(label, []).append((_x(r), float(r["rel_mean_error"])))
        ylabel = "relative bias / sd" if kind is ExperimentKind.ERROR_DECOMPOSITION else "relative mean error"
        panels.append(Panel(f"N={pop} h={h} a={a}", series, ylabel=ylabel))
    name = {ExperimentKind.ERROR_CURVE: "error_curve.svg",
            ExperimentKind.ERROR_DECOMPOSITION: "decomposition.svg",
            ExperimentKind.METHOD_COMPARISON: "method_comparison.svg"}[kind]
    return [emit_plot(panels, out_dir / name)]


_FILE_STEM = {
    ExperimentKind.ERROR_CURVE: "error_curve",
    ExperimentKind.ERROR_DECOMPOSITION: "decomposition",
    ExperimentKind.METHOD_COMPARISON: "method_comparison",
    ExperimentKind.POPULATION_SWEEP: "population_sweep",
    ExperimentKind.COVERAGE_STUDY: "coverage",
    ExperimentKind.ANOVA: "anova",
    ExperimentKind.CORRELATION_STUDY: "correlation",
}


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None, threads: int = 1,
                   full_scale: bool = False, plots: bool = True) -> dict:
    """Run ``spec`` and write CSV tables, SVG plots and ``manifest.json``.

    Returns the manifest. Only the manifest carries wall-clock information,
    so the CSV outputs are byte-identical across runs with the same spec.
    """
    if full_scale:
        spec = spec.full_scale()
    out = Path(out_dir if out_dir is not None else spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = _FILE_STEM[spec.experiment]
    started = time.time()
    files: list[Path] = []
    skipped: list[dict] = []
    summary: dict = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if spec.experiment in (ExperimentKind.ERROR_CURVE, ExperimentKind.ERROR_DECOMPOSITION,
                               ExperimentKind.METHOD_COMPARISON, ExperimentKind.POPULATION_SWEEP):
            rows, skipped = _error_study(spec, threads)
            if rows:
                files.append(write_csv(rows, out / f"{stem}.csv"))
                if spec.experiment is ExperimentKind.POPULATION_SWEEP:
                    files.append(write_csv(population_table(rows), out / f"{stem}_table.csv"))
                if plots:
                    files.extend(emit_plots(read_csv(files[0]), spec.experiment, out))
        elif spec.experiment is ExperimentKind.COVERAGE_STUDY:
            rows = run_coverage_study(spec, threads)
            files.append(write_csv(rows, out / f"{stem}.csv"))
            files.append(write_csv(coverage_table(rows), out / f"{stem}_table.csv"))
        elif spec.experiment is ExperimentKind.ANOVA:
            results = run_anova(spec, threads)
            files.append(write_csv(anova_rows(spec, results), out / f"{stem}.csv"))
            summary["not_significant_fraction"] = float(
                np.mean([r.right_tail_p > 0.05 for r in results]))
        else:
            rows = run_correlation_study(spec, threads)
            files.append(write_csv(rows, out / f"{stem}.csv"))
    manifest = {
        "experiment": spec.experiment.value,
        "master_seed": spec.master_seed,
        "spec": spec.to_dict(),
        "full_scale": full_scale,
        "threads": threads,
        "outputs": [p.name for p in files],
        "skipped_cells": skipped,
        "warnings": [str(w.message) for w in caught],
        "summary": summary,
        "versions": {"netsampling": __version__, "python": platform.python_version(),
                     "numpy": np.__version__},
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    for w in caught:
        warnings.warn(w.message, w.category)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
