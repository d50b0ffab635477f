"""Confidence intervals for chain-referral samples.

``naive_ci`` is the textbook t-interval. The three bootstrap variants differ
in where the resamples come from:

* ``salganik_ci`` re-chains the observed sample: after a category-i node the
  next draw is uniform over observed nodes recruited by category i.
* ``gile_ss_ci`` builds a synthetic degree/category population from the
  sample and re-runs the recruitment tree over it with category-mixing
  weights and size-biased draws without replacement.
* ``fast_ci`` estimates mean degree, homophily and activity from the sample,
  generates one network with them, and re-runs the original sampler on it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from scipy import stats

from .estimators import Attribute, hansen_hurwitz_mean
from .graph import Graph
from .inclusion import (
    InclusionMethod, InclusionModel, _cover_sample, fit_inclusion, gile_ss, largest_remainder,
)
from .netgen import NetgenParams, generate_from_plan, plan_blocks
from .samplers import NO_REFERRER, SampleTrace, SamplerConfig, SamplerKind, as_rng, run_sampler

DEFAULT_RESAMPLES = 1000


class CiMethod(str, enum.Enum):
    NAIVE = "naive"
    SALGANIK = "salganik"
    GILE_SS = "gile-ss"
    FAST = "fast"


@dataclass(frozen=True)
class IntervalResult:
    """``point`` is the interval centre; ``estimate`` the original-sample value."""

    point: float
    se: float
    lower: float
    upper: float
    level: float
    method: CiMethod
    resamples: int
    estimate: float = float("nan")
    flags: tuple[str, ...] = ()

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {"point": self.point, "se": self.se, "lower": self.lower, "upper": self.upper,
                "level": self.level, "method": self.method.value, "resamples": self.resamples,
                "estimate": self.estimate, "flags": list(self.flags)}


def _z(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    return NormalDist().inv_cdf(0.5 + level / 2.0)


def _normal_interval(center: float, se: float, level: float, method: CiMethod,
                     resamples: int, estimate: float, flags) -> IntervalResult:
    half = _z(level) * se
    return IntervalResult(center, se, center - half, center + half, level, method, resamples,
                          estimate, tuple(flags))


def _check_resamples(N: int) -> None:
    if N < 2:
        raise ValueError("need at least two resamples for a standard error")


def _row_hh(x: np.ndarray, pi: np.ndarray) -> np.ndarray:
    w = 1.0 / pi
    return np.sum(w * x, axis=1) / np.sum(w, axis=1)


def naive_ci(sample, level: float = 0.95) -> IntervalResult:
    x = np.asarray(sample, dtype=float)
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two observations")
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n))
    half = float(stats.t.ppf(0.5 + level / 2.0, n - 1)) * se
    return IntervalResult(mean, se, mean - half, mean + half, level, CiMethod.NAIVE, 0, mean)


def _records(trace: SampleTrace) -> np.ndarray:
    """Indices of the records used for estimation."""
    if trace.with_replacement:
        return np.arange(len(trace))
    return np.flatnonzero(~trace.revisits)


def salganik_ci(trace: SampleTrace, g: Graph, attribute: Attribute, model: InclusionModel,
                N: int = DEFAULT_RESAMPLES, level: float = 0.95, rng=None) -> IntervalResult:
    """Category-Markov bootstrap over the observed sample.

    A seed counts as recruited by its own category. If one category has no
    recruits, steps from it fall back to all sampled nodes (flagged).
    """
    _check_resamples(N)
    rng = as_rng(rng)
    idx = _records(trace)
    nodes = trace.nodes[idx]
    deg = g.degrees[nodes]
    cat = g.is_a[nodes]
    x = attribute(cat, deg).astype(float)
    pi = model.pi(deg)
    estimate = hansen_hurwitz_mean(x, pi)
    refs = trace.referrers[idx]
    ref_cat = np.where(refs == NO_REFERRER, cat, g.is_a[np.where(refs == NO_REFERRER, 0, refs)])

    n = len(idx)
    flags = []
    pools = {}
    for c in (False, True):
        pool = np.flatnonzero(ref_cat == c)
        if len(pool) == 0 and np.any(cat == c):
            flags.append(f"empty-referral-pool-{'A' if c else 'B'}")
        pools[c] = pool if len(pool) else np.arange(n)

    picks = np.empty((N, n), dtype=np.int64)
    picks[:, 0] = rng.integers(n, size=N)
    for s in range(1, n):
        last_a = cat[picks[:, s - 1]]
        u = rng.random(N)
        from_a = pools[True][(u * len(pools[True])).astype(np.int64)]
        from_b = pools[False][(u * len(pools[False])).astype(np.int64)]
        picks[:, s] = np.where(last_a, from_a, from_b)
    ests = _row_hh(x[picks], pi[picks])
    return _normal_interval(float(ests.mean()), float(ests.std(ddof=1)), level,
                            CiMethod.SALGANIK, N, estimate, flags)


@dataclass(frozen=True)
class GileCiModel:
    """Synthetic population for the successive-sampling bootstrap.

    ``counts[i]`` maps degree to node count for category i (0 = B, 1 = A);
    ``H0[i][j]`` are the link counts between categories.
    """

    counts: tuple[dict[int, int], dict[int, int]]
    H0: np.ndarray
    r_hat: tuple[float, float]
    d_bar: tuple[float, float]
    flags: tuple[str, ...] = field(default=())


def build_gile_model(trace: SampleTrace, g: Graph, model: InclusionModel,
                     population_size: int) -> GileCiModel:
    idx = _records(trace)
    nodes = trace.nodes[idx]
    deg = np.maximum(g.degrees[nodes], 1)
    cat = g.is_a[nodes].astype(np.int64)
    if not (cat.any() and (1 - cat).any()):
        raise ValueError("both categories must appear in the sample")
    w = 1.0 / model.pi(deg)

    classes, inverse = np.unique(np.column_stack([cat, deg]), axis=0, return_inverse=True)
    inverse = inverse.ravel()
    share = np.bincount(inverse, weights=w)
    sampled = np.bincount(inverse)
    counts_arr = _cover_sample(largest_remainder(share, population_size), sampled)
    counts: tuple[dict[int, int], dict[int, int]] = ({}, {})
    for (c, k), m in zip(classes.tolist(), counts_arr.tolist()):
        counts[c][k] = m

    flags = []
    pairs = trace.recruitment_pairs()
    rec_a = g.is_a[pairs[:, 0]] if len(pairs) else np.empty(0, bool)
    tgt_a = g.is_a[pairs[:, 1]] if len(pairs) else np.empty(0, bool)
    stubs = [sum(k * m for k, m in counts[c].items()) for c in (0, 1)]
    r_hat = []
    for c in (0, 1):
        from_c = rec_a == bool(c)
        if from_c.any():
            r_hat.append(float(np.mean(tgt_a[from_c])))
        else:
            flags.append(f"no-links-from-{'A' if c else 'B'}")
            r_hat.append(stubs[1] / (stubs[0] + stubs[1]))
    r_b, r_a = r_hat
    nodes_per = [sum(counts[c].values()) for c in (0, 1)]
    d_bar = [stubs[c] / nodes_per[c] for c in (0, 1)]
    # d_i * sum_k N_ik equals the stub total of category i
    h_aa = stubs[1] * r_a
    h_bb = stubs[0] * (1.0 - r_b)
    h_ab = (stubs[1] * (1.0 - r_a) + stubs[0] * r_b) / 2.0
    H0 = np.array([[h_bb, h_ab], [h_ab, h_aa]])
    if not np.all(np.isfinite(H0)) or np.any(H0 < 0):
        raise ValueError(f"invalid link counts {H0.tolist()}")
    return GileCiModel(counts, H0, (r_b, r_a), (d_bar[0], d_bar[1]), tuple(flags))


def _tree_parents(trace: SampleTrace, idx: np.ndarray) -> np.ndarray:
    """Parent position of each estimation record (-1 for chain starts)."""
    pos = {int(v): i for i, v in enumerate(trace.nodes[idx].tolist())}
    parents = np.full(len(idx), -1, dtype=np.int64)
    for i, ref in enumerate(trace.referrers[idx].tolist()):
        if ref != NO_REFERRER and ref in pos and pos[ref] < i:
            parents[i] = pos[ref]
    return parents


def gile_ss_ci(trace: SampleTrace, g: Graph, attribute: Attribute, population_size: int,
               N: int = DEFAULT_RESAMPLES, level: float = 0.95, rng=None,
               model: InclusionModel | None = None, **gile_kwargs) -> IntervalResult:
    """Successive-sampling bootstrap on a synthetic population.

    Resamples follow the observed recruitment tree. From a category-i
    recruiter the recruit's category j is drawn with weight
    ``H0(i, j) * (unsampled share of j)``, then the node is the next
    size-biased draw without replacement among category-j nodes. Chain
    starts pick a category in proportion to its unsampled nodes.
    """
    _check_resamples(N)
    rng = as_rng(rng)
    idx = _records(trace)
    nodes = trace.nodes[idx]
    n = len(idx)
    if model is None:
        model = gile_ss(g.degrees[nodes], population_size, rng=rng, **gile_kwargs)
    estimate = hansen_hurwitz_mean(attribute(g.is_a[nodes], g.degrees[nodes]).astype(float),
                                   model.pi(g.degrees[nodes]))
    gm = build_gile_model(trace, g, model, population_size)
    parents = _tree_parents(trace, idx)

    sizes = [sum(gm.counts[c].values()) for c in (0, 1)]
    orders = []
    for c in (0, 1):
        ks = np.repeat(np.array(list(gm.counts[c].keys()), dtype=float),
                       list(gm.counts[c].values()))
        take = min(n, len(ks))
        keys = rng.standard_exponential((N, len(ks))) / ks
        part = np.argpartition(keys, take - 1, axis=1)[:, :take] if take < len(ks) else \
            np.tile(np.arange(len(ks)), (N, 1))
        part_keys = np.take_along_axis(keys, part, axis=1)
        ordered = np.take_along_axis(part, np.argsort(part_keys, axis=1), axis=1)
        orders.append(ks[ordered].astype(np.int64))

    rows = np.arange(N)
    used = np.zeros((N, 2), dtype=np.int64)
    cats = np.zeros((N, n), dtype=np.int64)
    degs = np.zeros((N, n), dtype=np.int64)
    size_arr = np.array(sizes, dtype=float)
    for s in range(n):
        remaining = (size_arr - used) / size_arr
        if parents[s] < 0:
            weight = remaining * size_arr
        else:
            weight = gm.H0[cats[:, parents[s]]] * remaining
        total = weight.sum(axis=1)
        p_a = np.divide(weight[:, 1], total, out=np.full(N, 0.5), where=total > 0)
        choose_a = rng.random(N) < p_a
        # never draw from an exhausted category
        choose_a = np.where(used[:, 1] >= min(sizes[1], orders[1].shape[1]), False, choose_a)
        choose_a = np.where(used[:, 0] >= min(sizes[0], orders[0].shape[1]), True, choose_a)
        c = choose_a.astype(np.int64)
        ptr = used[rows, c]
        deg_a = orders[1][rows, np.minimum(ptr, orders[1].shape[1] - 1)]
        deg_b = orders[0][rows, np.minimum(ptr, orders[0].shape[1] - 1)]
        degs[:, s] = np.where(choose_a, deg_a, deg_b)
        cats[:, s] = c
        used[rows, c] += 1

    x = attribute(cats.astype(bool), degs).astype(float)
    ests = _row_hh(x, model.pi(degs))
    return _normal_interval(float(ests.mean()), float(ests.std(ddof=1)), level,
                            CiMethod.GILE_SS, N, estimate, gm.flags)


@dataclass(frozen=True)
class NetworkAttributeEstimates:
    d_bar: float
    h_hat: float  # nan when no cross-category link was sampled
    a_hat: float  # nan when a category is missing from the sample
    prop_a: float
    C: int
    C_b: int
    d_bar_a: float
    d_bar_b: float

    @property
    def homophily_defined(self) -> bool:
        return not math.isnan(self.h_hat)

    @property
    def activity_defined(self) -> bool:
        return not math.isnan(self.a_hat)


def estimate_network_attributes(trace: SampleTrace, g: Graph, model: InclusionModel,
                                population_size: int) -> NetworkAttributeEstimates:
    """Mean degree, homophily and activity from one sample.

    Links are the sampled referrals, taken as equally likely to be observed.
    Category sizes and degrees are inverse-probability weighted.
    """
    idx = _records(trace)
    nodes = trace.nodes[idx]
    deg = g.degrees[nodes].astype(float)
    is_a = g.is_a[nodes]
    pi = model.pi(g.degrees[nodes])
    prop_a = hansen_hurwitz_mean(is_a.astype(float), pi)
    d_bar = hansen_hurwitz_mean(deg, pi)
    d_a = hansen_hurwitz_mean(deg[is_a], pi[is_a]) if is_a.any() else float("nan")
    d_b = hansen_hurwitz_mean(deg[~is_a], pi[~is_a]) if (~is_a).any() else float("nan")
    a_hat = d_a / d_b if (is_a.any() and (~is_a).any() and d_b > 0) else float("nan")

    pairs = trace.recruitment_pairs() if not trace.with_replacement else trace.referral_pairs()
    C = len(pairs)
    C_b = int(np.count_nonzero(g.is_a[pairs[:, 0]] != g.is_a[pairs[:, 1]])) if C else 0
    V = population_size
    n_a = prop_a * V
    n_b = V - n_a
    if C_b > 0 and n_a > 0 and n_b > 0:
        h_hat = C * n_a * n_b / (C_b * V * (V - 1) / 2.0)
    else:
        h_hat = float("nan")
    return NetworkAttributeEstimates(d_bar, h_hat, a_hat, prop_a, C, C_b, d_a, d_b)


def fast_ci(trace: SampleTrace, g: Graph, attribute: Attribute, population_size: int,
            N: int = DEFAULT_RESAMPLES, level: float = 0.95, rng=None,
            inclusion: InclusionMethod | str = InclusionMethod.KURANT_SIMPLIFIED,
            max_homophily: float = 50.0) -> IntervalResult:
    """Simulate one network from the sample's estimated attributes, re-run the
    original sampler on it ``N`` times and use the spread of those estimates
    as the standard error around the original estimate."""
    _check_resamples(N)
    rng = as_rng(rng)
    inclusion = InclusionMethod(inclusion)
    config = trace.sampler or SamplerConfig(SamplerKind.RDS, int((~trace.revisits).sum()))
    idx = _records(trace)
    nodes = trace.nodes[idx]

    def fit(sample_nodes, graph, sub_rng):
        return fit_inclusion(inclusion, graph.degrees[sample_nodes], population_size, rng=sub_rng)

    model = fit(nodes, g, rng)
    estimate = hansen_hurwitz_mean(attribute(g.is_a[nodes], g.degrees[nodes]).astype(float),
                                   model.pi(g.degrees[nodes]))
    attrs = estimate_network_attributes(trace, g, model, population_size)

    flags = []
    h = attrs.h_hat
    if not attrs.homophily_defined:
        flags.append("homophily-undefined")
        h = max_homophily
    elif h > max_homophily:
        flags.append("homophily-clamped")
        h = max_homophily
    a = attrs.a_hat
    if not attrs.activity_defined or a <= 0:
        flags.append("activity-undefined")
        a = 1.0
    # the homophily estimate uses the equal-pair baseline, so generate on it
    params = NetgenParams(population_size, min(max(attrs.prop_a, 0.0), 1.0),
                          max(attrs.d_bar, 1e-9), h, a, homophily_basis="pairs")
    plan = plan_blocks(params, clamp=True)
    if plan.clamped:
        flags.append("netgen-clamped")
    sim = generate_from_plan(plan, rng)

    ests = np.empty(N)
    for i in range(N):
        sim_trace = run_sampler(sim, config, rng)
        sim_nodes = sim_trace.estimation_nodes()
        sim_model = fit(sim_nodes, sim, rng)
        ests[i] = hansen_hurwitz_mean(
            attribute(sim.is_a[sim_nodes], sim.degrees[sim_nodes]).astype(float),
            sim_model.pi(sim.degrees[sim_nodes]))
    return _normal_interval(estimate, float(ests.std(ddof=1)), level, CiMethod.FAST, N,
                            estimate, flags)
