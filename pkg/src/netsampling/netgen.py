"""Two-category random networks with controlled degree, homophily and activity.

The generator is a two-block stochastic block model. Block sizes come from
the category proportion, per-category expected degrees from the mean degree
and the activity ratio ``a = d_A / d_B``. The expected number of cross-category
edges is a homophily-free baseline divided by the homophily ratio ``h``;
within-block edge counts absorb the remaining degree so both per-category
expected degrees are preserved.

Two baselines are supported:

``"degree"`` (default)
    stubs pair up in proportion to degree, giving ``S_A S_B / (S_A + S_B)``
    cross edges for stub totals ``S_A``, ``S_B``.
``"pairs"``
    every node pair equally likely, giving ``E n_A n_B / C(N, 2)`` cross
    edges for ``E`` edges. This is the baseline of
    ``NetworkSummary.measured_homophily``.

The two coincide when ``a = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph


HOMOPHILY_BASES = ("degree", "pairs")


class InfeasibleParams(ValueError):
    """The requested (size, degree, homophily, activity) cannot be realised."""


@dataclass(frozen=True)
class NetgenParams:
    population: int
    prop_a: float
    mean_degree: float
    homophily: float = 1.0
    activity: float = 1.0
    rng_seed: int = 0
    homophily_basis: str = "degree"

    def __post_init__(self):
        if self.homophily_basis not in HOMOPHILY_BASES:
            raise ValueError(f"homophily_basis must be one of {HOMOPHILY_BASES}")

    @property
    def n_a(self) -> int:
        return int(round(self.prop_a * self.population))


@dataclass(frozen=True)
class BlockPlan:
    """Edge probabilities of the two-block model plus what was targeted."""

    n_a: int
    n_b: int
    degree_a: float
    degree_b: float
    cross_edges: float
    p_aa: float
    p_bb: float
    p_ab: float
    clamped: bool = False


@dataclass(frozen=True)
class NetworkSummary:
    edge_count: int
    measured_mean_degree: float
    measured_homophily: float  # inf when there are no cross ties, nan when a category is empty
    measured_activity: float  # nan when a category is empty or B has zero degree
    cross_ties: int
    measured_homophily_degree: float = float("nan")  # degree-proportional baseline

    @property
    def homophily_defined(self) -> bool:
        return not math.isnan(self.measured_homophily)


def _pairs(n: int) -> float:
    return n * (n - 1) / 2.0


def plan_blocks(params: NetgenParams, clamp: bool = False) -> BlockPlan:
    """Solve the block edge probabilities for ``params``.

    With ``clamp`` the cross-edge target and per-category degrees are pulled
    into the feasible region instead of raising; ``BlockPlan.clamped`` records
    whether that happened.
    """
    N = params.population
    if N < 2:
        raise InfeasibleParams("population must be at least 2")
    if not 0.0 <= params.prop_a <= 1.0:
        raise InfeasibleParams("prop_a must lie in [0, 1]")
    if not params.mean_degree > 0:
        raise InfeasibleParams("mean degree must be positive")
    if not (params.homophily > 0 and params.activity > 0):
        raise InfeasibleParams("homophily and activity ratios must be positive")

    n_a = params.n_a
    n_b = N - n_a
    clamped = False
    if n_a == 0 or n_b == 0:
        d = params.mean_degree
        if d > N - 1:
            raise InfeasibleParams(f"mean degree {d} exceeds {N - 1}")
        p = d / (N - 1)
        return BlockPlan(n_a, n_b, d if n_a else 0.0, d if n_b else 0.0, 0.0,
                         p if n_a else 0.0, p if n_b else 0.0, 0.0)

    d_b = params.mean_degree * N / (n_a * params.activity + n_b)
    d_a = params.activity * d_b
    if d_a > N - 1 or d_b > N - 1:
        if not clamp:
            raise InfeasibleParams(
                f"per-category degrees ({d_a:.3g}, {d_b:.3g}) exceed {N - 1}")
        d_a, d_b = min(d_a, N - 1.0), min(d_b, N - 1.0)
        clamped = True

    s_a, s_b = n_a * d_a, n_b * d_b
    if params.homophily_basis == "pairs":
        baseline = (s_a + s_b) / 2.0 * n_a * n_b / _pairs(N)
    else:
        baseline = s_a * s_b / (s_a + s_b)
    cross = baseline / params.homophily

    # feasible cross counts: within-block counts non-negative and every
    # block probability at most one
    lo = max(0.0, s_a - 2 * _pairs(n_a), s_b - 2 * _pairs(n_b))
    hi = min(s_a, s_b, float(n_a * n_b))
    if lo > hi:
        raise InfeasibleParams("no cross-edge count satisfies both degree targets")
    if not lo - 1e-9 <= cross <= hi + 1e-9:
        if not clamp:
            raise InfeasibleParams(
                f"homophily {params.homophily} needs {cross:.1f} cross edges; "
                f"feasible range is [{lo:.1f}, {hi:.1f}]")
        cross = min(max(cross, lo), hi)
        clamped = True
    cross = min(max(cross, lo), hi)

    e_aa = (s_a - cross) / 2.0
    e_bb = (s_b - cross) / 2.0
    p_aa = e_aa / _pairs(n_a) if n_a > 1 else 0.0
    p_bb = e_bb / _pairs(n_b) if n_b > 1 else 0.0
    p_ab = cross / (n_a * n_b)
    return BlockPlan(n_a, n_b, d_a, d_b, cross,
                     min(p_aa, 1.0), min(p_bb, 1.0), min(p_ab, 1.0), clamped)


def _within_block(rng: np.random.Generator, nodes: np.ndarray, p: float) -> np.ndarray:
    n = len(nodes)
    if n < 2 or p <= 0:
        return np.empty((0, 2), dtype=np.int64)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return np.column_stack([nodes[iu[keep]], nodes[ju[keep]]])


def _between_blocks(rng: np.random.Generator, a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    if len(a) == 0 or len(b) == 0 or p <= 0:
        return np.empty((0, 2), dtype=np.int64)
    keep = rng.random((len(a), len(b))) < p
    ia, ib = np.nonzero(keep)
    return np.column_stack([a[ia], b[ib]])


def generate_from_plan(plan: BlockPlan, rng: np.random.Generator) -> Graph:
    N = plan.n_a + plan.n_b
    is_a = np.zeros(N, dtype=bool)
    is_a[rng.permutation(N)[:plan.n_a]] = True
    a_nodes = np.flatnonzero(is_a)
    b_nodes = np.flatnonzero(~is_a)
    edges = np.concatenate([
        _within_block(rng, a_nodes, plan.p_aa),
        _within_block(rng, b_nodes, plan.p_bb),
        _between_blocks(rng, a_nodes, b_nodes, plan.p_ab),
    ])
    return Graph.from_edges(N, edges, is_a)


def generate(params: NetgenParams, clamp: bool = False) -> Graph:
    """Draw one network; identical params (seed included) give identical graphs."""
    plan = plan_blocks(params, clamp=clamp)
    return generate_from_plan(plan, np.random.default_rng(params.rng_seed))


def measure_summary(g: Graph) -> NetworkSummary:
    N = g.num_nodes
    n_a = int(g.is_a.sum())
    n_b = N - n_a
    edges = g.edges()
    m = len(edges)
    cross = int(np.count_nonzero(g.is_a[edges[:, 0]] != g.is_a[edges[:, 1]])) if m else 0
    mean_deg = 2.0 * m / N if N else float("nan")
    if n_a == 0 or n_b == 0 or N < 2:
        return NetworkSummary(m, mean_deg, float("nan"), float("nan"), cross)
    expected_cross = m * n_a * n_b / _pairs(N)
    homophily = expected_cross / cross if cross else float("inf")
    s_a = float(g.degrees[g.is_a].sum())
    s_b = float(g.degrees[~g.is_a].sum())
    degree_null = s_a * s_b / (s_a + s_b) if s_a + s_b else 0.0
    homophily_degree = degree_null / cross if cross else float("inf")
    deg_a = s_a / n_a
    deg_b = s_b / n_b
    activity = float(deg_a / deg_b) if deg_b > 0 else float("nan")
    return NetworkSummary(m, mean_deg, float(homophily), activity, cross, float(homophily_degree))
