"""Node, link, traversal and random-walk samplers producing :class:`SampleTrace`.

Every sampler is a pure function of ``(graph, parameters, rng)``. Inner loops
run on plain Python lists with a ``random.Random`` seeded from the numpy
generator, so a given numpy seed fixes the whole trace.
"""

from __future__ import annotations

import csv
import enum
import random
from bisect import bisect_right
from collections import deque
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .graph import Graph, GraphError

NO_REFERRER = -1


class SamplerKind(str, enum.Enum):
    UNIFORM_NODE = "uniform-node"
    UNIFORM_LINK = "uniform-link"
    BFS = "bfs"
    DFS = "dfs"
    FOREST_FIRE = "forest-fire"
    SNOWBALL_N = "snowball"
    SRW = "srw"
    MHRW = "mhrw"
    WRW = "wrw"
    RDS = "rds"


@dataclass(frozen=True)
class SamplerConfig:
    kind: SamplerKind
    target_size: int
    with_replacement: bool = False
    coupons_n: int = 3
    fire_prob: float = 0.7
    num_chains: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind(self.kind))
        if self.target_size < 0:
            raise ValueError("target_size must be non-negative")
        if self.coupons_n < 1:
            raise ValueError("coupons_n must be at least 1")
        if not 0 < self.fire_prob <= 1:
            raise ValueError("fire_prob must lie in (0, 1]")
        if self.num_chains < 1:
            raise ValueError("num_chains must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SamplerConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(frozen=True, eq=False)
class SampleTrace:
    """Ordered sampling record. ``referrers`` uses ``-1`` for "none"."""

    nodes: np.ndarray
    chains: np.ndarray
    referrers: np.ndarray
    revisits: np.ndarray
    sampler: SamplerConfig | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def with_replacement(self) -> bool:
        return bool(self.sampler and self.sampler.with_replacement)

    def distinct_nodes(self) -> np.ndarray:
        """First-visit order of every node that appears in the trace."""
        return self.nodes[~self.revisits]

    def estimation_nodes(self) -> np.ndarray:
        """Nodes fed to weighted estimators: all draws for with-replacement
        traces, first visits otherwise."""
        return self.nodes if self.with_replacement else self.distinct_nodes()

    def referral_pairs(self) -> np.ndarray:
        """``(referrer, node)`` rows for every record that has a referrer."""
        mask = self.referrers != NO_REFERRER
        return np.column_stack([self.referrers[mask], self.nodes[mask]])

    def recruitment_pairs(self) -> np.ndarray:
        """Referral pairs that recruited a node for the first time."""
        mask = (self.referrers != NO_REFERRER) & ~self.revisits
        return np.column_stack([self.referrers[mask], self.nodes[mask]])

    def equals(self, other: "SampleTrace") -> bool:
        return all(np.array_equal(a, b) for a, b in (
            (self.nodes, other.nodes), (self.chains, other.chains),
            (self.referrers, other.referrers), (self.revisits, other.revisits)))


class _Recorder:
    def __init__(self):
        self.nodes: list[int] = []
        self.chains: list[int] = []
        self.referrers: list[int] = []
        self.revisits: list[bool] = []

    def add(self, node: int, chain: int, referrer: int, revisit: bool) -> None:
        self.nodes.append(node)
        self.chains.append(chain)
        self.referrers.append(referrer)
        self.revisits.append(revisit)

    def build(self, config: SamplerConfig | None) -> SampleTrace:
        return SampleTrace(
            np.array(self.nodes, dtype=np.int64),
            np.array(self.chains, dtype=np.int64),
            np.array(self.referrers, dtype=np.int64),
            np.array(self.revisits, dtype=bool),
            config,
        )


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _py_random(rng: np.random.Generator) -> random.Random:
    return random.Random(int(rng.integers(0, 2**63 - 1)))


def default_seed_node(g: Graph, rng: np.random.Generator) -> int:
    """Uniform over non-isolated nodes (uniform over V if all are isolated)."""
    if g.num_nodes == 0:
        raise GraphError("cannot pick a seed in an empty graph")
    candidates = np.flatnonzero(g.degrees > 0)
    if len(candidates) == 0:
        return int(rng.integers(g.num_nodes))
    return int(candidates[rng.integers(len(candidates))])


def _restart_node(g: Graph, sampled: bytearray, near: int, r: random.Random) -> int | None:
    """Uniform unsampled node in ``near``'s component, else any unsampled node."""
    labels = g.component_labels
    same = [v for v in np.flatnonzero(labels == labels[near]).tolist() if not sampled[v]]
    if same:
        return same[int(r.random() * len(same))]
    rest = [v for v in range(g.num_nodes) if not sampled[v]]
    nonisolated = [v for v in rest if g.degrees[v] > 0]
    pool = nonisolated or rest
    if not pool:
        return None
    return pool[int(r.random() * len(pool))]


# -- baseline samplers -------------------------------------------------------

def uniform_node_sample(g: Graph, size: int, rng=None) -> SampleTrace:
    if size > g.num_nodes or size < 0:
        raise ValueError(f"cannot draw {size} of {g.num_nodes} nodes without replacement")
    rng = as_rng(rng)
    nodes = rng.choice(g.num_nodes, size=size, replace=False) if size else np.empty(0, np.int64)
    rec = _Recorder()
    for i, v in enumerate(np.asarray(nodes).tolist()):
        rec.add(v, i, NO_REFERRER, False)
    return rec.build(SamplerConfig(SamplerKind.UNIFORM_NODE, size))


def uniform_link_sample(g: Graph, num_links: int, rng=None) -> SampleTrace:
    """Sample links uniformly without replacement and keep both endpoints.

    Each link contributes its lower endpoint as a chain seed and the other
    endpoint referred by it; repeated nodes are flagged as revisits.
    """
    if num_links > g.edge_count or num_links < 0:
        raise ValueError(f"cannot draw {num_links} of {g.edge_count} links")
    rng = as_rng(rng)
    edges = g.edges()
    picked = rng.choice(len(edges), size=num_links, replace=False) if num_links else []
    seen: set[int] = set()
    rec = _Recorder()
    for chain, idx in enumerate(np.asarray(picked, dtype=np.int64).tolist()):
        u, v = edges[idx].tolist()
        rec.add(u, chain, NO_REFERRER, u in seen)
        seen.add(u)
        rec.add(v, chain, u, v in seen)
        seen.add(v)
    return rec.build(SamplerConfig(SamplerKind.UNIFORM_LINK, num_links, with_replacement=True))


# -- traversal samplers ------------------------------------------------------

def bfs(g: Graph, seed_node: int | None, target_size: int, rng=None) -> SampleTrace:
    """Breadth-first traversal in sorted-neighbor order; stops when the
    seed's component is exhausted."""
    rng = as_rng(rng)
    seed = default_seed_node(g, rng) if seed_node is None else g._check(seed_node)
    config = SamplerConfig(SamplerKind.BFS, target_size)
    rec = _Recorder()
    if target_size == 0:
        return rec.build(config)
    adj = g.adjacency
    sampled = bytearray(g.num_nodes)
    sampled[seed] = 1
    rec.add(seed, 0, NO_REFERRER, False)
    queue = deque([seed])
    count = 1
    while queue and count < target_size:
        u = queue.popleft()
        for w in adj[u]:
            if not sampled[w]:
                sampled[w] = 1
                rec.add(w, 0, u, False)
                queue.append(w)
                count += 1
                if count >= target_size:
                    break
    return rec.build(config)


def dfs(g: Graph, seed_node: int | None, target_size: int, rng=None) -> SampleTrace:
    """Randomised depth-first traversal.

    Steps to a uniformly chosen unvisited neighbour; at a dead end it backs up
    to the nearest visited node that still has an unvisited neighbour. When
    the whole component is visited it restarts on a fresh chain.
    """
    rng = as_rng(rng)
    if target_size > g.num_nodes:
        raise ValueError("target_size exceeds the number of nodes")
    seed = default_seed_node(g, rng) if seed_node is None else g._check(seed_node)
    config = SamplerConfig(SamplerKind.DFS, target_size)
    rec = _Recorder()
    if target_size == 0:
        return rec.build(config)
    r = _py_random(rng)
    adj = g.adjacency
    sampled = bytearray(g.num_nodes)
    chain = 0
    sampled[seed] = 1
    rec.add(seed, chain, NO_REFERRER, False)
    count = 1
    stack = [seed]
    while count < target_size:
        if not stack:
            nxt = _restart_node(g, sampled, rec.nodes[-1], r)
            chain += 1
            sampled[nxt] = 1
            rec.add(nxt, chain, NO_REFERRER, False)
            count += 1
            stack = [nxt]
            continue
        u = stack[-1]
        options = [w for w in adj[u] if not sampled[w]]
        if not options:
            stack.pop()
            continue
        w = options[int(r.random() * len(options))]
        sampled[w] = 1
        rec.add(w, chain, u, False)
        count += 1
        stack.append(w)
    return rec.build(config)


def forest_fire(g: Graph, seed_node: int | None, fire_prob: float, target_size: int,
                rng=None) -> SampleTrace:
    """BFS frontier where each unburnt neighbour catches fire with
    probability ``fire_prob``; a dead fire restarts on a fresh chain."""
    if not 0 < fire_prob <= 1:
        raise ValueError("fire_prob must lie in (0, 1]")
    if target_size > g.num_nodes:
        raise ValueError("target_size exceeds the number of nodes")
    rng = as_rng(rng)
    seed = default_seed_node(g, rng) if seed_node is None else g._check(seed_node)
    config = SamplerConfig(SamplerKind.FOREST_FIRE, target_size, fire_prob=fire_prob)
    rec = _Recorder()
    if target_size == 0:
        return rec.build(config)
    r = _py_random(rng)
    adj = g.adjacency
    sampled = bytearray(g.num_nodes)
    chain = 0
    sampled[seed] = 1
    rec.add(seed, chain, NO_REFERRER, False)
    queue = deque([(seed, chain)])
    count = 1
    while count < target_size:
        if not queue:
            nxt = _restart_node(g, sampled, rec.nodes[-1], r)
            chain += 1
            sampled[nxt] = 1
            rec.add(nxt, chain, NO_REFERRER, False)
            count += 1
            queue.append((nxt, chain))
            continue
        u, c = queue.popleft()
        for w in adj[u]:
            if sampled[w]:
                continue
            if fire_prob < 1 and r.random() >= fire_prob:
                continue
            sampled[w] = 1
            rec.add(w, c, u, False)
            queue.append((w, c))
            count += 1
            if count >= target_size:
                break
    return rec.build(config)


def rds(g: Graph, config: SamplerConfig, rng=None,
        seed_nodes: list[int] | None = None) -> SampleTrace:
    """Respondent-driven sampling with ``coupons_n`` coupons per respondent.

    Respondents are processed first-in first-out. Each hands coupons to up to
    ``coupons_n`` distinct neighbours chosen uniformly; in traversal mode only
    unsampled neighbours are eligible (all of them if fewer remain). With
    replacement every draw is recorded and repeats are flagged as revisits;
    in that mode ``target_size`` is the trace length, otherwise it is the
    number of distinct respondents.
    """
    rng = as_rng(rng)
    n = config.coupons_n
    target = config.target_size
    if target < config.num_chains and target > 0:
        raise ValueError("target_size must be at least num_chains")
    if not config.with_replacement and target > g.num_nodes:
        raise ValueError("traversal target_size exceeds the number of nodes")
    rec = _Recorder()
    if target == 0:
        return rec.build(config)

    r = _py_random(rng)
    adj = g.adjacency
    sampled = bytearray(g.num_nodes)
    if seed_nodes is None:
        if traversal_seeds_short(g, config):
            raise ValueError("more chains requested than non-isolated nodes")
        seeds: list[int] = []
        while len(seeds) < config.num_chains:
            s = default_seed_node(g, rng)
            if config.with_replacement or s not in seeds:
                seeds.append(s)
    else:
        seeds = [g._check(s) for s in seed_nodes]
    queue: deque[tuple[int, int]] = deque()
    count = 0
    for chain, s in enumerate(seeds):
        revisit = bool(sampled[s])
        if revisit and not config.with_replacement:
            raise ValueError("duplicate seed nodes in traversal mode")
        sampled[s] = 1
        rec.add(s, chain, NO_REFERRER, revisit)
        queue.append((s, chain))
        count += 1
        if count >= target:
            return rec.build(config)
    next_chain = len(seeds)

    traversal = not config.with_replacement
    while count < target:
        if not queue:
            if not traversal:
                # only isolated seeds can starve a with-replacement process
                raise GraphError("random walk started at an isolated node")
            nxt = _restart_node(g, sampled, rec.nodes[-1], r)
            sampled[nxt] = 1
            rec.add(nxt, next_chain, NO_REFERRER, False)
            queue.append((nxt, next_chain))
            next_chain += 1
            count += 1
            continue
        u, c = queue.popleft()
        nb = adj[u]
        if traversal:
            options = [w for w in nb if not sampled[w]]
        else:
            options = nb
        if not options:
            continue
        picks = options if len(options) <= n else r.sample(options, n)
        for w in picks:
            revisit = bool(sampled[w])
            sampled[w] = 1
            rec.add(w, c, u, revisit)
            queue.append((w, c))
            count += 1
            if count >= target:
                break
    return rec.build(config)


def traversal_seeds_short(g: Graph, config: SamplerConfig) -> bool:
    return not config.with_replacement and config.num_chains > max(
        int(np.count_nonzero(g.degrees)), 1)


def snowball_n(g: Graph, seed_node: int | None, coupons_n: int, target_size: int,
               rng=None) -> SampleTrace:
    config = SamplerConfig(SamplerKind.SNOWBALL_N, target_size, coupons_n=coupons_n)
    return rds(g, config, rng, None if seed_node is None else [seed_node])


# -- random walks ------------------------------------------------------------

def _walk_start(g: Graph, seed_node: int | None, rng: np.random.Generator) -> int:
    seed = default_seed_node(g, rng) if seed_node is None else g._check(seed_node)
    if g.degrees[seed] == 0:
        raise GraphError(f"seed node {seed} is isolated")
    return seed


def srw(g: Graph, seed_node: int | None, target_size: int, rng=None) -> SampleTrace:
    """Simple random walk of ``target_size`` recorded steps (seed included)."""
    rng = as_rng(rng)
    config = SamplerConfig(SamplerKind.SRW, target_size, with_replacement=True, coupons_n=1)
    rec = _Recorder()
    if target_size == 0:
        return rec.build(config)
    u = _walk_start(g, seed_node, rng)
    r = _py_random(rng)
    adj = g.adjacency
    seen = bytearray(g.num_nodes)
    nodes = [u]
    refs = [NO_REFERRER]
    revisits = [False]
    seen[u] = 1
    rand = r.random
    for _ in range(target_size - 1):
        nb = adj[u]
        w = nb[int(rand() * len(nb))]
        nodes.append(w)
        refs.append(u)
        revisits.append(bool(seen[w]))
        seen[w] = 1
        u = w
    rec.nodes, rec.referrers, rec.revisits = nodes, refs, revisits
    rec.chains = [0] * len(nodes)
    return rec.build(config)


def mhrw(g: Graph, seed_node: int | None, target_size: int, rng=None) -> SampleTrace:
    """Metropolis-Hastings walk targeting the uniform distribution.

    A proposal ``u -> v`` is accepted with probability ``min(1, deg u / deg v)``;
    a rejection records ``u`` again (with no referrer).
    """
    rng = as_rng(rng)
    config = SamplerConfig(SamplerKind.MHRW, target_size, with_replacement=True, coupons_n=1)
    rec = _Recorder()
    if target_size == 0:
        return rec.build(config)
    u = _walk_start(g, seed_node, rng)
    r = _py_random(rng)
    adj = g.adjacency
    deg = g.degrees.tolist()
    seen = bytearray(g.num_nodes)
    nodes = [u]
    refs = [NO_REFERRER]
    revisits = [False]
    seen[u] = 1
    rand = r.random
    for _ in range(target_size - 1):
        nb = adj[u]
        v = nb[int(rand() * len(nb))]
        if deg[v] <= deg[u] or rand() * deg[v] < deg[u]:
            refs.append(u)
            u = v
        else:
            refs.append(NO_REFERRER)
        nodes.append(u)
        revisits.append(bool(seen[u]))
        seen[u] = 1
    rec.nodes, rec.referrers, rec.revisits = nodes, refs, revisits
    rec.chains = [0] * len(nodes)
    return rec.build(config)


WeightFunction = Callable[[int, int], float] | Mapping[tuple[int, int], float]


def _edge_weight(weights: WeightFunction, u: int, v: int) -> float:
    if callable(weights):
        w = weights(u, v)
    else:
        key = (u, v) if (u, v) in weights else (v, u)
        if key not in weights:
            raise KeyError(f"missing weight for edge ({u}, {v})")
        w = weights[key]
    w = float(w)
    if not w > 0:
        raise ValueError(f"weight of edge ({u}, {v}) must be positive, got {w}")
    return w


def node_weights(g: Graph, weights: WeightFunction) -> np.ndarray:
    """``w(v)``: total weight on the links at each node."""
    out = np.zeros(g.num_nodes)
    for u, v in g.edges().tolist():
        w = _edge_weight(weights, u, v)
        out[u] += w
        out[v] += w
    return out


def wrw(g: Graph, weights: WeightFunction, seed_node: int | None, target_size: int,
        rng=None) -> SampleTrace:
    """Weighted random walk: step to neighbour ``v`` with probability
    proportional to ``w(u, v)``."""
    rng = as_rng(rng)
    config = SamplerConfig(SamplerKind.WRW, target_size, with_replacement=True, coupons_n=1)
    rec = _Recorder()
    if target_size == 0:
        return rec.build(config)
    adj = g.adjacency
    cumulative: list[list[float]] = []
    for u, nb in enumerate(adj):
        acc, total = [], 0.0
        for v in nb:
            total += _edge_weight(weights, u, v)
            acc.append(total)
        cumulative.append(acc)
    u = _walk_start(g, seed_node, rng)
    r = _py_random(rng)
    seen = bytearray(g.num_nodes)
    nodes, refs, revisits = [u], [NO_REFERRER], [False]
    seen[u] = 1
    for _ in range(target_size - 1):
        acc = cumulative[u]
        i = bisect_right(acc, r.random() * acc[-1])
        w = adj[u][min(i, len(acc) - 1)]
        nodes.append(w)
        refs.append(u)
        revisits.append(bool(seen[w]))
        seen[w] = 1
        u = w
    rec.nodes, rec.referrers, rec.revisits = nodes, refs, revisits
    rec.chains = [0] * len(nodes)
    return rec.build(config)


# -- dispatch & IO -----------------------------------------------------------

def run_sampler(g: Graph, config: SamplerConfig, rng=None, seed_node: int | None = None,
                weights: WeightFunction | None = None) -> SampleTrace:
    """Run the sampler described by ``config``; ``rng`` defaults to its seed."""
    rng = as_rng(config.rng_seed if rng is None else rng)
    k = config.kind
    if k is SamplerKind.UNIFORM_NODE:
        trace = uniform_node_sample(g, config.target_size, rng)
    elif k is SamplerKind.UNIFORM_LINK:
        trace = uniform_link_sample(g, config.target_size, rng)
    elif k is SamplerKind.BFS:
        trace = bfs(g, seed_node, config.target_size, rng)
    elif k is SamplerKind.DFS:
        trace = dfs(g, seed_node, config.target_size, rng)
    elif k is SamplerKind.FOREST_FIRE:
        trace = forest_fire(g, seed_node, config.fire_prob, config.target_size, rng)
    elif k in (SamplerKind.RDS, SamplerKind.SNOWBALL_N):
        trace = rds(g, config, rng, None if seed_node is None else [seed_node])
    elif k is SamplerKind.SRW:
        trace = srw(g, seed_node, config.target_size, rng)
    elif k is SamplerKind.MHRW:
        trace = mhrw(g, seed_node, config.target_size, rng)
    elif k is SamplerKind.WRW:
        trace = wrw(g, weights if weights is not None else (lambda u, v: 1.0),
                    seed_node, config.target_size, rng)
    else:  # pragma: no cover
        raise ValueError(f"unknown sampler {k}")
    if trace.sampler.with_replacement and not config.with_replacement:
        # walks and link sampling are with-replacement whatever the config says
        config = replace(config, with_replacement=True)
    return replace(trace, sampler=config)


TRACE_COLUMNS = ("step", "chain", "node", "referrer", "revisit")


def write_trace(trace: SampleTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for step, (v, c, ref, rev) in enumerate(zip(
                trace.nodes.tolist(), trace.chains.tolist(),
                trace.referrers.tolist(), trace.revisits.tolist())):
            w.writerow([step, c, v, "" if ref == NO_REFERRER else ref, int(rev)])


def read_trace(path: str | Path, sampler: SamplerConfig | None = None) -> SampleTrace:
    rec = _Recorder()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRACE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"trace file lacks columns {sorted(missing)}")
        for row in reader:
            ref = row["referrer"].strip()
            rec.add(int(row["node"]), int(row["chain"]),
                    int(ref) if ref else NO_REFERRER, row["revisit"].strip() in ("1", "true", "True"))
    return rec.build(sampler)


def validate_trace(g: Graph, trace: SampleTrace) -> None:
    """Raise if a referral is not an edge or a traversal trace repeats a node."""
    for ref, v in trace.referral_pairs().tolist():
        if not g.has_edge(ref, v):
            raise GraphError(f"referral {ref}->{v} is not an edge")
    if not trace.with_replacement:
        if len(np.unique(trace.nodes)) != len(trace.nodes):
            raise GraphError("traversal trace contains duplicate nodes")
