"""Per-degree inclusion probabilities for chain-referral samples.

Four models are provided:

* ``WITH_REPLACEMENT``: stationary random-walk law, pi(k) proportional to k.
* ``KURANT_DIRECT``: stub-activation model. Every stub gets a U(0,1) time and a
  node joins when its earliest stub fires, so at virtual time t a degree-k
  node is in with probability ``1 - (1 - t)^k``. The time is found by
  inverting the expected sampled fraction ``g(t) = 1 - sum_k p(k) (1-t)^k``.
* ``KURANT_SIMPLIFIED``: the same with ``g`` replaced by ``1 - (1-t)^dbar``,
  which inverts in closed form.
* ``GILE_SS``: successive-sampling fixed point, re-estimating the population
  degree counts from the current pi and re-drawing PPS-without-replacement
  samples from that degree multiset.

Isolated nodes can only enter a sample as seeds; they are treated as degree 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import DegreeDistribution, Graph
from .samplers import SampleTrace, as_rng


class InclusionMethod(str, enum.Enum):
    WITH_REPLACEMENT = "wr"
    KURANT_DIRECT = "kurant"
    KURANT_SIMPLIFIED = "kurant-simple"
    GILE_SS = "gile-ss"


@dataclass(frozen=True, eq=False)
class InclusionModel:
    """Relative inclusion probability per degree.

    Direct models evaluate their closed form for any degree; the Gile SS
    model only knows the degrees it was fitted on.
    """

    pi_by_degree: dict[int, float]
    method: InclusionMethod
    f: float = float("nan")
    t_star: float = float("nan")
    converged: bool = True
    iterations: int = 0
    history: list[float] = field(default_factory=list, repr=False)

    def pi(self, degrees) -> np.ndarray:
        k = np.maximum(np.asarray(degrees, dtype=np.int64), 1)
        if self.method is InclusionMethod.WITH_REPLACEMENT:
            return k.astype(float)
        if self.method in (InclusionMethod.KURANT_DIRECT, InclusionMethod.KURANT_SIMPLIFIED):
            return -np.expm1(k * math.log1p(-self.t_star)) if self.t_star < 1 else np.ones(k.shape)
        table = self._table
        if k.size and k.max() >= len(table):
            raise KeyError(f"degree {int(k.max())} not covered by the fitted model")
        out = table[k]
        if np.any(np.isnan(out)):
            missing = sorted(set(k[np.isnan(out)].tolist()))
            raise KeyError(f"degrees {missing} not covered by the fitted model")
        return out

    @property
    def _table(self) -> np.ndarray:
        cached = self.__dict__.get("_cached_table")
        if cached is None:
            top = max(self.pi_by_degree, default=0)
            cached = np.full(top + 1, np.nan)
            for k, p in self.pi_by_degree.items():
                cached[k] = p
            self.__dict__["_cached_table"] = cached
        return cached


def _effective(degrees) -> np.ndarray:
    return np.maximum(np.asarray(degrees, dtype=np.int64), 1)


def pi_with_replacement(degrees) -> InclusionModel:
    ks = sorted(set(_effective(degrees).tolist()))
    return InclusionModel({k: float(k) for k in ks}, InclusionMethod.WITH_REPLACEMENT)


def g_of_t(pk: DegreeDistribution, t: float) -> float:
    """Expected sampled fraction at virtual time ``t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t == 1.0:
        return float(np.dot(pk.probs, pk.degrees > 0))
    # sum p(k) (1 - (1-t)^k), written to stay accurate for small t
    return float(np.dot(pk.probs, -np.expm1(pk.degrees * math.log1p(-t))))


def invert_g(pk: DegreeDistribution, f: float, tol: float = 1e-12) -> float:
    """Bisection for ``t`` with ``g(t) = f``; ``g`` is increasing on [0, 1]."""
    top = g_of_t(pk, 1.0)
    if not 0.0 < f < 1.0 or f > top:
        raise ValueError(f"f={f} is outside the range (0, {top}] of g")
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = g_of_t(pk, mid)
        if abs(val - f) <= tol:
            return mid
        if val < f:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-17:
            break
    return 0.5 * (lo + hi)


def _direct_model(ks, t_star: float, f: float, method: InclusionMethod) -> InclusionModel:
    ks = sorted(set(int(k) for k in ks))
    vals = -np.expm1(np.array(ks) * math.log1p(-t_star)) if t_star < 1 else np.ones(len(ks))
    return InclusionModel(dict(zip(ks, vals.tolist())), method, f=f, t_star=t_star)


def kurant_direct(pk: DegreeDistribution, f: float) -> InclusionModel:
    if f >= 1.0:
        return _direct_model(pk.degrees, 1.0, 1.0, InclusionMethod.KURANT_DIRECT)
    t_star = invert_g(pk, f)
    return _direct_model(pk.degrees, t_star, f, InclusionMethod.KURANT_DIRECT)


def kurant_simplified(mean_degree: float, f: float, degrees=()) -> InclusionModel:
    """Closed-form inversion of ``1 - (1-t)^dbar``; ``degrees`` only seeds the
    stored lookup table."""
    if not mean_degree > 0:
        raise ValueError("mean degree must be positive")
    if not 0.0 < f <= 1.0:
        raise ValueError(f"f must lie in (0, 1], got {f}")
    t_star = 1.0 if f >= 1.0 else -math.expm1(math.log1p(-f) / mean_degree)
    return _direct_model(_effective(degrees), t_star, f, InclusionMethod.KURANT_SIMPLIFIED)


def sample_mean_degree(degrees, harmonic: bool = False) -> float:
    k = _effective(degrees).astype(float)
    if harmonic:
        return float(len(k) / np.sum(1.0 / k))
    return float(k.mean())


def kurant_simplified_from_sample(degrees, f: float, harmonic: bool = False) -> InclusionModel:
    return kurant_simplified(sample_mean_degree(degrees, harmonic), f, degrees)


def largest_remainder(shares: np.ndarray, total: int) -> np.ndarray:
    """Round non-negative ``shares`` to integers summing to ``total``."""
    shares = np.asarray(shares, dtype=float)
    scaled = shares * (total / shares.sum())
    base = np.floor(scaled).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        # stable order keeps ties deterministic
        order = np.argsort(-(scaled - base), kind="stable")
        base[order[:short]] += 1
    return base


def successive_sample_counts(weights: np.ndarray, n: int, rounds: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Indices hit by ``rounds`` independent PPS-without-replacement samples.

    Ordering items by ``Exp(1) / weight`` and keeping the ``n`` smallest
    reproduces sequential size-biased draws without replacement. Returns an
    ``(rounds, n)`` index array.
    """
    N = len(weights)
    if n > N:
        raise ValueError("sample larger than population")
    if n == N:
        return np.tile(np.arange(N), (rounds, 1))
    keys = rng.standard_exponential((rounds, N)) / weights
    return np.argpartition(keys, n - 1, axis=1)[:, :n]


def gile_ss(sample_degrees, population_size: int, M: int = 50, max_iter: int = 10,
            tol: float = 1e-4, rng=None) -> InclusionModel:
    """Successive-sampling estimate of per-degree inclusion probabilities."""
    k_sample = _effective(sample_degrees)
    n = len(k_sample)
    if n == 0:
        raise ValueError("empty sample")
    if population_size < n:
        raise ValueError("population smaller than the sample")
    rng = as_rng(rng)
    ks, v_k = np.unique(k_sample, return_counts=True)
    pi = ks.astype(float)
    history: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        pop_counts = largest_remainder(v_k / pi, population_size)
        pop_counts = _cover_sample(pop_counts, v_k)
        weights = np.repeat(ks.astype(float), pop_counts)
        drawn = successive_sample_counts(weights, n, M, rng)
        cls = np.repeat(np.arange(len(ks)), pop_counts)
        u_k = np.bincount(cls[drawn.ravel()], minlength=len(ks))
        new_pi = (u_k + 1.0) / (M * pop_counts + 1.0)
        change = float(np.max(np.abs(new_pi - pi))) if it > 1 else float("inf")
        history.append(change)
        pi = new_pi
        if change < tol:
            converged = True
            break
    return InclusionModel(dict(zip(ks.tolist(), pi.tolist())), InclusionMethod.GILE_SS,
                          f=n / population_size, converged=converged, iterations=it,
                          history=history)


def _cover_sample(pop_counts: np.ndarray, v_k: np.ndarray) -> np.ndarray:
    """Lift each degree class to at least its sample count, taking the
    difference from the classes with the most slack."""
    counts = pop_counts.copy()
    deficit = np.maximum(v_k - counts, 0)
    if not deficit.any():
        return counts
    counts += deficit
    excess = int(deficit.sum())
    while excess > 0:
        slack = counts - v_k
        j = int(np.argmax(slack))
        take = min(excess, int(slack[j]))
        if take <= 0:
            raise ValueError("population too small for the sampled degree classes")
        counts[j] -= take
        excess -= take
    return counts


def estimate_pk_rw(trace: SampleTrace, g: Graph) -> DegreeDistribution:
    """Degree distribution from a random-walk trace, each draw weighted 1/deg."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    k = _effective(g.degrees[trace.nodes])
    weights: dict[int, float] = {}
    for deg, w in zip(k.tolist(), (1.0 / k).tolist()):
        weights[deg] = weights.get(deg, 0.0) + w
    return DegreeDistribution.from_weights(weights)


def fit_inclusion(method: InclusionMethod | str, sample_degrees, population_size: int,
                  pk: DegreeDistribution | None = None, rng=None, harmonic: bool = False,
                  **gile_kwargs) -> InclusionModel:
    """Fit any of the models from the degrees of a traversal sample.

    ``f`` is the distinct sample size over ``population_size``. The direct
    model needs ``pk``; without one it falls back to the 1/deg-weighted
    sample degree distribution.
    """
    method = InclusionMethod(method)
    degrees = np.asarray(sample_degrees)
    if method is InclusionMethod.WITH_REPLACEMENT:
        return pi_with_replacement(degrees)
    f = len(degrees) / population_size
    if method is InclusionMethod.KURANT_SIMPLIFIED:
        return kurant_simplified_from_sample(degrees, f, harmonic)
    if method is InclusionMethod.KURANT_DIRECT:
        if pk is None:
            k = _effective(degrees)
            weights: dict[int, float] = {}
            for deg in k.tolist():
                weights[deg] = weights.get(deg, 0.0) + 1.0 / deg
            pk = DegreeDistribution.from_weights(weights)
        model = kurant_direct(pk, f)
        return _direct_model(_effective(degrees), model.t_star, f, InclusionMethod.KURANT_DIRECT)
    return gile_ss(degrees, population_size, rng=rng, **gile_kwargs)
