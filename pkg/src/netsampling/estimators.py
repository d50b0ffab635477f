"""Inverse-probability point estimators and replicate error metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import Graph
from .inclusion import InclusionModel
from .samplers import SampleTrace

# An attribute maps (is_a, degree) arrays of the sampled nodes to values.
Attribute = Callable[[np.ndarray, np.ndarray], np.ndarray]


def category_a(is_a: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    return np.asarray(is_a, dtype=float)


def node_degree(is_a: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    return np.asarray(degrees, dtype=float)


ATTRIBUTES: dict[str, Attribute] = {"prop-a": category_a, "degree": node_degree}


def _check(values, pi) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(values, dtype=float)
    p = np.asarray(pi, dtype=float)
    if x.shape != p.shape:
        raise ValueError("values and inclusion probabilities differ in length")
    if x.size == 0:
        raise ValueError("empty sample")
    if np.any(p <= 0):
        raise ValueError("inclusion probabilities must be positive")
    return x, p


def hansen_hurwitz_mean(values, pi) -> float:
    """Ratio form ``sum(x/pi) / sum(1/pi)``; invariant to rescaling ``pi``."""
    x, p = _check(values, pi)
    w = 1.0 / p
    return float(np.dot(w, x) / w.sum())


def hansen_hurwitz_total(values, pi) -> float:
    """``(1/n) sum(x/pi)`` with ``pi`` the per-draw selection probability."""
    x, p = _check(values, pi)
    return float(np.sum(x / p) / len(x))


def horvitz_thompson_mean(values, pi, population_size: int) -> float:
    x, p = _check(values, pi)
    return float(np.sum(x / p) / (population_size * len(x)))


def sample_arrays(trace: SampleTrace, g: Graph, attribute: Attribute,
                  model: InclusionModel) -> tuple[np.ndarray, np.ndarray]:
    """Attribute values and inclusion probabilities of the estimation draws."""
    nodes = trace.estimation_nodes()
    deg = g.degrees[nodes]
    return attribute(g.is_a[nodes], deg), model.pi(deg)


def estimate_mean(trace: SampleTrace, g: Graph, attribute: Attribute,
                  model: InclusionModel) -> float:
    return hansen_hurwitz_mean(*sample_arrays(trace, g, attribute, model))


@dataclass(frozen=True)
class ErrorReport:
    relative_mean_error: float
    rms_error: float
    bias: float
    standard_deviation: float
    median_abs_error: float
    replicate_count: int
    errors: tuple[float, ...]


def error_report(estimates, true_value: float) -> ErrorReport:
    """Quadratic-mean error of replicate estimates around ``true_value``.

    ``standard_deviation`` is the population form so that
    ``rms_error**2 == bias**2 + standard_deviation**2``.
    """
    est = np.asarray(estimates, dtype=float)
    if len(est) < 2:
        raise ValueError("need at least two replicates")
    if true_value == 0:
        raise ValueError("relative error undefined for a zero true value")
    e = est - true_value
    rms = float(np.sqrt(np.mean(e**2)))
    return ErrorReport(
        relative_mean_error=rms / abs(true_value),
        rms_error=rms,
        bias=float(e.mean()),
        standard_deviation=float(est.std()),
        median_abs_error=float(np.median(np.abs(e))),
        replicate_count=len(est),
        errors=tuple(e.tolist()),
    )


def correlation(series_a, series_b) -> float:
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("need two equal-length series of at least two points")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = np.sqrt(np.dot(da, da)), np.sqrt(np.dot(db, db))
    if sa == 0 or sb == 0:
        raise ValueError("correlation undefined for a constant series")
    return float(np.clip(np.dot(da, db) / (sa * sb), -1.0, 1.0))
