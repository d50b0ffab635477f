import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netsampling.graph import DegreeDistribution, degree_distribution
from netsampling.inclusion import (InclusionMethod, estimate_pk_rw, fit_inclusion, g_of_t,
                                   gile_ss, invert_g, kurant_direct, kurant_simplified,
                                   kurant_simplified_from_sample, largest_remainder,
                                   pi_with_replacement, sample_mean_degree,
                                   successive_sample_counts)
from netsampling.estimators import correlation
from netsampling.netgen import NetgenParams, generate
from netsampling.samplers import SamplerConfig, run_sampler, srw

from conftest import complete

degree_dists = st.dictionaries(st.integers(1, 40), st.floats(0.01, 1.0), min_size=1,
                               max_size=8).map(DegreeDistribution.from_weights)


def test_with_replacement_proportional():
    assert np.allclose(pi_with_replacement([3, 3, 3]).pi([3, 3, 3]), 3)
    p = pi_with_replacement([1, 2]).pi([1, 2])
    assert p[1] / p[0] == 2


def test_g_of_t_examples():
    pk = DegreeDistribution({2: 0.5, 5: 0.5})
    assert g_of_t(pk, 0.0) == 0.0
    assert g_of_t(pk, 1.0) == 1.0
    reg = DegreeDistribution({4: 1.0})
    for t in (0.1, 0.37, 0.9):
        assert g_of_t(reg, t) == pytest.approx(1 - (1 - t) ** 4, abs=1e-15)
    with pytest.raises(ValueError):
        g_of_t(pk, 1.5)


@settings(max_examples=100, deadline=None)
@given(degree_dists, st.floats(0.001, 0.999))
def test_invert_g_round_trip(pk, f):
    t = invert_g(pk, f)
    assert abs(g_of_t(pk, t) - f) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(degree_dists, st.lists(st.floats(0, 1), min_size=2, max_size=10))
def test_g_increasing(pk, ts):
    ts = sorted(set(ts))
    vals = [g_of_t(pk, t) for t in ts]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    grid = [g_of_t(pk, t) for t in np.linspace(0.0, 0.5, 11)]
    assert all(a < b for a, b in zip(grid, grid[1:]))


def test_invert_g_regular_closed_form():
    for d in (1, 3, 10):
        for f in (0.05, 0.3, 0.8):
            t = invert_g(DegreeDistribution({d: 1.0}), f)
            assert t == pytest.approx(1 - (1 - f) ** (1 / d), abs=1e-10)


def test_invert_g_small_f_and_range():
    pk = DegreeDistribution({3: 0.5, 7: 0.5})
    assert invert_g(pk, 1e-9) < 1e-8
    with pytest.raises(ValueError):
        invert_g(pk, 0.0)
    with pytest.raises(ValueError):
        invert_g(pk, 1.2)


def test_kurant_direct_examples():
    pk = DegreeDistribution({1: 0.2, 4: 0.5, 9: 0.3})
    m = kurant_direct(pk, 0.4)
    assert m.pi([1])[0] == pytest.approx(m.t_star, abs=1e-15)
    assert np.allclose(m.pi([1, 4, 9]), 1 - (1 - m.t_star) ** np.array([1, 4, 9]))
    near_one = kurant_direct(pk, 0.999999)
    assert np.all(near_one.pi([1, 4, 9]) > 0.999)


def test_kurant_direct_matches_empirical_inclusion():
    g = generate(NetgenParams(200, 0.3, 6, rng_seed=11))
    n, runs = 60, 10_000
    counts = np.zeros(g.num_nodes)
    for r in range(runs):
        t = run_sampler(g, SamplerConfig("rds", n, coupons_n=3), np.random.default_rng([r]))
        counts[t.distinct_nodes()] += 1
    freq = counts / runs
    model = kurant_direct(degree_distribution(g), n / g.num_nodes)
    deg = np.maximum(g.degrees, 1)
    for k in np.unique(deg):
        assert abs(freq[deg == k].mean() - model.pi([k])[0]) <= 0.03


def test_kurant_simplified_examples():
    m = kurant_simplified(2.0, 0.5)
    assert m.t_star == pytest.approx(1 - math.sqrt(0.5), abs=1e-12)
    assert m.t_star == pytest.approx(0.2929, abs=1e-4)
    reg = DegreeDistribution({5: 1.0})
    a = kurant_simplified(5.0, 0.3).pi([1, 5, 8])
    b = kurant_direct(reg, 0.3).pi([1, 5, 8])
    assert np.allclose(a, b, atol=1e-12)


def test_arithmetic_and_harmonic_mean_degree_close():
    g = generate(NetgenParams(1000, 0.3, 10, rng_seed=3))
    t = run_sampler(g, SamplerConfig("rds", 300, coupons_n=3), 1)
    d = g.degrees[t.estimation_nodes()]
    a = kurant_simplified_from_sample(d, 0.3)
    h = kurant_simplified_from_sample(d, 0.3, harmonic=True)
    ks = np.unique(d)
    assert sample_mean_degree(d, True) < sample_mean_degree(d)
    # both are increasing in k and close after normalisation
    pa, ph = a.pi(ks), h.pi(ks)
    assert np.max(np.abs(pa / pa.sum() - ph / ph.sum())) < 0.01


def test_full_fraction_gives_unit_pi():
    pk = DegreeDistribution({2: 0.5, 3: 0.5})
    assert np.allclose(kurant_direct(pk, 1.0).pi([1, 2, 3]), 1)
    assert np.allclose(kurant_simplified(2.5, 1.0).pi([1, 2, 3]), 1)
    sample = [2, 3, 3, 2, 4]
    assert np.allclose(gile_ss(sample, 5, rng=0).pi([2, 3, 4]), 1)


def test_pps_without_replacement_full_draw():
    w = np.array([1.0, 5.0, 2.0])
    drawn = successive_sample_counts(w, 3, 4, np.random.default_rng(0))
    assert all(sorted(row) == [0, 1, 2] for row in drawn.tolist())


def test_exponential_keys_match_sequential_draws():
    # oracle: explicit sequential size-biased draws
    w = np.array([1.0, 2.0, 3.0, 4.0])
    rng = np.random.default_rng(1)
    runs = 40_000
    seq = np.zeros(4)
    for _ in range(runs):
        left = list(range(4))
        for _ in range(2):
            p = w[left] / w[left].sum()
            seq[left.pop(int(rng.choice(len(left), p=p)))] += 1
    keys = np.zeros(4)
    for row in successive_sample_counts(w, 2, runs, rng):
        keys[row] += 1
    assert np.allclose(seq / runs, keys / runs, atol=0.015)


def test_largest_remainder():
    out = largest_remainder(np.array([1.0, 1.0, 1.0]), 10)
    assert out.sum() == 10 and sorted(out.tolist()) == [3, 3, 4]
    assert largest_remainder(np.array([0.5, 0.25, 0.25]), 8).tolist() == [4, 2, 2]


def test_gile_regular_sample_single_class():
    m = gile_ss([4] * 30, 300, rng=1)
    assert list(m.pi_by_degree) == [4]
    assert m.pi([4])[0] == pytest.approx(0.1, rel=0.05)


def test_gile_small_fraction_is_degree_proportional():
    g = generate(NetgenParams(2000, 0.3, 10, rng_seed=5))
    t = run_sampler(g, SamplerConfig("rds", 100, coupons_n=3), 1)
    d = g.degrees[t.estimation_nodes()]
    m = gile_ss(d, 2000, M=2000, rng=2)
    ks = np.unique(d)
    counts = np.array([(d == k).sum() for k in ks])
    pi = m.pi(ks)
    c = np.sum(counts * pi) / np.sum(counts * ks)
    assert np.max(np.abs(pi / (c * ks) - 1)) < 0.05


def test_gile_reports_iterations():
    m = gile_ss([2, 3, 5, 5, 8], 100, M=20, max_iter=3, rng=0)
    assert m.iterations <= 3 and len(m.history) == m.iterations
    with pytest.raises(ValueError):
        gile_ss([], 10)
    with pytest.raises(ValueError):
        gile_ss([1, 2, 3], 2)
    with pytest.raises(KeyError):
        m.pi([4])


def test_gile_correlates_with_direct_method():
    g = generate(NetgenParams(1000, 0.3, 10, rng_seed=8))
    for f in (0.1, 0.3, 0.7):
        t = run_sampler(g, SamplerConfig("rds", int(f * 1000), coupons_n=3), 3)
        d = g.degrees[t.estimation_nodes()]
        pk = estimate_pk_rw(srw(g, None, 1000, 4), g)
        a = fit_inclusion("gile-ss", d, 1000, rng=5).pi(d)
        b = fit_inclusion("kurant", d, 1000, pk=pk).pi(d)
        assert correlation(a, b) > 0.95


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=5, max_size=60), st.floats(0.05, 0.95))
def test_closed_form_pi_monotone_in_degree(degrees, f):
    ks = np.unique(degrees)
    pop = len(degrees) + max(1, int(len(degrees) * (1 / f - 1)))
    for method in ("wr", "kurant", "kurant-simple"):
        pi = fit_inclusion(method, degrees, pop).pi(ks)
        step = np.diff(pi)
        assert np.all(step >= 0)
        # strict unless the larger degree has already rounded to certainty
        assert np.all((step > 0) | (pi[1:] == 1.0))


def test_gile_pi_monotone_in_degree():
    g = generate(NetgenParams(1000, 0.3, 10, rng_seed=6))
    for f in (0.1, 0.3):
        t = run_sampler(g, SamplerConfig("rds", int(f * 1000), coupons_n=3), 2)
        d = g.degrees[t.estimation_nodes()]
        ks = np.unique(d)
        assert np.all(np.diff(gile_ss(d, 1000, M=2000, rng=3).pi(ks)) > 0)


def test_pk_from_walk():
    k4 = complete(4)
    pk = estimate_pk_rw(srw(k4, 0, 100, 1), k4)
    assert pk.probabilities == {3: 1.0}
    g = generate(NetgenParams(150, 0.3, 5, rng_seed=2))
    comp = g.component_labels
    big = np.argmax(np.bincount(comp))
    start = int(np.flatnonzero(comp == big)[0])
    est = estimate_pk_rw(srw(g, start, 400_000, 3), g)
    members = np.maximum(g.degrees[comp == big], 1)
    for k, p in est.probabilities.items():
        assert abs(p - np.mean(members == k)) < 0.02
    with pytest.raises(ValueError):
        estimate_pk_rw(srw(g, start, 0, 3), g)


def test_pk_mean_is_harmonic_mean_of_walk_degrees():
    g = generate(NetgenParams(200, 0.3, 6, rng_seed=4))
    t = srw(g, None, 5000, 1)
    d = g.degrees[t.nodes]
    assert estimate_pk_rw(t, g).mean == pytest.approx(len(d) / np.sum(1 / d), rel=1e-12)
