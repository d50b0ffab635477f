import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import complete, make
from netsampling.ci import (CiMethod, build_gile_model, estimate_network_attributes, fast_ci,
                            gile_ss_ci, naive_ci, salganik_ci)
from netsampling.estimators import category_a, node_degree
from netsampling.inclusion import fit_inclusion, pi_with_replacement
from netsampling.netgen import NetgenParams, generate
from netsampling.samplers import NO_REFERRER, SampleTrace, SamplerConfig, run_sampler


def constant(is_a, degrees):
    return np.ones(np.shape(is_a))


@pytest.fixture(scope="module")
def network():
    return generate(NetgenParams(400, 0.3, 8.0, 1.0, 1.0, 11))


@pytest.fixture(scope="module")
def rds_trace(network):
    return run_sampler(network, SamplerConfig("rds", 60, coupons_n=3), np.random.default_rng(5))


def _simple(g, trace):
    return fit_inclusion("kurant-simple", g.degrees[trace.estimation_nodes()], g.num_nodes)


def _all_methods(g, trace, attribute, seed, N=50):
    model = _simple(g, trace)
    return [
        salganik_ci(trace, g, attribute, model, N, 0.95, seed),
        gile_ss_ci(trace, g, attribute, g.num_nodes, N, 0.95, seed),
        fast_ci(trace, g, attribute, g.num_nodes, N, 0.95, seed),
    ]


# naive interval

def test_naive_t_interval_example():
    res = naive_ci([0, 0, 1, 1], 0.95)
    half = stats.t.ppf(0.975, 3) * (math.sqrt(1 / 3) / 2)
    assert res.point == pytest.approx(0.5)
    assert res.upper - res.point == pytest.approx(half, abs=1e-12)
    assert res.point - res.lower == pytest.approx(half, abs=1e-12)
    assert half == pytest.approx(3.182446305 * 0.5774 / 2, rel=1e-4)


def test_naive_constant_sample_zero_width():
    res = naive_ci([3.0] * 10)
    assert res.width == 0.0 and res.point == 3.0


@pytest.mark.parametrize("level", [0.0, 1.0, -0.1])
def test_degenerate_level_rejected(level):
    with pytest.raises(ValueError):
        naive_ci([0, 1, 2], level)


def test_naive_needs_two_observations():
    with pytest.raises(ValueError):
        naive_ci([1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=40), st.floats(0.5, 0.99))
def test_naive_contains_point_and_widens_with_level(xs, level):
    lo = naive_ci(xs, level)
    hi = naive_ci(xs, min(level + 0.005, 0.995))
    assert lo.lower <= lo.point <= lo.upper
    assert hi.width >= lo.width - 1e-12


# bootstrap intervals

def test_constant_attribute_gives_zero_width(network, rds_trace):
    for res in _all_methods(network, rds_trace, constant, 3):
        assert res.width == pytest.approx(0.0, abs=1e-12), res.method
        assert res.point == pytest.approx(1.0)


def test_intervals_contain_point_and_match_normal_form(network, rds_trace):
    z = stats.norm.ppf(0.975)
    for res in _all_methods(network, rds_trace, category_a, 4):
        assert res.lower <= res.point <= res.upper
        assert res.width == pytest.approx(2 * z * res.se, rel=1e-12)
        assert 0.0 <= res.estimate <= 1.0


def test_bootstrap_determinism(network, rds_trace):
    a = _all_methods(network, rds_trace, node_degree, 21)
    b = _all_methods(network, rds_trace, node_degree, 21)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_resample_count_must_be_at_least_two(network, rds_trace):
    model = _simple(network, rds_trace)
    with pytest.raises(ValueError):
        fast_ci(rds_trace, network, category_a, network.num_nodes, N=1)
    with pytest.raises(ValueError):
        salganik_ci(rds_trace, network, category_a, model, N=1)
    with pytest.raises(ValueError):
        gile_ss_ci(rds_trace, network, category_a, network.num_nodes, N=1)


def test_more_resamples_reduce_se_spread(network, rds_trace):
    model = _simple(network, rds_trace)
    small = [salganik_ci(rds_trace, network, category_a, model, 20, rng=s).se for s in range(40)]
    large = [salganik_ci(rds_trace, network, category_a, model, 500, rng=s).se for s in range(40)]
    assert np.var(large) < np.var(small)


def test_salganik_with_replacement_trace_uses_every_draw(network):
    t = run_sampler(network, SamplerConfig("srw", 80), np.random.default_rng(2))
    res = salganik_ci(t, network, category_a, pi_with_replacement(network.degrees[t.nodes]), 30, rng=0)
    assert res.lower <= res.point <= res.upper


def _chain(nodes, referrers):
    n = len(nodes)
    return SampleTrace(np.array(nodes), np.zeros(n, dtype=np.int64), np.array(referrers),
                       np.zeros(n, dtype=bool), SamplerConfig("rds", n))


def test_salganik_single_category_sample_is_well_formed():
    g = complete(6, a_nodes=range(6))
    t = _chain([0, 1, 2, 3], [NO_REFERRER, 0, 1, 2])
    res = salganik_ci(t, g, category_a, fit_inclusion("kurant-simple", g.degrees[:4], 6), 20, rng=0)
    assert res.width == 0.0 and res.point == 1.0
    # only A-referred records exist; the B pool is empty but B never occurs
    assert res.flags == ()


def test_salganik_empty_pool_fallback_flagged():
    # B node 3 is sampled but nobody is referred by a B node
    g = complete(5, a_nodes=(0, 1, 2))
    t = _chain([0, 1, 3, 2], [NO_REFERRER, 0, 0, 1])
    model = fit_inclusion("kurant-simple", g.degrees[[0, 1, 3, 2]], 5)
    res = salganik_ci(t, g, category_a, model, 50, rng=1)
    assert "empty-referral-pool-B" in res.flags
    assert res.lower <= res.point <= res.upper


def test_gile_link_counts_symmetric_example():
    # K8, A = {0..3}; A recruits one A and one B, B recruits one B and one A
    g = complete(8, a_nodes=range(4))
    t = _chain([0, 1, 4, 5, 2], [NO_REFERRER, 0, 0, 4, 4])
    model = fit_inclusion("kurant-simple", g.degrees[[0, 1, 4, 5, 2]], 8)
    gm = build_gile_model(t, g, model, 8)
    assert gm.r_hat == (0.5, 0.5)
    n_a, n_b = sum(gm.counts[1].values()), sum(gm.counts[0].values())
    assert n_a + n_b == 8
    d = 7
    assert gm.H0[1, 1] == pytest.approx(d * n_a * 0.5)
    assert gm.H0[0, 0] == pytest.approx(d * n_b * 0.5)
    assert gm.H0[0, 1] == gm.H0[1, 0] == pytest.approx(d * (n_a + n_b) * 0.25)
    assert gm.H0[1, 1] / gm.H0[1, 0] == pytest.approx(2 * n_a / (n_a + n_b))


def test_gile_model_needs_both_categories():
    g = complete(5, a_nodes=range(5))
    t = _chain([0, 1, 2], [NO_REFERRER, 0, 1])
    with pytest.raises(ValueError):
        gile_ss_ci(t, g, category_a, 5, 10, rng=0)


def test_gile_link_counts_nonnegative_and_symmetric(network, rds_trace):
    gm = build_gile_model(rds_trace, network, _simple(network, rds_trace), network.num_nodes)
    assert np.all(gm.H0 >= 0) and gm.H0[0, 1] == gm.H0[1, 0]


# network attribute estimates

def test_all_cross_links_give_heterophily():
    # balanced bipartite graph, every referral crosses categories
    edges = [(i, j) for i in range(4) for j in range(4, 8)]
    g = make(8, edges, a_nodes=range(4))
    t = _chain([0, 4, 1, 5, 2], [NO_REFERRER, 0, 4, 1, 5])
    model = fit_inclusion("kurant-simple", g.degrees[[0, 4, 1, 5, 2]], 8)
    e = estimate_network_attributes(t, g, model, 8)
    assert e.C == e.C_b == 4
    n_a = e.prop_a * 8
    assert e.h_hat == pytest.approx(n_a * (8 - n_a) / (8 * 7 / 2))
    assert e.h_hat < 1.0


def test_single_category_trace_sentinels():
    g = complete(5, a_nodes=range(5))
    t = _chain([0, 1, 2], [NO_REFERRER, 0, 1])
    e = estimate_network_attributes(t, g, fit_inclusion("kurant-simple", g.degrees[:3], 5), 5)
    assert not e.homophily_defined and not e.activity_defined
    assert e.C == 2 and e.C_b == 0


def test_attribute_estimate_invariants(network, rds_trace):
    e = estimate_network_attributes(rds_trace, network, _simple(network, rds_trace), network.num_nodes)
    assert e.C_b <= e.C
    assert e.h_hat > 0
    assert e.a_hat == pytest.approx(e.d_bar_a / e.d_bar_b)


def test_homophily_and_activity_recovered_on_generated_networks():
    # the homophily estimate uses the equal-pair baseline, so generate on it
    hs, acts = [], []
    for r in range(100):
        g = generate(NetgenParams(1000, 0.3, 10.0, 2.0, 2.0, r, homophily_basis="pairs"))
        t = run_sampler(g, SamplerConfig("rds", 300, coupons_n=3), np.random.default_rng(1000 + r))
        e = estimate_network_attributes(t, g, _simple(g, t), 1000)
        hs.append(e.h_hat)
        acts.append(e.a_hat)
    assert abs(np.mean(hs) / 2.0 - 1.0) <= 0.30
    assert abs(np.mean(acts) / 2.0 - 1.0) <= 0.20


def test_fast_ci_flags_undefined_homophily():
    g = complete(6, a_nodes=range(3))
    # only within-category referrals
    t = _chain([0, 1, 2, 3, 4], [NO_REFERRER, 0, 1, NO_REFERRER, 3])
    res = fast_ci(t, g, category_a, 6, 10, rng=0)
    assert "homophily-undefined" in res.flags
    assert res.method is CiMethod.FAST
