import math

import numpy as np
import pytest

from netsampling.graph import check_invariants
from netsampling.netgen import (InfeasibleParams, NetgenParams, generate, measure_summary,
                                plan_blocks)

from conftest import complete, make


def ensemble(seeds=50, **kw):
    summaries = [measure_summary(generate(NetgenParams(rng_seed=s, **kw))) for s in range(seeds)]
    return {
        "degree": np.mean([s.measured_mean_degree for s in summaries]),
        "h_pairs": np.mean([s.measured_homophily for s in summaries]),
        "h_degree": np.mean([s.measured_homophily_degree for s in summaries]),
        "activity": np.mean([s.measured_activity for s in summaries]),
    }


def test_neutral_targets_within_ten_percent():
    m = ensemble(population=1000, prop_a=0.3, mean_degree=10, homophily=1, activity=1)
    assert m["degree"] == pytest.approx(10, rel=0.10)
    assert m["h_pairs"] == pytest.approx(1, rel=0.10)
    assert m["activity"] == pytest.approx(1, rel=0.10)


@pytest.mark.parametrize("basis,measure", [("degree", "h_degree"), ("pairs", "h_pairs")])
def test_skewed_targets_within_fifteen_percent(basis, measure):
    m = ensemble(population=1000, prop_a=0.3, mean_degree=10, homophily=2, activity=2,
                 homophily_basis=basis)
    assert m["degree"] == pytest.approx(10, rel=0.15)
    assert m[measure] == pytest.approx(2, rel=0.15)
    assert m["activity"] == pytest.approx(2, rel=0.15)


def test_single_category_network():
    g = generate(NetgenParams(200, 0.0, 6, homophily=3, activity=2, rng_seed=1))
    s = measure_summary(g)
    assert s.cross_ties == 0
    assert math.isnan(s.measured_homophily) and not s.homophily_defined
    assert math.isnan(s.measured_activity)


def test_measure_complete_bipartite():
    g = make(6, [(a, b) for a in range(3) for b in range(3, 6)], a_nodes=[0, 1, 2])
    s = measure_summary(g)
    assert s.cross_ties == 9
    assert s.measured_homophily == pytest.approx(0.6, abs=1e-12)


def test_measure_k4_balanced():
    s = measure_summary(complete(4, a_nodes=[0, 1]))
    assert s.cross_ties == 4
    assert s.measured_homophily == pytest.approx(1.0, abs=1e-12)


def test_measure_regular_activity():
    # cycle on 8 nodes, alternate labels
    g = make(8, [(i, (i + 1) % 8) for i in range(8)], a_nodes=[0, 2, 4, 6])
    assert measure_summary(g).measured_activity == 1.0


def test_no_cross_ties_gives_infinite_homophily():
    g = make(4, [(0, 1), (2, 3)], a_nodes=[0, 1])
    assert measure_summary(g).measured_homophily == math.inf


def test_generation_is_deterministic():
    p = NetgenParams(300, 0.3, 8, 2, 0.5, rng_seed=42)
    g1, g2 = generate(p), generate(p)
    assert np.array_equal(g1.indptr, g2.indptr)
    assert np.array_equal(g1.indices, g2.indices)
    assert np.array_equal(g1.is_a, g2.is_a)
    g3 = generate(NetgenParams(300, 0.3, 8, 2, 0.5, rng_seed=43))
    assert not np.array_equal(g1.indices, g3.indices)


def test_generated_graph_is_valid():
    g = generate(NetgenParams(500, 0.3, 10, 2, 2, rng_seed=3))
    check_invariants(g)
    assert int(g.is_a.sum()) == 150


def test_infeasible_parameters():
    with pytest.raises(InfeasibleParams):
        plan_blocks(NetgenParams(10, 0.5, 20, 1, 1))
    with pytest.raises(InfeasibleParams):
        plan_blocks(NetgenParams(100, 0.1, 10, 1, 50))
    with pytest.raises(InfeasibleParams):
        plan_blocks(NetgenParams(100, 0.3, 10, 0.01, 1))
    plan = plan_blocks(NetgenParams(100, 0.3, 10, 0.01, 1), clamp=True)
    assert plan.clamped
    assert 0 <= plan.p_ab <= 1


def test_bad_basis_rejected():
    with pytest.raises(ValueError):
        NetgenParams(100, 0.3, 10, homophily_basis="edges")


def test_bases_coincide_at_unit_activity():
    a = plan_blocks(NetgenParams(1000, 0.3, 10, 2, 1))
    b = plan_blocks(NetgenParams(1000, 0.3, 10, 2, 1, homophily_basis="pairs"))
    assert a.cross_edges == pytest.approx(b.cross_edges, rel=2e-3)
