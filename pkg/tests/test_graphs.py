"""Graph generators, degree distributions, and the size-biased transform."""

import math

import numpy as np
import pytest

from swarmsched import (DegreeDistribution, GraphGenerationError, SwarmGraph,
                        empirical_degree_distribution, generate_ba,
                        generate_er, generate_ws, size_biased)


def test_er_two_nodes_is_the_single_edge():
    g = generate_er(2, 1.9, seed=123)
    g.validate()
    assert g.edges() == [(0, 1)]


def test_er_sample_mean_degree_near_target():
    g = generate_er(1000, 8.0, seed=1)
    g.validate()
    mean = g.degrees.mean()
    assert abs(mean - 8.0) <= 0.8


def test_er_zero_mean_degree_rejected():
    with pytest.raises(ValueError):
        generate_er(2, 0.0, seed=0)


def test_er_retry_budget_exhaustion_signals_sparsity():
    with pytest.raises(GraphGenerationError):
        generate_er(200, 0.05, seed=0, retry_budget=5)


def test_ba_minimal_graph_is_triangle():
    g = generate_ba(3, 2, seed=0)
    g.validate()
    assert g.edges() == [(0, 1), (0, 2), (1, 2)]


def test_ba_invalid_parameters():
    with pytest.raises(ValueError):
        generate_ba(2, 2, seed=0)
    with pytest.raises(ValueError):
        generate_ba(5, 0, seed=0)


def test_ba_degree_tail_slope():
    # least-squares fit over degrees >= 10 on the log-log survival curve;
    # its slope is one above the density exponent and far less noisy than
    # fitting raw single-count histogram bins
    g = generate_ba(5000, 3, seed=7)
    g.validate()
    assert g.degrees.min() >= 3
    values = np.unique(g.degrees)
    values = values[values >= 10].astype(float)
    survival = np.array([(g.degrees >= k).mean() for k in values])
    slope = np.polyfit(np.log(values), np.log(survival), 1)[0] - 1.0
    assert -3.5 <= slope <= -2.0


def test_ws_no_rewiring_is_ring_lattice():
    g = generate_ws(30, 4, 0.0, seed=2)
    g.validate()
    assert set(g.degrees.tolist()) == {4}
    assert g.adjacency[0] == [1, 2, 28, 29]


def test_ws_rewiring_preserves_edge_count():
    g = generate_ws(2000, 8, 0.2, seed=3)
    g.validate()
    assert g.edge_count == 2000 * 8 // 2
    assert g.degrees.mean() == 8.0


def test_ws_full_rewiring_stays_simple_connected():
    g = generate_ws(10, 4, 1.0, seed=5)
    g.validate()
    assert g.edge_count == 20


def test_ws_invalid_parameters():
    with pytest.raises(ValueError):
        generate_ws(10, 3, 0.1, seed=0)   # odd ring degree
    with pytest.raises(ValueError):
        generate_ws(4, 4, 0.1, seed=0)    # M <= ring_degree


@pytest.mark.parametrize("make", [
    lambda s: generate_er(300, 6.0, seed=s),
    lambda s: generate_ba(300, 3, seed=s),
    lambda s: generate_ws(300, 6, 0.3, seed=s),
])
def test_generators_deterministic_and_consistent(make):
    a = make(42)
    b = make(42)
    assert a.adjacency == b.adjacency
    # handshake: degree sum equals twice the edge count
    assert a.degrees.sum() == 2 * a.edge_count
    assert a.is_connected()


def test_empirical_distribution_point_masses():
    triangle = generate_ba(3, 2, seed=0)
    d = empirical_degree_distribution(triangle)
    assert d.support == (2,) and d.mass == (1.0,)
    ring = generate_ws(20, 4, 0.0, seed=1)
    d = empirical_degree_distribution(ring)
    assert d.support == (4,) and d.mass == (1.0,)


def test_empirical_distribution_sums_to_one():
    g = generate_ba(500, 2, seed=9)
    d = empirical_degree_distribution(g)
    assert abs(sum(d.mass) - 1.0) <= 1e-12


def test_size_biased_point_mass_is_fixed_point():
    d = DegreeDistribution((7,), (1.0,))
    q = size_biased(d)
    assert q.support == (7,) and q.mass == (1.0,)
    # and applying it twice still changes nothing
    assert size_biased(q).mass == (1.0,)


def test_size_biased_two_point_example():
    d = DegreeDistribution((1, 3), (0.5, 0.5))
    q = size_biased(d)
    assert q.mass[0] == pytest.approx(0.25, abs=1e-15)
    assert q.mass[1] == pytest.approx(0.75, abs=1e-15)


def test_size_biased_not_involution_in_general():
    d = DegreeDistribution((1, 3), (0.5, 0.5))
    qq = size_biased(size_biased(d))
    assert max(abs(a - b) for a, b in zip(qq.mass, d.mass)) > 0.05


def test_size_biased_power_law_shifts_exponent():
    # pi(k) ~ k^-gamma on a truncated support turns into q(k) ~ k^-(gamma-1):
    # the per-degree ratio q/pi must be proportional to k
    gamma = 2.5
    support = tuple(range(1, 40))
    weights = [k ** -gamma for k in support]
    total = sum(weights)
    d = DegreeDistribution(support, tuple(w / total for w in weights))
    q = size_biased(d)
    ratios = [qm / dm / k for k, dm, qm in zip(support, d.mass, q.mass)]
    assert max(ratios) - min(ratios) <= 1e-12
    assert abs(sum(q.mass) - 1.0) <= 1e-12


def test_degree_distribution_validation():
    with pytest.raises(ValueError):
        DegreeDistribution((0, 2), (0.5, 0.5))
    with pytest.raises(ValueError):
        DegreeDistribution((1, 2), (0.6, 0.6))
    with pytest.raises(ValueError):
        DegreeDistribution((2, 1), (0.5, 0.5))


def test_edge_list_round_trip():
    g = generate_ws(40, 4, 0.5, seed=8)
    text = g.to_edge_list_text()
    lines = text.strip().split("\n")
    m, e = (int(t) for t in lines[0].split())
    assert (m, e) == (40, g.edge_count)
    pairs = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
    assert all(u < v for u, v in pairs)
    assert pairs == sorted(pairs)
    back = SwarmGraph.from_edge_list_text(text)
    assert back.adjacency == g.adjacency
