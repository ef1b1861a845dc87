import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixdesign.cost import CostModel
from mixdesign.ramanujan import (
    RamanujanError,
    RegularGraphSpec,
    degree_budget,
    embed_in_complete,
    is_ramanujan,
    ramanujan_mixing,
    random_regular,
    regular_degree,
    rho_bound,
)
from mixdesign.spectral import rho_deterministic
from mixdesign.topology import Topology, complete_graph, cycle_graph, node_degrees, path_graph


def test_k4_is_the_only_3_regular_graph_on_4_nodes():
    t = random_regular(RegularGraphSpec(4, 3))
    assert t.links == complete_graph(4).links


@pytest.mark.parametrize("m, d", [(5, 3), (7, 1), (4, 4), (3, 5)])
def test_spec_rejects_bad_parameters(m, d):
    with pytest.raises(ValueError):
        RegularGraphSpec(m, d)


def test_two_regular_cover():
    t = random_regular(RegularGraphSpec(6, 2, rng_seed=3))
    assert np.all(node_degrees(t) == 2)


@settings(max_examples=30)
@given(st.integers(5, 40), st.integers(2, 6), st.integers(0, 10_000))
def test_random_regular_is_simple_and_regular(m, d, seed):
    if d >= m or (m * d) % 2:
        return
    t = random_regular(RegularGraphSpec(m, d, seed))
    assert regular_degree(t) == d
    assert len(set(t.links)) == t.n_links  # from_links already rejects loops


def test_same_seed_same_graph():
    spec = RegularGraphSpec(30, 4, rng_seed=11)
    assert random_regular(spec).links == random_regular(spec).links


def test_is_ramanujan_examples():
    assert is_ramanujan(cycle_graph(4))
    assert is_ramanujan(complete_graph(4))
    two_k4 = Topology.from_links(8, list(complete_graph(4).links) + [(u + 4, v + 4) for u, v in complete_graph(4).links])
    # second eigenvalue 0 lies outside [3 - 2 sqrt 2, 3 + 2 sqrt 2]
    assert not is_ramanujan(two_k4)


def test_regular_degree_rejects_irregular():
    with pytest.raises(ValueError):
        regular_degree(path_graph(4))


def test_k4_mixing_rho():
    design = ramanujan_mixing(RegularGraphSpec(4, 3))
    assert rho_deterministic(design) == pytest.approx(1 / 9, abs=1e-12)
    assert rho_deterministic(design) <= rho_bound(3)


@pytest.mark.parametrize("m, d", [(20, 3), (20, 4), (50, 5), (30, 6)])
def test_mixing_meets_bound(m, d):
    design = ramanujan_mixing(RegularGraphSpec(m, d, rng_seed=1))
    assert design.topology.n_links == m * (m - 1) // 2
    deg = node_degrees(design.topology, design.active)
    assert np.all(deg == d)
    assert np.allclose(design.alpha[design.active], 1 / d)
    assert rho_deterministic(design) <= rho_bound(d) + 1e-9


def test_two_regular_interval_is_degenerate():
    # for d = 2 the interval is [0, 4], so even a disconnected cover passes
    two_c3 = Topology.from_links(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert is_ramanujan(two_c3)


def test_exhausted_attempts_raise(monkeypatch):
    import mixdesign.ramanujan as mod

    monkeypatch.setattr(mod, "is_ramanujan", lambda t: False)
    with pytest.raises(RamanujanError):
        ramanujan_mixing(RegularGraphSpec(10, 3, max_attempts=3))


def test_embed_requires_complete_base():
    with pytest.raises(ValueError):
        ramanujan_mixing(RegularGraphSpec(4, 3), base=cycle_graph(4))
    d = embed_in_complete(cycle_graph(4), 0.5)
    assert d.active.sum() == 4


def test_degree_budget():
    t = complete_graph(5)
    unit = CostModel.uniform(t, comp=0.0, comm=1.0)
    assert degree_budget(t, unit, 3.0) == 3
    assert degree_budget(t, unit, 0.5) == 0
    hetero = CostModel(np.array([0.0, 1.0, 0, 0, 0]), np.ones(t.n_links))
    assert degree_budget(t, hetero, 3.0) == 2


def test_degree_budget_floors_exact_multiples():
    t = complete_graph(33)
    cost = CostModel.uniform(t, comp=0.0003342, comm=0.0138)
    assert degree_budget(t, cost, 0.0003342 + 3 * 0.0138) == 3


def test_degree_budget_errors():
    t = complete_graph(4)
    with pytest.raises(ValueError):
        degree_budget(t, CostModel.uniform(t, comp=2.0, comm=1.0), 1.0)
    mixed = CostModel(np.zeros(4), np.arange(1.0, t.n_links + 1))
    with pytest.raises(ValueError):
        degree_budget(t, mixed, 10.0)
