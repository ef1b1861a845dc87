import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixdesign.cost import CostModel, expected_node_costs, feasible, max_node_cost, node_costs
from mixdesign.topology import complete_graph, star_graph

from strategies import masks, topologies

CA, CB = 0.0003342, 0.0138


def test_three_active_links():
    t = complete_graph(4, comm_cost=CB, comp_cost=CA)
    c = node_costs(t, CostModel.from_topology(t), np.full(t.n_links, 0.25))
    # 0.0003342 + 3 * 0.0138
    np.testing.assert_allclose(c, 0.0417342, rtol=0, atol=1e-15)


def test_zero_weights_cost_only_computation():
    t = complete_graph(5, comm_cost=CB, comp_cost=CA)
    np.testing.assert_array_equal(node_costs(t, CostModel.from_topology(t), np.zeros(t.n_links)), CA)


def test_star_center():
    t = star_graph(6, comm_cost=1.0, comp_cost=0.25)
    c = node_costs(t, CostModel.from_topology(t), [0.1, 0.2, 0.0, 0.3, 1e-10])
    assert c[0] == pytest.approx(3.25)
    np.testing.assert_allclose(c[1:], [1.25, 1.25, 0.25, 1.25, 0.25])


def test_feasibility():
    assert feasible([1, 2, 3], 3)
    assert not feasible([1, 2, 3.0001], 3)
    assert max_node_cost([1, 2, 3]) == 3


def test_empty_activation_feasible():
    t = complete_graph(4, comm_cost=CB, comp_cost=CA)
    assert feasible(node_costs(t, CostModel.from_topology(t), np.zeros(t.n_links)), CA)


def test_shape_mismatch():
    t = complete_graph(4)
    with pytest.raises(ValueError):
        node_costs(t, CostModel(np.zeros(3), np.ones(6)), np.zeros(6))
    with pytest.raises(ValueError):
        node_costs(t, CostModel.from_topology(t), np.zeros(5))


def test_expected_costs():
    t = star_graph(3)
    cost = CostModel.from_topology(t)
    c = expected_node_costs(t, cost, [np.array([1.0, 1.0]), np.zeros(2)], [0.25, 0.75])
    np.testing.assert_allclose(c, [0.5, 0.25, 0.25])


@given(topologies(), st.data())
def test_monotone_in_support(t, data):
    cost = CostModel.from_topology(t)
    small = np.array(data.draw(masks(t)), dtype=bool)
    extra = np.array(data.draw(masks(t)), dtype=bool)
    big = small | extra
    assert np.all(node_costs(t, cost, big.astype(float)) >= node_costs(t, cost, small.astype(float)))


@given(topologies(), st.data())
def test_total_energy_identity(t, data):
    cost = CostModel.from_topology(t)
    mask = np.array(data.draw(masks(t)), dtype=bool)
    total = node_costs(t, cost, mask.astype(float)).sum()
    expected = cost.comp.sum() + 2 * cost.comm[mask].sum()
    assert total == pytest.approx(expected, abs=1e-12)
