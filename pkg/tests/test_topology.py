import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixdesign.spectral import laplacian
from mixdesign.topology import (
    Topology,
    TopologyError,
    complete_graph,
    incidence_matrix,
    is_connected,
    node_degrees,
    parse_topology,
    path_graph,
    random_geometric,
    serialize_topology,
    star_graph,
)

from strategies import masks, topologies


def test_parse_minimal_path():
    t = parse_topology("0 1\n1 2")
    assert t.m == 3
    assert t.links == ((0, 1), (1, 2))


def test_parse_costs_from_document():
    t = parse_topology("#node 0 0.0003342\n0 1 0.0138\n")
    assert t.comm_cost[0] == 0.0138
    assert t.comp_cost[0] == 0.0003342
    assert t.comp_cost[1] == 0.0


def test_parse_defaults_and_directives():
    t = parse_topology("#comp_cost 0.5\n#comm_cost 2\n# a comment\n\n1 0\n1 2 3.0\n")
    assert t.links == ((0, 1), (1, 2))
    np.testing.assert_array_equal(t.comm_cost, [2.0, 3.0])
    np.testing.assert_array_equal(t.comp_cost, [0.5, 0.5, 0.5])


@pytest.mark.parametrize(
    "text, msg",
    [
        ("0 0", "self-loop"),
        ("0 1\n1 0", "duplicate"),
        ("0 1 -1", "nonnegative"),
        ("#node 0 -0.1\n0 1", "nonnegative"),
        ("", "at least 2"),
        ("#node 0 1", "at least 2"),
        ("0 2", "dense"),
        ("0 x", "bad node"),
        ("0 1 2 3", "expected"),
    ],
)
def test_parse_rejects(text, msg):
    with pytest.raises(TopologyError, match=msg):
        parse_topology(text)


def test_topology_invariants_enforced():
    with pytest.raises(TopologyError):
        Topology(1, (), np.zeros(0), np.zeros(1))
    with pytest.raises(TopologyError):
        Topology(3, ((1, 0),), np.ones(1), np.zeros(3))
    with pytest.raises(TopologyError):
        Topology(3, ((0, 1),), -np.ones(1), np.zeros(3))


def test_incidence_single_link():
    B = incidence_matrix(Topology.from_links(2, [(0, 1)]))
    np.testing.assert_array_equal(B, [[1.0], [-1.0]])


def test_incidence_path_laplacian():
    t = path_graph(3)
    B = incidence_matrix(t)
    np.testing.assert_array_equal(B @ np.diag([1.0, 1.0]) @ B.T, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


@given(topologies(), st.data())
def test_incidence_columns_and_laplacian_agree(t, data):
    B = incidence_matrix(t)
    if t.n_links:
        assert np.all((B == 1).sum(axis=0) == 1)
        assert np.all((B == -1).sum(axis=0) == 1)
        assert np.all((B != 0).sum(axis=0) == 2)
    alpha = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=t.n_links, max_size=t.n_links)))
    np.testing.assert_allclose(laplacian(t, alpha), B @ np.diag(alpha) @ B.T, atol=1e-12)


def test_zero_weights_give_zero_laplacian():
    t = complete_graph(4)
    assert not laplacian(t, np.zeros(t.n_links)).any()


def test_connectivity_examples():
    p3 = path_graph(3)
    assert is_connected(p3, [True, True])
    assert not is_connected(p3, [True, False])
    assert is_connected(star_graph(4), [True, True, True])
    assert not is_connected(star_graph(4), [True, True, False])


def test_degree_examples():
    np.testing.assert_array_equal(node_degrees(complete_graph(4)), [3, 3, 3, 3])
    np.testing.assert_array_equal(node_degrees(path_graph(3)), [1, 2, 1])
    np.testing.assert_array_equal(node_degrees(path_graph(3), [False, False]), [0, 0, 0])


def test_mask_length_checked():
    with pytest.raises(TopologyError):
        is_connected(path_graph(3), [True])


@given(topologies())
def test_roundtrip(t):
    assert parse_topology(serialize_topology(t)) == t


@given(topologies(), st.data())
def test_degree_sum_is_twice_active_links(t, data):
    mask = data.draw(masks(t))
    assert node_degrees(t, mask).sum() == 2 * sum(mask)


@given(topologies(max_nodes=6), st.data())
def test_connectivity_monotone(t, data):
    mask = np.array(data.draw(masks(t)), dtype=bool)
    if is_connected(t, mask):
        for e in np.flatnonzero(~mask):
            bigger = mask.copy()
            bigger[e] = True
            assert is_connected(t, bigger)


def test_random_geometric_connected_and_reproducible():
    a = random_geometric(33, 0.38, seed=4)
    b = random_geometric(33, 0.38, seed=4)
    assert a == b
    assert is_connected(a)
