import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from mixdesign.cost import CostModel, active_mask, node_costs
from mixdesign.solver import SolverConfig
from mixdesign.sparsifier import (
    BUDGET_UNREACHABLE,
    DISCONNECTION,
    eligible_links,
    greedy_sparsify,
    replay_removals,
)
from mixdesign.topology import Topology, complete_graph, is_connected, node_degrees, random_geometric, star_graph

from strategies import topologies

FAST = SolverConfig(max_iterations=800)


def unit(t):
    return CostModel.uniform(t, comp=0.0, comm=1.0)


def feasible_supports(t, budget, cost):
    """Every connected spanning support whose node costs fit the budget."""
    out = []
    for r in range(t.m - 1, t.n_links + 1):
        for sub in itertools.combinations(range(t.n_links), r):
            mask = np.zeros(t.n_links, dtype=bool)
            mask[list(sub)] = True
            if is_connected(t, mask) and np.all(node_costs(t, cost, mask.astype(float)) <= budget + 1e-12):
                out.append(frozenset(sub))
    return out


def test_star_fails_and_no_design_exists():
    t = star_graph(4)
    out = greedy_sparsify(t, unit(t), 2.0, FAST)
    assert not out.success
    assert out.failure == DISCONNECTION
    assert out.design is None
    assert feasible_supports(t, 2.0, unit(t)) == []


def test_k4_degree_two():
    t = complete_graph(4)
    out = greedy_sparsify(t, unit(t), 2.0, FAST)
    assert out.success
    support = frozenset(np.flatnonzero(active_mask(out.design.alpha)).tolist())
    assert support in feasible_supports(t, 2.0, unit(t))
    assert node_degrees(t, out.design.active).max() <= 2
    assert out.design.rho_tilde < 1


def test_k3_needs_no_removal():
    t = complete_graph(3)
    out = greedy_sparsify(t, unit(t), 2.0, FAST)
    assert out.success and out.removals == []
    assert out.rho_tilde <= 1e-4


def test_budget_below_computation_cost_is_unreachable():
    t = complete_graph(4)
    cost = CostModel.uniform(t, comp=5.0, comm=1.0)
    out = greedy_sparsify(t, cost, 2.0, FAST)
    assert out.failure in (BUDGET_UNREACHABLE, DISCONNECTION)
    assert not out.success


def test_rejects_nonpositive_budget():
    t = complete_graph(3)
    with pytest.raises(ValueError):
        greedy_sparsify(t, unit(t), 0.0)


def test_eligible_links_order_and_filter():
    t = complete_graph(4)
    alpha = np.array([0.3, 0.1, 0.2, 0.0, 0.1, 0.4])
    frozen = np.zeros(6, dtype=bool)
    frozen[5] = True
    costs = np.array([10.0, 0.0, 0.0, 0.0])  # only node 0 is over budget
    cand = eligible_links(t, alpha, frozen, costs, 1.0)
    # node 0 touches links 0, 1, 2; sorted by |alpha| then index
    assert cand.tolist() == [1, 2, 0]


def test_history_replays_with_resolve():
    t = random_geometric(10, 0.55, seed=4, comm_cost=1.0)
    out = greedy_sparsify(t, unit(t), 3.0, FAST)
    assert out.removals
    assert replay_removals(out) == []
    assert replay_removals(out, resolve=True, solver_cfg=FAST) == []


def test_replay_detects_tampering():
    t = random_geometric(10, 0.55, seed=4, comm_cost=1.0)
    out = greedy_sparsify(t, unit(t), 3.0, FAST)
    bad = out.removals[0]
    bad.abs_alpha += 0.1
    assert replay_removals(out)


@settings(max_examples=12)
@given(topologies(min_nodes=4, max_nodes=6, connected=True))
def test_success_is_feasible_connected_and_monotone(t):
    cost = unit(t)
    budget = 2.0
    out = greedy_sparsify(t, cost, budget, FAST)
    assert out.solves == len(out.removals) + 1
    frozen = np.zeros(t.n_links, dtype=bool)
    for r in out.removals:
        frozen[r.index] = True
    if out.success:
        alpha = out.design.alpha
        assert np.all(alpha[frozen] == 0)
        assert np.all(node_costs(t, cost, alpha) <= budget + 1e-12)
        assert is_connected(t, out.design.active)
        assert out.design.rho_tilde < 1
    assert replay_removals(out) == []
    # zeroing links can only shrink the feasible set of the inner problem
    seq = [r.rho_tilde_before for r in out.removals] + [out.rho_tilde]
    assert all(b >= a - 2e-3 for a, b in zip(seq, seq[1:]))


def test_outcome_serializes():
    t = complete_graph(4)
    d = greedy_sparsify(t, unit(t), 2.0, FAST).to_dict()
    assert d["success"] and "design" in d
    assert len(d["node_costs_wh"]) == 4
