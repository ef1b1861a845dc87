"""Per-node energy model: computation plus one charge per active incident link."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Topology

# |alpha| above this counts as an activated link, everywhere in the package.
ACTIVE_TOL = 1e-9
BUDGET_SLACK = 1e-12


def active_mask(alpha) -> np.ndarray:
    return np.abs(np.asarray(alpha, dtype=float)) > ACTIVE_TOL


@dataclass(frozen=True)
class CostModel:
    comp: np.ndarray  # Wh per iteration, per node
    comm: np.ndarray  # Wh per iteration per endpoint, per link

    def __post_init__(self):
        comp = np.asarray(self.comp, dtype=float).reshape(-1)
        comm = np.asarray(self.comm, dtype=float).reshape(-1)
        if np.any(comp < 0) or np.any(comm < 0):
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "comp", comp)
        object.__setattr__(self, "comm", comm)

    @classmethod
    def from_topology(cls, t: Topology) -> "CostModel":
        return cls(t.comp_cost.copy(), t.comm_cost.copy())

    @classmethod
    def uniform(cls, t: Topology, comp: float, comm: float) -> "CostModel":
        return cls(np.full(t.m, float(comp)), np.full(t.n_links, float(comm)))

    def check(self, t: Topology) -> None:
        if self.comp.shape != (t.m,) or self.comm.shape != (t.n_links,):
            raise ValueError(
                f"cost model shape ({self.comp.size} nodes, {self.comm.size} links) "
                f"does not match topology ({t.m}, {t.n_links})"
            )


def node_costs_from_mask(t: Topology, cost: CostModel, mask) -> np.ndarray:
    cost.check(t)
    mask = np.asarray(mask, dtype=bool)
    out = cost.comp.copy()
    if t.n_links:
        u, v = t.endpoints
        charged = np.where(mask, cost.comm, 0.0)
        np.add.at(out, u, charged)
        np.add.at(out, v, charged)
    return out


def node_costs(t: Topology, cost: CostModel, alpha) -> np.ndarray:
    """c_i(alpha) = c^a_i + sum of c^b over incident links with |alpha_e| > ACTIVE_TOL."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (t.n_links,):
        raise ValueError(f"alpha has length {alpha.size}, topology has {t.n_links} links")
    return node_costs_from_mask(t, cost, active_mask(alpha))


def expected_node_costs(t: Topology, cost: CostModel, alphas, probs) -> np.ndarray:
    """Probability-weighted node costs for a randomized design."""
    return sum(float(p) * node_costs(t, cost, a) for a, p in zip(alphas, probs))


def max_node_cost(costs) -> float:
    return float(np.max(costs))


def feasible(costs, budget: float) -> bool:
    return bool(np.all(np.asarray(costs) <= budget + BUDGET_SLACK))
