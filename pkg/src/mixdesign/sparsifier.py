"""Greedy budget-driven sparsification of an optimized mixing design.

Starting from the unconstrained optimum, repeatedly zero the active link of
smallest |alpha| that touches an over-budget node, then re-optimize the
remaining weights.  Deciding whether any connected degree-bounded subgraph
exists is NP-hard, so a reported failure does not prove infeasibility.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost import CostModel, active_mask, feasible, node_costs
from .solver import SolverConfig, solve_min_rho
from .spectral import MixingDesign
from .topology import Topology, is_connected

DISCONNECTION = "disconnection"
BUDGET_UNREACHABLE = "budget-unreachable"


@dataclass
class Removal:
    link: tuple[int, int]
    index: int
    abs_alpha: float
    rho_tilde_before: float
    # weights of the solve that justified this removal
    alpha_before: np.ndarray = field(repr=False, default=None)


@dataclass
class GreedyOutcome:
    topology: Topology
    budget: float
    design: MixingDesign | None
    removals: list[Removal] = field(default_factory=list)
    failure: str | None = None
    costs: np.ndarray | None = None
    rho_tilde: float = float("nan")
    # state at the last step, kept so failures can be audited
    last_alpha: np.ndarray | None = None
    frozen: np.ndarray | None = None
    solves: int = 0
    cost: CostModel | None = field(repr=False, default=None)

    @property
    def success(self) -> bool:
        return self.failure is None

    def to_dict(self) -> dict:
        out = {
            "budget_wh": self.budget,
            "success": self.success,
            "failure": self.failure,
            "rho_tilde": self.rho_tilde,
            "solves": self.solves,
            "node_costs_wh": None if self.costs is None else [float(c) for c in self.costs],
            "removals": [
                {"u": r.link[0], "v": r.link[1], "index": r.index, "abs_alpha": r.abs_alpha,
                 "rho_tilde_before": r.rho_tilde_before}
                for r in self.removals
            ],
        }
        if self.design is not None:
            out["design"] = self.design.to_dict()
        return out


def eligible_links(t: Topology, alpha, frozen, costs, budget: float) -> np.ndarray:
    """Indices of active, unfrozen links with an over-budget endpoint, sorted by (|alpha|, index)."""
    u, v = t.endpoints
    over = costs > budget + 1e-12
    cand = np.flatnonzero(active_mask(alpha) & ~frozen & (over[u] | over[v]))
    order = np.lexsort((cand, np.abs(alpha[cand])))
    return cand[order]


def greedy_sparsify(
    t: Topology,
    cost: CostModel,
    budget: float,
    solver_cfg: SolverConfig | None = None,
    max_steps: int | None = None,
) -> GreedyOutcome:
    if not budget > 0:
        raise ValueError("budget must be positive")
    cost.check(t)
    frozen = np.zeros(t.n_links, dtype=bool)
    outcome = GreedyOutcome(t, budget, None, frozen=frozen, cost=cost)
    alpha = None
    steps = t.n_links if max_steps is None else max_steps
    for _ in range(steps + 1):
        res = solve_min_rho(t, frozen, solver_cfg, init=alpha)
        outcome.solves += 1
        alpha = res.alpha
        costs = node_costs(t, cost, alpha)
        outcome.last_alpha, outcome.costs, outcome.rho_tilde = alpha, costs, res.rho_tilde
        if feasible(costs, budget):
            outcome.design = MixingDesign(t, alpha)
            return outcome

        cand = eligible_links(t, alpha, frozen, costs, budget)
        if cand.size == 0:
            outcome.failure = BUDGET_UNREACHABLE
            return outcome
        support = active_mask(alpha) & ~frozen
        chosen = None
        for e in cand:
            support[e] = False
            ok = is_connected(t, support)
            support[e] = True
            if ok:
                chosen = int(e)
                break
        if chosen is None:
            outcome.failure = DISCONNECTION
            return outcome
        outcome.removals.append(Removal(t.links[chosen], chosen, float(abs(alpha[chosen])), res.rho_tilde, alpha.copy()))
        frozen[chosen] = True
    outcome.failure = BUDGET_UNREACHABLE
    return outcome


def replay_removals(outcome: GreedyOutcome, resolve: bool = False, solver_cfg: SolverConfig | None = None) -> list[str]:
    """Check that every recorded removal was the smallest-|alpha| removable eligible link.

    By default the check runs on the weight snapshots stored with each
    removal.  With ``resolve=True`` every step is re-solved from scratch as
    well and the recomputed weights must match the snapshots.  Returns a list
    of problems (empty when the history replays cleanly).
    """
    t = outcome.topology
    cost = outcome.cost or CostModel.from_topology(t)
    frozen = np.zeros(t.n_links, dtype=bool)
    problems = []
    prev = None
    for step, rem in enumerate(outcome.removals):
        alpha = rem.alpha_before
        if resolve:
            res = solve_min_rho(t, frozen, solver_cfg, init=prev)
            if not np.allclose(res.alpha, alpha, rtol=0, atol=1e-12):
                problems.append(f"step {step}: re-solve does not reproduce the recorded weights")
            alpha = res.alpha
        if np.any(alpha[frozen] != 0):
            problems.append(f"step {step}: frozen link carries weight")
        costs = node_costs(t, cost, alpha)
        cand = eligible_links(t, alpha, frozen, costs, outcome.budget)
        if rem.index not in cand:
            problems.append(f"step {step}: link {rem.link} was not eligible")
        else:
            support = active_mask(alpha) & ~frozen
            for e in cand:
                if e == rem.index:
                    break
                support[e] = False
                if is_connected(t, support):
                    problems.append(f"step {step}: link {t.links[e]} with smaller |alpha| was removable")
                support[e] = True
            if abs(abs(alpha[rem.index]) - rem.abs_alpha) > 1e-12:
                problems.append(f"step {step}: |alpha| mismatch {abs(alpha[rem.index])} vs {rem.abs_alpha}")
        frozen[rem.index] = True
        prev = alpha
    return problems
