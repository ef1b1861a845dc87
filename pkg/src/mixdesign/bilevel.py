"""Iteration-count model K(rho) and the upper-level sweep over the budget.

K(rho) is only known up to a constant factor, so it serves as a ranking model
for choosing the budget that minimizes ``budget * K(rho_budget)``; it is not a
wall-clock predictor.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cost import CostModel, active_mask, feasible, node_costs
from .ramanujan import RamanujanError, RegularGraphSpec, degree_budget, ramanujan_mixing, rho_bound
from .solver import SolverConfig
from .sparsifier import greedy_sparsify
from .spectral import MixingDesign, rho_deterministic
from .topology import Topology

METHODS = ("greedy", "ramanujan")
# a disconnected design has rho == 1 up to roundoff
RHO_MARGIN = 1e-9


@dataclass(frozen=True)
class ConvergenceModel:
    smoothness: float = 1.0   # l
    sigma: float = 1.0        # gradient-noise scale
    m1: float = 0.0           # noise growth with gradient norm
    zeta: float = 1.0         # data heterogeneity
    m2: float = 0.0           # heterogeneity growth with gradient norm
    epsilon: float = 0.1
    initial_gap: float = 1.0  # F(x_bar^(1)) - F_inf
    constant: float = 1.0     # factor hidden by the O(.)
    nodes: int = 10

    def __post_init__(self):
        for name in ("smoothness", "sigma", "zeta", "epsilon", "initial_gap", "constant"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.m1 < 0 or self.m2 < 0:
            raise ValueError("m1 and m2 must be nonnegative")
        if self.nodes < 1:
            raise ValueError("nodes must be >= 1")


def iterations_to_epsilon(cm: ConvergenceModel, rho: float) -> float:
    """Iterations D-PSGD needs for an eps-small average squared gradient.

    Returns ``math.inf`` when ``rho >= 1`` (no convergence guarantee).
    """
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    if rho >= 1:
        return math.inf
    gap = 1.0 - rho
    eps = cm.epsilon
    noise = cm.sigma**2 / (cm.nodes * eps**2)
    mixing = (cm.zeta * math.sqrt(cm.m1 + 1) + cm.sigma * math.sqrt(gap)) / (gap * eps**1.5)
    tail = math.sqrt((cm.m2 + 1) * (cm.m1 + 1)) / (gap * eps)
    return cm.smoothness * cm.initial_gap * cm.constant * (noise + mixing + tail)


@dataclass
class SweepRow:
    budget: float
    design: MixingDesign | None
    rho: float
    K: float
    product: float
    feasible: bool
    max_node_cost: float
    links_active: int
    degree: int | None = None
    note: str = ""

    def csv_row(self) -> dict:
        return {
            "delta_wh": repr(float(self.budget)),
            "rho": repr(float(self.rho)),
            "K": repr(float(self.K)),
            "product": repr(float(self.product)),
            "feasible": int(self.feasible),
            "max_node_cost_wh": repr(float(self.max_node_cost)),
            "links_active": self.links_active,
        }


CSV_COLUMNS = ("delta_wh", "rho", "K", "product", "feasible", "max_node_cost_wh", "links_active")


@dataclass
class SweepResult:
    method: str
    rows: list[SweepRow] = field(default_factory=list)
    argmin: int | None = None
    diagnostic: str = ""

    @property
    def best(self) -> SweepRow | None:
        return None if self.argmin is None else self.rows[self.argmin]


def default_grid(t: Topology, cost: CostModel, n: int = 20) -> np.ndarray:
    """Log-spaced budgets from 'one link affordable' to full activation."""
    lo = float(cost.comp.min() + cost.comm.min())
    hi = float(node_costs(t, cost, np.ones(t.n_links)).max())
    if hi <= lo:
        return np.array([hi])
    return np.geomspace(lo, hi, n)


def _ramanujan_row(t, cost, cm, budget, seed, max_attempts):
    try:
        d = degree_budget(t, cost, budget)
    except ValueError as exc:
        return SweepRow(budget, None, math.nan, math.inf, math.inf, False, math.nan, 0, None, str(exc))
    d = min(d, t.m - 1)
    if (t.m * d) % 2:
        d -= 1  # parity: an odd-degree regular graph needs an even node count
    if d < 2:
        return SweepRow(budget, None, math.nan, math.inf, math.inf, False, math.nan, 0, d, "degree budget below 2")
    try:
        design = ramanujan_mixing(RegularGraphSpec(t.m, d, seed, max_attempts), base=t)
    except RamanujanError as exc:
        return SweepRow(budget, None, math.nan, math.inf, math.inf, False, math.nan, 0, d, str(exc))
    return _finish_row(design, t, cost, cm, budget, d)


def _greedy_row(t, cost, cm, budget, solver_cfg):
    if budget < cost.comp.max():
        return SweepRow(budget, None, math.nan, math.inf, math.inf, False, math.nan, 0, None, "budget below computation cost")
    out = greedy_sparsify(t, cost, budget, solver_cfg)
    if not out.success:
        return SweepRow(budget, None, math.nan, math.inf, math.inf, False, float(out.costs.max()), 0, None, out.failure)
    return _finish_row(out.design, t, cost, cm, budget, None)


def _finish_row(design, t, cost, cm, budget, d):
    # recompute everything from the emitted weights
    rho = rho_deterministic(design)
    costs = node_costs(t, cost, design.alpha)
    K = iterations_to_epsilon(cm, rho)
    ok = feasible(costs, budget) and rho < 1 - RHO_MARGIN
    return SweepRow(
        budget, design, rho, K, budget * K if ok else math.inf, ok,
        float(costs.max()), int(active_mask(design.alpha).sum()), d,
    )


def _run_row(args):
    method, t, cost, cm, budget, seed, solver_cfg, max_attempts = args
    if method == "ramanujan":
        return _ramanujan_row(t, cost, cm, budget, seed, max_attempts)
    return _greedy_row(t, cost, cm, budget, solver_cfg)


def sweep(
    t: Topology,
    cost: CostModel,
    cm: ConvergenceModel,
    grid=None,
    method: str = "greedy",
    seed: int = 0,
    solver_cfg: SolverConfig | None = None,
    jobs: int = 1,
    max_attempts: int = 1000,
) -> SweepResult:
    """Evaluate each budget independently and pick the feasible argmin of budget * K."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    cost.check(t)
    grid = default_grid(t, cost) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("budget grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("budget grid must be strictly ascending")
    cm = dataclasses.replace(cm, nodes=t.m)
    tasks = [(method, t, cost, cm, float(b), seed, solver_cfg, max_attempts) for b in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_row, tasks))
    else:
        rows = [_run_row(task) for task in tasks]

    result = SweepResult(method, rows)
    feas = [i for i, r in enumerate(rows) if r.feasible]
    if not feas:
        result.diagnostic = "no budget in the grid admits a feasible design"
    else:
        result.argmin = min(feas, key=lambda i: (rows[i].product, i))
    return result


def ramanujan_bound_ok(row: SweepRow) -> bool:
    return row.degree is None or not row.feasible or row.rho <= rho_bound(row.degree) + 1e-9
