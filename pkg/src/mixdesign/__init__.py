"""Energy-aware mixing matrix design for decentralized learning."""

__version__ = "0.1.0"

from .bilevel import ConvergenceModel, SweepResult, iterations_to_epsilon, sweep
from .cost import CostModel, feasible, max_node_cost, node_costs
from .ramanujan import RegularGraphSpec, degree_budget, is_ramanujan, ramanujan_mixing, random_regular
from .solver import SolverConfig, SolveResult, brute_force_min_rho, solve_min_rho
from .sparsifier import GreedyOutcome, greedy_sparsify
from .spectral import (
    MixingDesign,
    MixingDistribution,
    eig_symmetric,
    laplacian,
    rho_deterministic,
    rho_randomized,
    validate_rho_bounds,
)
from .sim import QuadraticTask, TrainingTrace, iterations_to_target, make_quadratic_task, run_dpsgd
from .topology import Topology, incidence_matrix, is_connected, node_degrees, parse_topology, serialize_topology
