"""cfpart: decompose a cell-free wireless network (K UEs, L BSs) into
disjoint joint-processing subnetworks that maximize sum ergodic capacity
under a per-subnetwork UE cap."""

from .baselines import (EnumerationBudget, brute_force, kmeans_bs_centric,
                        kmeans_ue_centric, stirling2)
from .capacity import (CapacityReport, cut_value, evaluate_decomposition,
                       quadratic_objective, subnetwork_capacity_approx,
                       subnetwork_capacity_mc, sum_capacity_approx,
                       sum_capacity_lower_bound, sum_capacity_mc, sumcut)
from .errors import (EnumerationBudgetExceeded, InfeasibleProblem,
                     InvalidDecomposition)
from .netmodel import (BipartiteGraph, ChannelModel, NetworkLayout,
                       build_graph, gen_layout, graph_from_weights, path_gains)
from .partition import (Decomposition, Violation, from_matrix, optimal_m,
                        to_matrix, validate)
from .solver_bisect import BisectPlan, bisect_decompose, bisect_targets, size_profile
from .solver_bnb import (ColumnBounds, SolveReport, SolverConfig,
                         relax_lower_bound, round_and_repair, solve_p4, solve_p5)

__version__ = "0.1.0"

__all__ = [
    "BipartiteGraph", "BisectPlan", "CapacityReport", "ChannelModel",
    "ColumnBounds", "Decomposition", "EnumerationBudget",
    "EnumerationBudgetExceeded", "InfeasibleProblem", "InvalidDecomposition",
    "NetworkLayout", "SolveReport", "SolverConfig", "Violation",
    "bisect_decompose", "bisect_targets", "brute_force", "build_graph",
    "cut_value", "evaluate_decomposition", "from_matrix", "gen_layout",
    "graph_from_weights", "kmeans_bs_centric", "kmeans_ue_centric",
    "optimal_m", "path_gains", "quadratic_objective", "relax_lower_bound",
    "round_and_repair", "size_profile", "solve_p4", "solve_p5", "stirling2",
    "subnetwork_capacity_approx", "subnetwork_capacity_mc",
    "sum_capacity_approx", "sum_capacity_lower_bound", "sum_capacity_mc",
    "sumcut", "to_matrix", "validate",
]
