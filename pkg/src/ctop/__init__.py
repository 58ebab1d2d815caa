"""Planning budget-constrained sampling routes for robot teams (correlated team orienteering)."""

from .instance import (
    BudgetSpec,
    CorrelationGraph,
    InvalidParameterError,
    ProblemInstance,
    Vertex,
    budget_for_team,
    build_correlation,
    build_grid_instance,
    kernel_weight,
    max_single_robot_budget,
)
from .solution import (
    Chromosome,
    FeasibilityReport,
    Gene,
    InvalidInputError,
    TeamSolution,
    check_feasibility,
    path_cost,
    team_utility,
    two_opt,
)
from .ga import GaParams, solve

__version__ = "0.1.0"
