"""Quadratic-Gaussian equilibria of linear-quadratic N-player and mean-field games."""
from .discounted import check_feasibility, feasibility_threshold, solve, solve_discounted
from .ergodic import QGSolution, hjb_kfp_residual, solve_ergodic
from .game_model import (CostStructure, GameSpec, MFCost, finite_game, scaled_costs,
                         validate_assumptions)
from .limits import (cheap_control_limit, commuting_diagram_check, deterministic_limit,
                     mean_field_convergence, v_family_solve, vanishing_discount_limit)
from .riccati import AREProblem, solve_are_selected
from .simulator import FeedbackLaw, SimConfig, equilibrium_law, estimate_cost, nash_deviation_test

__version__ = "0.1.0"
