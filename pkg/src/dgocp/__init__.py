"""Discontinuous Galerkin time discretization for ODE optimal control."""

from .basis import (
    QuadratureRule,
    default_rule,
    deriv_inner_matrix,
    gauss_rule,
    legendre_deriv,
    legendre_deriv_table,
    legendre_eval,
    legendre_table,
    mass_diagonal,
)
from .convergence import ConvergenceReport, ConvergenceRow, run_convergence
from .ivp import IVPRight, NewtonOptions, SolverFailure, reverse_dg, solve_backward, solve_forward
from .mesh import (
    ControlFunction,
    DGFunction,
    Partition,
    l2_error,
    load_dg,
    make_uniform_partition,
    modal_from_values,
    project_l2,
    save_dg,
    total_variation,
)
from .ocp import (
    OCProblem,
    ReducedEvaluation,
    adjoint_residual,
    cost,
    evaluate,
    hessian_form,
    pair_with_direction,
    reduced_gradient,
    solve_adjoint,
    solve_state,
    tangent_solve,
)
from .optimize import OptimizeOptions, OptimizeReport, StallError, minimize, stationarity
from .problems import BuiltinProblem, get_builtin, linear_lq, nonlinear_quadratic

__all__ = [
    "QuadratureRule", "default_rule", "deriv_inner_matrix", "gauss_rule",
    "legendre_deriv", "legendre_deriv_table", "legendre_eval",
    "legendre_table", "mass_diagonal",
    "ConvergenceReport", "ConvergenceRow", "run_convergence",
    "IVPRight", "NewtonOptions", "SolverFailure", "reverse_dg",
    "solve_backward", "solve_forward",
    "ControlFunction", "DGFunction", "Partition", "l2_error", "load_dg",
    "make_uniform_partition", "modal_from_values", "project_l2", "save_dg",
    "total_variation",
    "OCProblem", "ReducedEvaluation", "adjoint_residual", "cost", "evaluate",
    "hessian_form", "pair_with_direction", "reduced_gradient", "solve_adjoint",
    "solve_state", "tangent_solve",
    "OptimizeOptions", "OptimizeReport", "StallError", "minimize", "stationarity",
    "BuiltinProblem", "get_builtin", "linear_lq", "nonlinear_quadratic",
]
