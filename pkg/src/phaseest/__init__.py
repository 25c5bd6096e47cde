"""Feedback filters for adaptive estimation of an Ornstein-Uhlenbeck optical phase.

Exponential (PRL), Kalman and guaranteed-cost robust filters, their exact
steady-state error covariances, and a Monte Carlo check of those values.
"""

__version__ = "0.1.0"

from .closed_loop import augment, error_covariance, sweep_delta, sweep_lambda
from .filters import (
    FilterKind,
    FirstOrderFilter,
    analytic_cov_kalman,
    analytic_cov_prl,
    chi_opt,
    design_kalman,
    design_prl,
)
from .lti import StabilityError, is_hurwitz, solve_kalman_riccati, solve_lyapunov, solve_robust_riccati
from .model import ParameterError, SystemParams, UncertaintyModel, nominal, validate
from .robust import RobustDesign, design_robust, epsilon_opt, robust_bound_curve

__all__ = [
    "FilterKind",
    "FirstOrderFilter",
    "ParameterError",
    "RobustDesign",
    "StabilityError",
    "SystemParams",
    "UncertaintyModel",
    "analytic_cov_kalman",
    "analytic_cov_prl",
    "augment",
    "chi_opt",
    "design_kalman",
    "design_prl",
    "design_robust",
    "epsilon_opt",
    "error_covariance",
    "is_hurwitz",
    "nominal",
    "robust_bound_curve",
    "solve_kalman_riccati",
    "solve_lyapunov",
    "solve_robust_riccati",
    "sweep_delta",
    "sweep_lambda",
    "validate",
]
