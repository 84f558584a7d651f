"""Finite-time ruin probabilities for a correlated two-portfolio Brownian
risk model: exact formulas and bounds, regime-classified asymptotic
approximants, and Monte Carlo estimators that cross-validate each other.
"""

from .asymptotics import (
    AsymptoticApproximation,
    OptimizerResult,
    Regime,
    approximant,
    classify,
    critical_rho,
    crossing_exp_integral_limit,
    curvature_constant,
    drift_constant,
    exp_rates,
    gaussian_sum_limit,
    log_decay_rate,
    minimize_quad_form,
    t_star,
)
from .errors import NumericalError, ParameterError, RuinModelError
from .exact import (
    BoundsResult,
    ModelParams,
    amplification,
    independent_ruin,
    ruin_bounds,
    single_ruin,
)
from .gauss import (
    Matrix2,
    biv_normal_pdf,
    biv_survival,
    brownian_cov,
    level_weights,
    norm_cdf,
    norm_sf,
    quad_form,
)
from .montecarlo import (
    MCConfig,
    MCEstimate,
    PathGrid,
    derive_tilt,
    estimate_pickands_constant,
    mc_ruin,
    mc_ruin_importance,
    mc_ruin_resolution_study,
    sample_path,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticApproximation",
    "BoundsResult",
    "Matrix2",
    "MCConfig",
    "MCEstimate",
    "ModelParams",
    "NumericalError",
    "OptimizerResult",
    "ParameterError",
    "PathGrid",
    "Regime",
    "RuinModelError",
    "amplification",
    "approximant",
    "biv_normal_pdf",
    "biv_survival",
    "brownian_cov",
    "classify",
    "critical_rho",
    "crossing_exp_integral_limit",
    "curvature_constant",
    "derive_tilt",
    "drift_constant",
    "estimate_pickands_constant",
    "exp_rates",
    "gaussian_sum_limit",
    "independent_ruin",
    "level_weights",
    "log_decay_rate",
    "mc_ruin",
    "mc_ruin_importance",
    "mc_ruin_resolution_study",
    "minimize_quad_form",
    "norm_cdf",
    "norm_sf",
    "quad_form",
    "ruin_bounds",
    "sample_path",
    "single_ruin",
    "t_star",
]
