"""Importance labeling for least squares regression in explicit and
random-feature spaces, with a reproducible benchmark harness."""

from .features import FeatureMap, apply, build_feature_map, kernel_estimate
from .labeling import (
    DegenerateScoresError,
    LabelingPlan,
    cred_distribution,
    draw_labels,
    expected_moments,
    uniform_distribution,
    uniform_plan,
)
from .regression import (
    Estimator,
    ScheduleParams,
    default_step_size,
    gd_fit,
    gd_fit_spectral,
    lambda_star,
    predict,
    ridge_fit,
    rmse,
    sssl_fit,
    weighted_moments,
)
from .spectral import (
    CovarianceModel,
    SpectrumModel,
    effective_dimension,
    eigendecompose,
    empirical_covariance,
    leverage_scores,
    leverage_scores_gram,
    spectral_filters,
    sup_leverage,
    theory_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "FeatureMap",
    "apply",
    "build_feature_map",
    "kernel_estimate",
    "DegenerateScoresError",
    "LabelingPlan",
    "cred_distribution",
    "draw_labels",
    "expected_moments",
    "uniform_distribution",
    "uniform_plan",
    "Estimator",
    "ScheduleParams",
    "default_step_size",
    "gd_fit",
    "gd_fit_spectral",
    "lambda_star",
    "predict",
    "ridge_fit",
    "rmse",
    "sssl_fit",
    "weighted_moments",
    "CovarianceModel",
    "SpectrumModel",
    "effective_dimension",
    "eigendecompose",
    "empirical_covariance",
    "leverage_scores",
    "leverage_scores_gram",
    "spectral_filters",
    "sup_leverage",
    "theory_bounds",
    "__version__",
]
