"""Venn-Abers regression: isotonic interval regressors and a benchmark harness."""

from .cvar import CvarConfig, CvarModel, fit_cvar, predict_point
from .isotonic import (
    CalibrationError,
    CalibratorPair,
    CsdSummary,
    ExtendedCalibrator,
    IsotonicFit,
    build_calibrator_pair,
    build_csd,
    eval_lower,
    eval_upper,
    pava_fit,
)
from .merge import merge, merge_approx, merge_exact
from .vennabers import (
    FittedIvar,
    IvarConfig,
    RegressionInterval,
    epsilon_to_m,
    fit_bounded,
    fit_unbounded,
    predict_interval,
    split_training,
    validity_probe,
    winsorize,
    winsorized_test_label,
)

__version__ = "0.1.0"
