"""Inductive Venn-Abers regressors (bounded and unbounded)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .baselines import PredictionRule
from .isotonic import (
    MONOTONE_TOL,
    CalibrationError,
    ExtendedCalibrator,
    build_csd,
    pava_fit,
)

Trainer = Callable[[np.ndarray, np.ndarray], PredictionRule]

UPPER_FIT = "upper-fit"
LOWER_FIT = "lower-fit"


class RegressionInterval(NamedTuple):
    lower: float
    upper: float


@dataclass(frozen=True)
class IvarConfig:
    """Exactly one of ``winsor_m`` (unbounded) or ``bounds`` (bounded) must be set."""

    calibration_size: int
    winsor_m: Optional[int] = None
    bounds: Optional[tuple[float, float]] = None
    split_seed: int = 0

    def __post_init__(self):
        k = self.calibration_size
        if k < 1:
            raise ValueError("calibration size must be positive")
        if (self.winsor_m is None) == (self.bounds is None):
            raise ValueError("set exactly one of winsor_m or bounds")
        if self.winsor_m is not None:
            m = self.winsor_m
            if m < 1 or m > (k - 1) // 2:
                raise ValueError(f"winsor_m={m} outside 1..{(k - 1) // 2} for calibration size {k}")
        else:
            lo, hi = self.bounds
            if not lo < hi:
                raise ValueError("bounds must satisfy lower < upper")

    @property
    def bounded(self) -> bool:
        return self.bounds is not None


@dataclass(frozen=True)
class WinsorizedLabels:
    labels: np.ndarray
    low_anchor: float
    high_anchor: float
    mode: str


def winsorize(labels, m: int, mode: str) -> WinsorizedLabels:
    """Clamp calibration labels as required before one of the two extended fits.

    ``upper-fit`` clamps to [(m+1)th smallest, mth largest]; ``lower-fit``
    clamps to [mth smallest, (m+1)th largest].  The clamp is value based, so
    tied labels are always treated alike.
    """
    labels = np.asarray(labels, dtype=float).ravel()
    k = labels.size
    if m < 1 or 2 * m >= k:
        raise CalibrationError(f"need 1 <= m and 2m < k (m={m}, k={k})")
    ordered = np.sort(labels, kind="stable")
    if mode == UPPER_FIT:
        low, high = ordered[m], ordered[k - m]
    elif mode == LOWER_FIT:
        low, high = ordered[m - 1], ordered[k - m - 1]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return WinsorizedLabels(np.clip(labels, low, high), float(low), float(high), mode)


def winsorized_test_label(calibration_labels, y: float, m: int) -> float:
    """Clamp a test label to [Y_(m), Y_(k-m+1)] of the calibration labels."""
    labels = np.sort(np.asarray(calibration_labels, dtype=float).ravel())
    k = labels.size
    if m < 1 or m > k - m + 1:
        raise CalibrationError(f"order statistics m={m} and k-m+1={k - m + 1} are not valid for k={k}")
    return float(min(max(y, labels[m - 1]), labels[k - m]))


def epsilon_to_m(epsilon: float, k: int) -> int:
    """Largest m with 2m/(k+1) <= epsilon, capped at floor((k-1)/2)."""
    if k < 3:
        raise ValueError("calibration size must be at least 3")
    if not (2.0 / (k + 1) - 1e-12 <= epsilon < 1.0):
        raise ValueError(f"epsilon must lie in [2/(k+1), 1) = [{2.0 / (k + 1):.6g}, 1)")
    # Slack absorbs decimal inputs such as 0.6 whose binary value is a hair below 3/5.
    m = math.floor(epsilon * (k + 1) / 2.0 + 1e-9)
    return max(1, min(m, (k - 1) // 2))


def split_training(n: int, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of (proper training, calibration); calibration drawn uniformly without replacement."""
    if k < 1:
        raise ValueError("calibration size must be positive")
    if n <= k:
        raise ValueError("calibration size too large")
    perm = np.random.default_rng(seed).permutation(n)
    calibration = np.sort(perm[:k])
    proper = np.sort(perm[k:])
    return proper, calibration


@dataclass(frozen=True)
class IvarCalibrators:
    """The two extended calibrators plus the anchors they were built with."""

    upper: ExtendedCalibrator
    lower: ExtendedCalibrator
    low_anchor: float
    high_anchor: float

    def interval(self, r):
        return self.lower(r), self.upper(r)


def unbounded_calibrators(scores, labels, m: int) -> IvarCalibrators:
    """Upper calibrator on upper-fit labels with pseudo-label y^*, lower on lower-fit labels with y_*."""
    up = winsorize(labels, m, UPPER_FIT)
    lo = winsorize(labels, m, LOWER_FIT)
    upper = ExtendedCalibrator.build(build_csd(scores, up.labels), up.high_anchor)
    lower = ExtendedCalibrator.build(build_csd(scores, lo.labels), lo.low_anchor)
    return IvarCalibrators(upper, lower, lo.low_anchor, up.high_anchor)


def bounded_calibrators(scores, labels, bounds: tuple[float, float]) -> IvarCalibrators:
    c_low, c_high = map(float, bounds)
    if not c_low < c_high:
        raise CalibrationError("bounds must satisfy lower < upper")
    labels = np.asarray(labels, dtype=float)
    if np.any(labels < c_low) or np.any(labels > c_high):
        raise CalibrationError("label violates declared bounds")
    csd = build_csd(scores, labels)
    return IvarCalibrators(
        ExtendedCalibrator.build(csd, c_high), ExtendedCalibrator.build(csd, c_low), c_low, c_high
    )


@dataclass(frozen=True)
class FittedIvar:
    rule: PredictionRule
    calibrators: IvarCalibrators
    n_features: int

    @property
    def anchors(self) -> tuple[float, float]:
        return self.calibrators.low_anchor, self.calibrators.high_anchor

    def predict_intervals(self, rows) -> tuple[np.ndarray, np.ndarray]:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise ValueError(f"expected rows with {self.n_features} features, got shape {rows.shape}")
        scores = self.rule.predict(rows)
        lower, upper = self.calibrators.interval(scores)
        return np.asarray(lower), np.asarray(upper)

    def predict_interval(self, x) -> RegressionInterval:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("predict_interval takes a single feature vector")
        lower, upper = self.predict_intervals(x[None, :])
        return RegressionInterval(float(lower[0]), float(upper[0]))


def predict_interval(model: FittedIvar, x) -> RegressionInterval:
    return model.predict_interval(x)


def fit_on_split(proper_rows, proper_labels, cal_rows, cal_labels, trainer: Trainer, *,
                 winsor_m: Optional[int] = None,
                 bounds: Optional[tuple[float, float]] = None) -> FittedIvar:
    """Train the base rule on the proper set and calibrate on the given calibration set."""
    proper_rows = np.asarray(proper_rows, dtype=float)
    cal_rows = np.asarray(cal_rows, dtype=float)
    rule = trainer(proper_rows, np.asarray(proper_labels, dtype=float))
    scores = rule.predict(cal_rows)
    if bounds is not None:
        cals = bounded_calibrators(scores, cal_labels, bounds)
    else:
        cals = unbounded_calibrators(scores, cal_labels, winsor_m)
    return FittedIvar(rule, cals, proper_rows.shape[1])


def _fit(rows, labels, trainer, cfg: IvarConfig) -> FittedIvar:
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels, dtype=float)
    proper, cal = split_training(len(labels), cfg.calibration_size, cfg.split_seed)
    return fit_on_split(rows[proper], labels[proper], rows[cal], labels[cal], trainer,
                        winsor_m=cfg.winsor_m, bounds=cfg.bounds)


def fit_unbounded(rows, labels, trainer: Trainer, cfg: IvarConfig) -> FittedIvar:
    if cfg.bounded:
        raise ValueError("fit_unbounded needs a config with winsor_m")
    return _fit(rows, labels, trainer, cfg)


def fit_bounded(rows, labels, trainer: Trainer, cfg: IvarConfig) -> FittedIvar:
    if not cfg.bounded:
        raise ValueError("fit_bounded needs a config with bounds")
    lo, hi = cfg.bounds
    labels = np.asarray(labels, dtype=float)
    if np.any(labels < lo) or np.any(labels > hi):
        raise CalibrationError("label violates declared bounds")
    return _fit(rows, labels, trainer, cfg)


class ValidityError(AssertionError):
    """A selector fell outside the interval it is supposed to lie in."""


def validity_probe(scores, labels, m: int, tol: float = MONOTONE_TOL) -> dict[float, tuple[float, int]]:
    """Exact finite check of auto-calibration on one bag of k+1 scored examples.

    Every element of the bag takes a turn as the test example.  The selector
    is the PAVA fit at the test score after clamping the whole bag to its
    (m+1)th smallest and (m+1)th largest labels; the clamped test label plays
    the role of the Winsorized test label.  Returns, per distinct selector
    value S, the mean clamped label and the number of elements with that S.

    Raises:
        ValidityError: if some selector leaves the interval produced by the
            calibrators built on the other k elements.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    n = labels.size
    if scores.shape != labels.shape:
        raise CalibrationError("scores and labels differ in length")
    if m < 1 or 2 * m >= n - 1:
        raise CalibrationError(f"bag too small: need 2m < k with k = bag size - 1 (m={m}, bag={n})")
    ordered = np.sort(labels)
    clamped = np.clip(labels, ordered[m], ordered[n - 1 - m])
    selector = pava_fit(scores, clamped).fitted

    for i in range(n):
        rest = np.arange(n) != i
        lower, upper = unbounded_calibrators(scores[rest], labels[rest], m).interval(scores[i])
        if not (lower - tol <= selector[i] <= upper + tol):
            raise ValidityError(
                f"selector {selector[i]!r} outside [{lower!r}, {upper!r}] for test element {i}"
            )

    groups: dict[float, list[float]] = {}
    for s, y in zip(selector.tolist(), clamped.tolist()):
        groups.setdefault(s, []).append(y)
    return {s: (float(np.mean(ys)), len(ys)) for s, ys in groups.items()}
