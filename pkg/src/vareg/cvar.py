"""Cross Venn-Abers regressor: K calibration folds, merged per fold, averaged."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .merge import merge
from .vennabers import FittedIvar, Trainer, fit_on_split


@dataclass(frozen=True)
class CvarConfig:
    folds: int = 10
    winsor_m: Optional[int] = 1
    merge_mode: str = "approx"
    fold_seed: int = 0
    bounds: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.merge_mode not in ("exact", "approx"):
            raise ValueError(f"unknown merge mode {self.merge_mode!r}")
        if (self.winsor_m is None) == (self.bounds is None):
            raise ValueError("set exactly one of winsor_m or bounds")
        if self.winsor_m is not None and self.winsor_m < 1:
            raise ValueError("winsor_m must be positive")

    @property
    def min_fold_size(self) -> int:
        return 2 * self.winsor_m + 1 if self.winsor_m is not None else 1


def assign_folds(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Random permutation cut into contiguous, near-equal slices (sizes differ by at most one)."""
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


@dataclass(frozen=True)
class CvarModel:
    members: tuple[FittedIvar, ...]
    merge_mode: str
    fold_indices: tuple[np.ndarray, ...]

    def fold_estimates(self, rows) -> np.ndarray:
        """Merged point estimate of every fold, shape (folds, n_rows)."""
        out = []
        for ivar in self.members:
            lower, upper = ivar.predict_intervals(rows)
            y_low, y_high = ivar.anchors
            out.append(np.asarray(merge(y_low, y_high, lower, upper, self.merge_mode), dtype=float))
        return np.vstack(out)

    def predict(self, rows) -> np.ndarray:
        return self.fold_estimates(rows).mean(axis=0)

    def predict_point(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("predict_point takes a single feature vector")
        return float(self.predict(x[None, :])[0])


def fit_cvar(rows, labels, trainer: Trainer, cfg: CvarConfig) -> CvarModel:
    """Fit one IVAR per fold, each calibrated on its fold and trained on the rest."""
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels, dtype=float).ravel()
    n = labels.size
    if n < cfg.folds * cfg.min_fold_size:
        raise ValueError(
            f"too few examples: {n} < folds * (2m+1) = {cfg.folds * cfg.min_fold_size}"
        )
    folds = assign_folds(n, cfg.folds, cfg.fold_seed)
    members = []
    for cal in folds:
        proper = np.setdiff1d(np.arange(n), cal, assume_unique=True)
        members.append(
            fit_on_split(rows[proper], labels[proper], rows[cal], labels[cal], trainer,
                         winsor_m=cfg.winsor_m, bounds=cfg.bounds)
        )
    return CvarModel(tuple(members), cfg.merge_mode, tuple(folds))


def predict_point(model: CvarModel, x) -> float:
    return model.predict_point(x)
