"""Base regressors and feature standardization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

DEFAULT_RIDGE_LAMBDA = 1.0
DEFAULT_NEIGHBORS = 10


class PredictionRule(Protocol):
    def predict(self, rows: np.ndarray) -> np.ndarray: ...


def _check(rows, labels=None):
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("rows must be a non-empty 2-d array")
    if labels is None:
        return rows
    labels = np.asarray(labels, dtype=float).ravel()
    if labels.shape[0] != rows.shape[0]:
        raise ValueError("rows and labels differ in length")
    return rows, labels


@dataclass(frozen=True)
class LinearRule:
    coef: np.ndarray
    intercept: float

    def predict(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.coef.size:
            raise ValueError(f"expected {self.coef.size} features, got shape {rows.shape}")
        return rows @ self.coef + self.intercept


def train_ols(rows, labels) -> LinearRule:
    """Least squares with intercept; rank-deficient designs get the minimum-norm slope."""
    rows, labels = _check(rows, labels)
    return train_ridge(rows, labels, 0.0)


def train_ridge(rows, labels, lam: float = DEFAULT_RIDGE_LAMBDA) -> LinearRule:
    """Penalized least squares, intercept unpenalized.

    Solved on centred data as the stacked system [X; sqrt(lam) I] b = [y; 0]
    through an SVD-based least-squares routine.
    """
    rows, labels = _check(rows, labels)
    if lam < 0:
        raise ValueError("ridge penalty must be non-negative")
    x_mean = rows.mean(axis=0)
    y_mean = labels.mean()
    xc = rows - x_mean
    yc = labels - y_mean
    d = rows.shape[1]
    if lam > 0:
        xc = np.vstack([xc, np.sqrt(lam) * np.eye(d)])
        yc = np.concatenate([yc, np.zeros(d)])
    coef, *_ = np.linalg.lstsq(xc, yc, rcond=None)
    return LinearRule(coef, float(y_mean - x_mean @ coef))


@dataclass(frozen=True)
class KnnRule:
    rows: np.ndarray
    labels: np.ndarray
    neighbors: int

    def predict(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.rows.shape[1]:
            raise ValueError(f"expected {self.rows.shape[1]} features, got shape {rows.shape}")
        out = np.empty(rows.shape[0])
        sq_train = np.einsum("ij,ij->i", self.rows, self.rows)
        # Chunked so the distance matrix stays small.
        for start in range(0, rows.shape[0], 512):
            q = rows[start:start + 512]
            d2 = sq_train[None, :] - 2.0 * q @ self.rows.T + np.einsum("ij,ij->i", q, q)[:, None]
            # Stable sort breaks distance ties by training row index.
            idx = np.argsort(d2, axis=1, kind="stable")[:, : self.neighbors]
            out[start:start + 512] = self.labels[idx].mean(axis=1)
        return out


def train_knn(rows, labels, neighbors: int = DEFAULT_NEIGHBORS) -> KnnRule:
    rows, labels = _check(rows, labels)
    if neighbors < 1 or neighbors > rows.shape[0]:
        raise ValueError(f"neighbors must lie in 1..{rows.shape[0]}")
    return KnnRule(rows.copy(), labels.copy(), int(neighbors))


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stddevs: np.ndarray

    def transform(self, rows) -> np.ndarray:
        return (np.asarray(rows, dtype=float) - self.means) / self.stddevs


def fit_standardizer(rows) -> Standardizer:
    rows = _check(rows)
    sd = rows.std(axis=0)
    sd[sd == 0] = 1.0
    return Standardizer(rows.mean(axis=0), sd)


def apply_standardizer(s: Standardizer, rows) -> np.ndarray:
    return s.transform(rows)


def make_trainer(name: str, *, ridge_lambda: float = DEFAULT_RIDGE_LAMBDA,
                 neighbors: int = DEFAULT_NEIGHBORS) -> Callable[[np.ndarray, np.ndarray], PredictionRule]:
    """Trainer callable by short name: ``ols``, ``ridge`` or ``knn``."""
    if name == "ols":
        return train_ols
    if name == "ridge":
        return lambda rows, labels: train_ridge(rows, labels, ridge_lambda)
    if name == "knn":
        return lambda rows, labels: train_knn(rows, labels, neighbors)
    raise ValueError(f"unknown base regressor {name!r}")
