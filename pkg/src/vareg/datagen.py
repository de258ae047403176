"""Seeded synthetic regression scenarios and CSV datasets.

All draws come from numpy's PCG64 bit generator (``np.random.default_rng``),
whose streams and Gaussian transform are platform independent.  Within a
dataset the draw order is fixed: weights, objects, noise, then the 80/20
permutation.

Friedman scenarios follow the standard generative equations, with the noise
standard deviation set to ``sigma``:

* friedman1: x ~ U[0,1]^d (d >= 5),
  y = 10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4 + noise
* friedman2: x0 ~ U[0,100], x1 ~ U[40 pi, 560 pi], x2 ~ U[0,1], x3 ~ U[1,11],
  y = sqrt(x0^2 + (x1 x2 - 1/(x1 x3))^2) + noise
* friedman3: same objects, y = arctan((x1 x2 - 1/(x1 x3)) / x0) + noise
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

SCENARIOS = (
    "bounded-logistic",
    "linear-gaussian",
    "nonlinear",
    "heteroscedastic",
    "heavy-tailed",
    "outlier",
    "sparse",
    "covariate-shift",
    "friedman1",
    "friedman2",
    "friedman3",
)

TEST_FRACTION = 0.2


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    scenario: str
    n: int
    d: int = 10
    sigma: float = 1.0
    seed: int = 0
    outlier_p: float = 0.01
    tau_mult: float = 10.0
    nu_mult: float = 3.0
    sparsity: int = 2
    shift_mean: float = 1.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise DatasetError(f"unknown scenario {self.scenario!r}")
        if self.n < 1 or self.d < 1:
            raise DatasetError("n and d must be positive")
        if self.sigma < 0:
            raise DatasetError("sigma must be non-negative")
        if not 0.0 <= self.outlier_p <= 1.0:
            raise DatasetError("outlier probability must lie in [0, 1]")
        if self.scenario == "sparse" and not 0 <= self.sparsity <= self.d:
            raise DatasetError("sparsity must lie in 0..d")
        if self.scenario == "heavy-tailed" and self.nu_mult * self.sigma <= 0:
            raise DatasetError("heavy-tailed scenario needs positive degrees of freedom")
        if self.scenario == "friedman1" and self.d < 5:
            raise DatasetError("friedman1 needs d >= 5")

    @property
    def label(self) -> str:
        return f"{self.scenario}-n{self.n}-s{self.sigma:g}"


@dataclass(frozen=True)
class Dataset:
    train_rows: np.ndarray
    train_labels: np.ndarray
    test_rows: np.ndarray
    test_labels: np.ndarray
    spec: Optional[DatasetSpec] = None
    source: str = ""
    truth: dict = field(default_factory=dict, compare=False)


def n_test_rows(n: int, fraction: float = TEST_FRACTION) -> int:
    return int(np.floor(n * fraction + 0.5))


def _split(rows, labels, rng: Optional[np.random.Generator], fraction=TEST_FRACTION):
    n = len(labels)
    order = rng.permutation(n) if rng is not None else np.arange(n)
    n_test = n_test_rows(n, fraction)
    tr, te = order[: n - n_test], order[n - n_test:]
    return rows[tr], labels[tr], rows[te], labels[te]


def _linear_noise_scenario(spec: DatasetSpec, rng, x, w):
    n = x.shape[0]
    signal = x @ w
    s = spec.sigma
    truth = {}
    if spec.scenario in ("linear-gaussian", "sparse", "covariate-shift"):
        noise = rng.normal(0.0, s, size=n)
    elif spec.scenario == "bounded-logistic":
        signal = 10.0 / (1.0 + np.exp(-signal))
        noise = rng.normal(0.0, s, size=n)
    elif spec.scenario == "nonlinear":
        signal = signal + 2.0 * np.sin(x[:, 0]) + 0.5 * x[:, 1] ** 2 - np.cos(2.0 * x[:, 2])
        noise = rng.normal(0.0, s, size=n)
    elif spec.scenario == "heteroscedastic":
        noise = rng.normal(0.0, 1.0, size=n) * (0.5 * s + np.abs(x[:, 0]))
    elif spec.scenario == "heavy-tailed":
        noise = rng.standard_t(spec.nu_mult * s, size=n)
    elif spec.scenario == "outlier":
        contaminated = rng.random(n) < spec.outlier_p
        scale = np.where(contaminated, spec.tau_mult * s, s)
        noise = rng.normal(0.0, 1.0, size=n) * scale
        truth["contaminated"] = contaminated
    else:  # pragma: no cover - guarded by DatasetSpec
        raise DatasetError(spec.scenario)
    return signal + noise, truth


def _friedman(spec: DatasetSpec, rng):
    n = spec.n
    if spec.scenario == "friedman1":
        x = rng.uniform(size=(n, spec.d))
        y = (10.0 * np.sin(np.pi * x[:, 0] * x[:, 1]) + 20.0 * (x[:, 2] - 0.5) ** 2
             + 10.0 * x[:, 3] + 5.0 * x[:, 4])
    else:
        x = rng.uniform(size=(n, 4))
        x[:, 0] *= 100.0
        x[:, 1] = x[:, 1] * 520.0 * np.pi + 40.0 * np.pi
        x[:, 3] = x[:, 3] * 10.0 + 1.0
        inner = x[:, 1] * x[:, 2] - 1.0 / (x[:, 1] * x[:, 3])
        if spec.scenario == "friedman2":
            y = np.sqrt(x[:, 0] ** 2 + inner**2)
        else:
            y = np.arctan(inner / x[:, 0])
    return x, y + spec.sigma * rng.standard_normal(n)


def generate(spec: DatasetSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    if spec.scenario.startswith("friedman"):
        x, y = _friedman(spec, rng)
        parts = _split(x, y, rng)
        return Dataset(*parts, spec=spec, source="synthetic")

    w = rng.standard_normal(spec.d)
    if spec.scenario == "sparse":
        support = rng.choice(spec.d, size=spec.sparsity, replace=False)
        w_sparse = np.zeros(spec.d)
        w_sparse[support] = w[support]
        w = w_sparse

    if spec.scenario == "covariate-shift":
        n_test = n_test_rows(spec.n)
        x_train = rng.standard_normal((spec.n - n_test, spec.d))
        x_test = spec.shift_mean + rng.standard_normal((n_test, spec.d))
        x = np.vstack([x_train, x_test])
        y, truth = _linear_noise_scenario(spec, rng, x, w)
        cut = spec.n - n_test
        return Dataset(x[:cut], y[:cut], x[cut:], y[cut:], spec=spec, source="synthetic",
                       truth={"w": w, **truth})

    x = rng.standard_normal((spec.n, spec.d))
    y, truth = _linear_noise_scenario(spec, rng, x, w)
    order = rng.permutation(spec.n)
    n_test = n_test_rows(spec.n)
    tr, te = order[: spec.n - n_test], order[spec.n - n_test:]
    truth = {"w": w, **truth}
    if "contaminated" in truth:
        truth["contaminated_train"] = truth["contaminated"][tr]
    return Dataset(x[tr], y[tr], x[te], y[te], spec=spec, source="synthetic", truth=truth)


def feature_names(d: int) -> list[str]:
    return [f"f{i}" for i in range(d)]


def write_csv(target, rows, labels) -> None:
    """Write rows and labels to a path or an open text stream."""
    rows = np.asarray(rows, dtype=float)
    if hasattr(target, "write"):
        _write_rows(target, rows, labels)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, rows, labels)


def _write_rows(fh, rows, labels):
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(feature_names(rows.shape[1]) + ["label"])
    for row, y in zip(rows, labels):
        out.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def write_dataset(target, ds: Dataset) -> None:
    """Write training rows followed by test rows, so an unshuffled load restores the split."""
    write_csv(target, np.vstack([ds.train_rows, ds.test_rows]),
              np.concatenate([ds.train_labels, ds.test_labels]))


def read_csv(path, label_column: str = "label", require_label: bool = True):
    """Parse a numeric CSV with a header; returns (rows, labels, feature names).

    With ``require_label=False`` a file lacking the label column is accepted
    and ``labels`` is None.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"empty file: {path}")
        header = [h.strip() for h in header]
        if label_column in header:
            label_at = header.index(label_column)
        elif require_label:
            raise DatasetError(f"missing column {label_column!r} in {path}")
        else:
            label_at = None
        feature_at = [i for i in range(len(header)) if i != label_at]
        rows, labels = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DatasetError(f"line {line_no}: expected {len(header)} cells, got {len(record)}")
            try:
                values = [float(cell) for cell in record]
            except ValueError:
                raise DatasetError(f"line {line_no}: non-numeric cell") from None
            rows.append([values[i] for i in feature_at])
            if label_at is not None:
                labels.append(values[label_at])
    if not rows:
        raise DatasetError(f"empty file: {path}")
    matrix = np.array(rows, dtype=float).reshape(len(rows), len(feature_at))
    return matrix, (np.array(labels) if label_at is not None else None), [header[i] for i in feature_at]


def load_csv(path, label_column: str = "label", seed: int = 0, shuffle: bool = True,
             test_fraction: float = TEST_FRACTION) -> Dataset:
    rows, labels, _ = read_csv(path, label_column)
    rng = np.random.default_rng(seed) if shuffle else None
    parts = _split(rows, labels, rng, test_fraction)
    return Dataset(*parts, spec=None, source=str(path))
