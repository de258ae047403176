"""Repeated-trial RMSE benchmark over synthetic scenarios."""

from __future__ import annotations

import csv
import io
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .baselines import DEFAULT_NEIGHBORS, DEFAULT_RIDGE_LAMBDA, fit_standardizer, make_trainer
from .cvar import CvarConfig, fit_cvar
from .datagen import DatasetSpec, generate

_METHOD_RE = re.compile(r"^(none|cvar)(?:-m(\d+))?$")

# Sub-seed tags: each consumer of the trial seed gets its own stream.
_DATA_TAG, _FOLD_TAG = 0, 1


def derive_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(tag,)).generate_state(1)[0])


def parse_method(method: str, default_m: int = 1) -> tuple[str, Optional[int]]:
    """``none`` -> ("none", None); ``cvar`` -> ("cvar", default_m); ``cvar-m10`` -> ("cvar", 10)."""
    match = _METHOD_RE.match(method)
    if not match:
        raise ValueError(f"unknown method {method!r}")
    kind, m = match.groups()
    if kind == "none":
        if m is not None:
            raise ValueError("method 'none' takes no m")
        return "none", None
    return "cvar", int(m) if m is not None else default_m


def method_name(method: str, default_m: int = 1) -> str:
    kind, m = parse_method(method, default_m)
    return kind if kind == "none" else f"cvar-m{m}"


def rmse(predictions, truths) -> float:
    predictions = np.asarray(predictions, dtype=float)
    truths = np.asarray(truths, dtype=float)
    return float(np.sqrt(np.mean((predictions - truths) ** 2)))


def sem(values) -> float:
    """Sample standard deviation over sqrt(trials); zero for a single trial."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


@dataclass(frozen=True)
class BenchConfig:
    scenarios: tuple[str, ...] = ("linear-gaussian",)
    sizes: tuple[int, ...] = (10000,)
    sigmas: tuple[float, ...] = (3.0,)
    bases: tuple[str, ...] = ("ols",)
    methods: tuple[str, ...] = ("none", "cvar-m1")
    folds: int = 10
    merge_mode: str = "approx"
    trials: int = 20
    base_seed: int = 0
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    neighbors: int = DEFAULT_NEIGHBORS
    d: int = 10

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for m in self.methods:
            parse_method(m)

    def specs(self) -> list[tuple[str, int, float]]:
        return [(s, n, sig) for s in self.scenarios for n in self.sizes for sig in self.sigmas]


def run_trial(spec: DatasetSpec, base: str, method: str, seed: int, *, folds: int = 10,
              merge_mode: str = "approx", ridge_lambda: float = DEFAULT_RIDGE_LAMBDA,
              neighbors: int = DEFAULT_NEIGHBORS) -> float:
    """Test RMSE of one (dataset, base, method) combination for one trial seed.

    ``spec.seed`` is ignored; the dataset seed and the fold seed are derived
    from ``seed`` so that all methods of a trial see the same data.
    """
    kind, m = parse_method(method)
    ds = generate(DatasetSpec(**{**spec.__dict__, "seed": derive_seed(seed, _DATA_TAG)}))
    scaler = fit_standardizer(ds.train_rows)
    x_train = scaler.transform(ds.train_rows)
    x_test = scaler.transform(ds.test_rows)
    trainer = make_trainer(base, ridge_lambda=ridge_lambda, neighbors=neighbors)
    if kind == "none":
        pred = trainer(x_train, ds.train_labels).predict(x_test)
    else:
        cfg = CvarConfig(folds=folds, winsor_m=m, merge_mode=merge_mode,
                         fold_seed=derive_seed(seed, _FOLD_TAG))
        pred = fit_cvar(x_train, ds.train_labels, trainer, cfg).predict(x_test)
    return rmse(pred, ds.test_labels)


@dataclass(frozen=True)
class Cell:
    dataset: str
    base: str
    method: str
    rmses: tuple[float, ...]

    @property
    def trials(self) -> int:
        return len(self.rmses)

    @property
    def mean_rmse(self) -> float:
        return float(np.mean(self.rmses))

    @property
    def sem(self) -> float:
        return sem(self.rmses)


@dataclass
class BenchReport:
    cells: dict = field(default_factory=dict)  # (dataset, base, method) -> Cell
    metadata: dict = field(default_factory=dict)

    def cell(self, dataset: str, base: str, method: str) -> Cell:
        return self.cells[(dataset, base, method)]

    def sorted_cells(self) -> list[Cell]:
        return [self.cells[key] for key in sorted(self.cells)]


def _trial_job(args):
    spec_kw, base, method, seed, opts = args
    try:
        return run_trial(DatasetSpec(**spec_kw), base, method, seed, **opts)
    except Exception as exc:
        raise RuntimeError(f"trial with seed {seed} failed ({spec_kw['scenario']}, {base}, {method}): {exc}") from exc


def run_bench(cfg: BenchConfig, jobs: int = 1) -> BenchReport:
    opts = dict(folds=cfg.folds, merge_mode=cfg.merge_mode, ridge_lambda=cfg.ridge_lambda,
                neighbors=cfg.neighbors)
    keys, tasks = [], []
    for scenario, n, sigma in cfg.specs():
        spec_kw = dict(scenario=scenario, n=n, sigma=sigma, d=cfg.d)
        label = DatasetSpec(**spec_kw).label
        for base in cfg.bases:
            for method in cfg.methods:
                for t in range(cfg.trials):
                    keys.append((label, base, method_name(method)))
                    tasks.append((spec_kw, base, method, cfg.base_seed + t, opts))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_job, tasks))
    else:
        results = [_trial_job(task) for task in tasks]

    grouped: dict = {}
    for key, value in zip(keys, results):
        grouped.setdefault(key, []).append(value)
    report = BenchReport(
        cells={key: Cell(*key, tuple(vals)) for key, vals in grouped.items()},
        metadata={
            "trials": cfg.trials, "base_seed": cfg.base_seed, "folds": cfg.folds,
            "merge": cfg.merge_mode, "ridge_lambda": cfg.ridge_lambda, "neighbors": cfg.neighbors,
        },
    )
    return report


CSV_COLUMNS = ("dataset", "base", "method", "mean_rmse", "sem", "trials")


def render_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CSV_COLUMNS)
    for c in report.sorted_cells():
        out.writerow([c.dataset, c.base, c.method, f"{c.mean_rmse:.3f}", f"{c.sem:.3f}", c.trials])
    return buf.getvalue()


def _ordered_unique(items: Iterable[str]) -> list[str]:
    return sorted(set(items), key=lambda m: (m != "none", m))


def render_markdown(report: BenchReport) -> str:
    """One table per dataset: rows are bases, columns methods, row minimum in bold, column averages."""
    lines = []
    datasets = sorted({c.dataset for c in report.cells.values()})
    for ds in datasets:
        cells = [c for c in report.sorted_cells() if c.dataset == ds]
        bases = sorted({c.base for c in cells})
        methods = _ordered_unique(c.method for c in cells)
        lines.append(f"### {ds}")
        lines.append("")
        lines.append("| | " + " | ".join(methods) + " |")
        lines.append("|---|" + "---|" * len(methods))
        for base in bases:
            row = {c.method: c for c in cells if c.base == base}
            best = min(f"{c.mean_rmse:.3f}" for c in row.values())
            parts = []
            for m in methods:
                c = row.get(m)
                if c is None:
                    parts.append("")
                    continue
                mean = f"{c.mean_rmse:.3f}"
                parts.append(f"**{mean}** ± {c.sem:.3f}" if mean == best else f"{mean} ± {c.sem:.3f}")
            lines.append(f"| {base} | " + " | ".join(parts) + " |")
        averages = {m: np.mean([c.mean_rmse for c in cells if c.method == m]) for m in methods}
        best_avg = min(f"{v:.3f}" for v in averages.values())
        avg_parts = [f"**{v:.3f}**" if f"{v:.3f}" == best_avg else f"{v:.3f}" for v in averages.values()]
        lines.append("| average | " + " | ".join(avg_parts) + " |")
        lines.append("")
    return "\n".join(lines)


def render_report(report: BenchReport, fmt: str = "csv") -> str:
    if not report.cells:
        raise ValueError("empty report")
    if fmt == "csv":
        return render_csv(report)
    if fmt in ("md", "markdown"):
        return render_markdown(report)
    raise ValueError(f"unknown format {fmt!r}")


def parse_csv_report(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        row["mean_rmse"] = float(row["mean_rmse"])
        row["sem"] = float(row["sem"])
        row["trials"] = int(row["trials"])
    return rows
