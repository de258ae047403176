"""Randomized validity checks shared by the CLI ``probe`` command and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .isotonic import MONOTONE_TOL
from .vennabers import ValidityError, unbounded_calibrators, validity_probe


@dataclass
class ProbeSummary:
    bags: int = 0
    groups: int = 0
    max_calibration_error: float = 0.0
    selector_violations: int = 0
    ordering_violations: int = 0


def random_bag(rng: np.random.Generator, k: int, ties: bool = True):
    """k+1 scored examples; half the time scores and labels come from small grids to force ties."""
    if ties and rng.random() < 0.5:
        scores = rng.integers(0, max(2, k // 2), size=k + 1).astype(float)
        labels = rng.integers(-3, 4, size=k + 1).astype(float)
    else:
        scores = rng.normal(size=k + 1)
        labels = scores + rng.normal(size=k + 1) * rng.uniform(0.1, 3.0)
    return scores, labels


def run_probe_suite(rng: np.random.Generator, bags: int = 200, max_k: int = 8, m: int = 1) -> ProbeSummary:
    summary = ProbeSummary()
    min_k = 2 * m + 1
    for _ in range(bags):
        k = int(rng.integers(min_k, max(min_k, max_k) + 1))
        scores, labels = random_bag(rng, k)
        try:
            groups = validity_probe(scores, labels, m)
        except ValidityError:
            summary.selector_violations += 1
            continue
        summary.bags += 1
        summary.groups += len(groups)
        for s, (mean, _) in groups.items():
            summary.max_calibration_error = max(summary.max_calibration_error, abs(mean - s))
        for i in range(k + 1):
            rest = np.arange(k + 1) != i
            lower, upper = unbounded_calibrators(scores[rest], labels[rest], m).interval(scores[i])
            if lower > upper + MONOTONE_TOL:
                summary.ordering_violations += 1
    return summary


def coverage_probe(rng: np.random.Generator, draws: int, k: int, m: int, chunk: int = 10_000):
    """Monte Carlo frequency of Y != Y' for IID Gaussian labels.

    Returns ``(frequency, bound)`` with bound = 2m/(k+1) + 3 binomial standard errors.
    """
    misses = 0
    done = 0
    while done < draws:
        size = min(chunk, draws - done)
        sample = rng.standard_normal((size, k + 1))
        cal = np.sort(sample[:, :k], axis=1)
        y = sample[:, k]
        clamped = np.clip(y, cal[:, m - 1], cal[:, k - m])
        misses += int(np.count_nonzero(clamped != y))
        done += size
    p = 2.0 * m / (k + 1)
    bound = p + 3.0 * np.sqrt(p * (1.0 - p) / draws)
    return misses / draws, float(bound)
