"""Weighted isotonic regression and fast extended calibrators.

The extended calibrators answer the question "what would the isotonic fit be
at score ``r`` if one more example ``(r, c)`` were added to the calibration
set?" for every ``r`` at once.  The answer only depends on where ``r`` falls
relative to the distinct calibration scores: strictly inside one of the
``k' + 1`` gaps, or exactly on one of the ``k'`` scores.  All ``2k' + 1``
answers are precomputed from a left-to-right PAVA stack (prefix fits) and a
right-to-left PAVA stack with an undo log (suffix fits), so a query is a
single binary search.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

# Absolute slack used when asserting monotonicity of fitted values.
MONOTONE_TOL = 1e-9


class CalibrationError(ValueError):
    """Raised for invalid calibration inputs."""


class ScoredExample(NamedTuple):
    score: float
    label: float


@dataclass(frozen=True)
class CsdSummary:
    """Deduplicated calibration set and its cumulative sum diagram.

    ``cum_points[j]`` is the point P_j = (sum of the first j weights, sum of
    the first j weighted labels), with ``cum_points[0] == (0, 0)``.
    """

    distinct_scores: np.ndarray
    weights: np.ndarray
    mean_labels: np.ndarray
    cum_points: np.ndarray

    @property
    def n_distinct(self) -> int:
        return len(self.distinct_scores)

    @property
    def n_examples(self) -> int:
        return int(self.weights.sum())


@dataclass(frozen=True)
class IsotonicFit:
    """Least-squares non-decreasing step function.

    ``block_ranges[b] = (start, stop)`` indexes ``distinct_scores`` (half-open);
    ``breakpoints[b]`` is the first score of block ``b``.
    """

    distinct_scores: np.ndarray
    breakpoints: np.ndarray
    values: np.ndarray
    block_ranges: tuple[tuple[int, int], ...]
    fitted: np.ndarray

    def predict(self, scores) -> np.ndarray:
        """Right-continuous step evaluation; scores below the first block get its value."""
        scores = np.asarray(scores, dtype=float)
        idx = np.searchsorted(self.breakpoints, scores, side="right") - 1
        return self.values[np.clip(idx, 0, len(self.values) - 1)]


def _as_examples(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    if scores.shape != labels.shape:
        raise CalibrationError("scores and labels differ in length")
    if scores.size == 0:
        raise CalibrationError("empty calibration set")
    if not (np.all(np.isfinite(scores)) and np.all(np.isfinite(labels))):
        raise CalibrationError("non-finite input")
    return scores, labels


def build_csd(scores, labels) -> CsdSummary:
    scores, labels = _as_examples(scores, labels)
    distinct, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=labels, minlength=len(distinct))
    means = sums / counts
    cum = np.zeros((len(distinct) + 1, 2))
    cum[1:, 0] = np.cumsum(counts)
    cum[1:, 1] = np.cumsum(sums)
    return CsdSummary(distinct, counts.astype(np.int64), means, cum)


def _pava_blocks(values: Sequence[float], weights: Sequence[float]):
    """Stack PAVA over already-sorted points. Returns (sums, weights, starts)."""
    b_sum: list[float] = []
    b_w: list[float] = []
    b_start: list[int] = []
    for i, (v, w) in enumerate(zip(values, weights)):
        s, ww, start = v * w, float(w), i
        while b_sum and b_sum[-1] * ww >= s * b_w[-1]:
            s += b_sum.pop()
            ww += b_w.pop()
            start = b_start.pop()
        b_sum.append(s)
        b_w.append(ww)
        b_start.append(start)
    return b_sum, b_w, b_start


def pava_fit(scores, labels, weights=None) -> IsotonicFit:
    """Isotonic (non-decreasing) least-squares fit of labels against scores.

    Tied scores are first pooled into one point carrying their total weight.

    Args:
        scores: base predictions, any order.
        labels: labels aligned with ``scores``.
        weights: optional positive weights (default 1 each).

    Returns:
        IsotonicFit whose ``fitted`` attribute is aligned with the input order.
    """
    scores, labels = _as_examples(scores, labels)
    if weights is None:
        weights = np.ones_like(scores)
    else:
        weights = np.asarray(weights, dtype=float).ravel()
        if weights.shape != scores.shape or np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise CalibrationError("weights must be positive, finite and aligned with scores")
    distinct, inverse = np.unique(scores, return_inverse=True)
    w = np.bincount(inverse, weights=weights, minlength=len(distinct))
    s = np.bincount(inverse, weights=weights * labels, minlength=len(distinct))
    b_sum, b_w, b_start = _pava_blocks((s / w).tolist(), w.tolist())

    values = np.array(b_sum) / np.array(b_w)
    stops = b_start[1:] + [len(distinct)]
    ranges = tuple(zip(b_start, stops))
    per_distinct = np.repeat(values, np.diff(np.array(b_start + [len(distinct)])))
    return IsotonicFit(
        distinct_scores=distinct,
        breakpoints=distinct[b_start],
        values=values,
        block_ranges=ranges,
        fitted=per_distinct[inverse],
    )


class _SuffixStack:
    """Right-to-left PAVA stack over CSD points with an undo log.

    Block means decrease from bottom (rightmost block) to top (leftmost), so
    the negated means are stored to keep a bisectable ascending list.
    ``cw``/``cs`` carry cumulative weight/sum with a leading zero sentinel.
    """

    def __init__(self, weights, means):
        self.neg = []
        self.w = []
        self.s = []
        self.cw = [0.0]
        self.cs = [0.0]
        self.log = []
        for i in range(len(weights) - 1, -1, -1):
            self.log.append(self._push(float(weights[i]), float(weights[i] * means[i])))

    def _append(self, w, s):
        self.neg.append(-s / w)
        self.w.append(w)
        self.s.append(s)
        self.cw.append(self.cw[-1] + w)
        self.cs.append(self.cs[-1] + s)

    def _pop(self):
        self.neg.pop()
        self.cw.pop()
        self.cs.pop()
        return self.w.pop(), self.s.pop()

    def _push(self, w, s):
        popped = []
        # New block sits to the left of the top block: violation if its mean >= top mean.
        while self.w and s * self.w[-1] >= self.s[-1] * w:
            bw, bs = self._pop()
            popped.append((bw, bs))
            w += bw
            s += bs
        self._append(w, s)
        return popped

    def undo(self):
        """Remove the leftmost point pushed last, restoring the blocks it absorbed."""
        popped = self.log.pop()
        self._pop()
        for bw, bs in reversed(popped):
            self._append(bw, bs)


class _PrefixStack:
    """Left-to-right PAVA stack; means ascend from bottom to top."""

    def __init__(self):
        self.mean = []
        self.w = []
        self.s = []
        self.cw = [0.0]
        self.cs = [0.0]

    def push(self, w, s):
        while self.w and self.s[-1] * w >= s * self.w[-1]:
            self.mean.pop()
            self.cw.pop()
            self.cs.pop()
            w += self.w.pop()
            s += self.s.pop()
        self.mean.append(s / w)
        self.w.append(w)
        self.s.append(s)
        self.cw.append(self.cw[-1] + w)
        self.cs.append(self.cs[-1] + s)


def _gallop(pred, top: int) -> int:
    """Smallest ``b`` in ``[0, top]`` with ``pred`` true on all of ``b..top-1``.

    ``pred`` must be monotone: false below some threshold, true from it up to ``top - 1``.
    """
    hi, step = top, 1
    while hi > 0 and pred(max(hi - step, 0)):
        hi = max(hi - step, 0)
        step *= 2
    lo = max(hi - step, 0) if hi > 0 else 0
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _pooled_value(center_w, center_s, pre: _PrefixStack, suf: _SuffixStack) -> float:
    """Value of the solution block containing a center point between two solved halves.

    The halves are already pooled, so the center can only absorb prefix blocks
    from the top of the prefix stack (means above the final value) and suffix
    blocks from the top of the suffix stack (means below it).  Absorption is
    done side by side until neither side grows; each side is located by a
    galloping search, so a call costs O(log k) per round.
    """
    pm, pcw, pcs = pre.mean, pre.cw, pre.cs
    sneg, scw, scs = suf.neg, suf.cw, suf.cs
    ip, js = len(pm), len(sneg)
    w, s = center_w, center_s
    while True:
        grew = False
        # Suffix block b is absorbed when its mean is below the pool formed with b+1..js-1.
        if js and -sneg[js - 1] * w < s:
            w0, s0, top = w, s, js
            js = _gallop(
                lambda b: -sneg[b] * (w0 + (scw[top] - scw[b + 1])) < s0 + (scs[top] - scs[b + 1]), top
            )
            w += scw[top] - scw[js]
            s += scs[top] - scs[js]
            grew = js < top
        if ip and pm[ip - 1] * w > s:
            w0, s0, top = w, s, ip
            ip = _gallop(
                lambda b: pm[b] * (w0 + (pcw[top] - pcw[b + 1])) > s0 + (pcs[top] - pcs[b + 1]), top
            )
            w += pcw[top] - pcw[ip]
            s += pcs[top] - pcs[ip]
            grew = grew or ip < top
        if not grew:
            return s / w


def _extended_tables(csd: CsdSummary, pseudo_labels: Sequence[float]):
    """Per-gap and per-tie extended fit values for each pseudo-label.

    Returns arrays ``gaps`` of shape (len(pseudo_labels), k'+1) and ``ties``
    of shape (len(pseudo_labels), k').
    """
    k = csd.n_distinct
    weights = csd.weights.astype(float)
    means = csd.mean_labels
    n_c = len(pseudo_labels)
    gaps = np.empty((n_c, k + 1))
    ties = np.empty((n_c, k))
    pre = _PrefixStack()
    suf = _SuffixStack(weights, means)
    for j in range(k + 1):
        # suf now holds points j+1..k' (1-based), pre holds points 1..j-1.
        if j >= 1:
            suf.undo()
            wj = weights[j - 1]
            sj = wj * means[j - 1]
            for a, c in enumerate(pseudo_labels):
                ties[a, j - 1] = _pooled_value(wj + 1.0, sj + c, pre, suf)
            pre.push(wj, sj)
        for a, c in enumerate(pseudo_labels):
            gaps[a, j] = _pooled_value(1.0, c, pre, suf)
    return gaps, ties


@dataclass(frozen=True)
class ExtendedCalibrator:
    """Evaluates the isotonic fit refitted with one extra example ``(r, pseudo_label)`` at ``r``."""

    csd: CsdSummary
    pseudo_label: float
    gap_values: np.ndarray
    tie_values: np.ndarray

    @classmethod
    def build(cls, csd: CsdSummary, pseudo_label: float) -> "ExtendedCalibrator":
        if not np.isfinite(pseudo_label):
            raise CalibrationError("non-finite input")
        gaps, ties = _extended_tables(csd, [float(pseudo_label)])
        return cls(csd, float(pseudo_label), gaps[0], ties[0])

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        if not np.all(np.isfinite(r_arr)):
            raise CalibrationError("non-finite input")
        scores = self.csd.distinct_scores
        j = np.searchsorted(scores, r_arr, side="left")
        on_score = (j < len(scores)) & (scores[np.minimum(j, len(scores) - 1)] == r_arr)
        out = np.where(on_score, self.tie_values[np.minimum(j, len(scores) - 1)], self.gap_values[j])
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CalibratorPair:
    """The two extended calibrators f^* (upper) and f_* (lower) over one calibration set."""

    csd: CsdSummary
    y_pseudo_lower: float
    y_pseudo_upper: float
    upper: ExtendedCalibrator
    lower: ExtendedCalibrator


def build_calibrator_pair(csd: CsdSummary, y_pseudo_lower: float, y_pseudo_upper: float) -> CalibratorPair:
    if not (np.isfinite(y_pseudo_lower) and np.isfinite(y_pseudo_upper)):
        raise CalibrationError("non-finite input")
    if y_pseudo_lower > y_pseudo_upper:
        raise CalibrationError("pseudo-labels out of order: lower exceeds upper")
    gaps, ties = _extended_tables(csd, [float(y_pseudo_upper), float(y_pseudo_lower)])
    upper = ExtendedCalibrator(csd, float(y_pseudo_upper), gaps[0], ties[0])
    lower = ExtendedCalibrator(csd, float(y_pseudo_lower), gaps[1], ties[1])
    return CalibratorPair(csd, float(y_pseudo_lower), float(y_pseudo_upper), upper, lower)


def eval_upper(pair: CalibratorPair, r):
    return pair.upper(r)


def eval_lower(pair: CalibratorPair, r):
    return pair.lower(r)

