"""Collapse a regression interval [lower, upper] inside anchors [y_low, y_high] to one point.

The minimax point equalizes the worst-case excess squared loss at the two
anchors.  Both functions accept scalars or broadcastable arrays.
"""

from __future__ import annotations

import numpy as np


class MergeError(ValueError):
    pass


def _prepare(y_low, y_high, lower, upper):
    y_low, y_high, lower, upper = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (y_low, y_high, lower, upper))
    )
    if np.any(lower > upper):
        raise MergeError("interval lower end exceeds upper end")
    slack = 1e-9 * (1.0 + np.abs(y_low) + np.abs(y_high))
    if np.any(lower < y_low - slack) or np.any(upper > y_high + slack):
        raise MergeError("interval not inside its anchors")
    return y_low, y_high, lower, upper


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def merge_exact(y_low, y_high, lower, upper):
    """Closed-form root of the minimax balance equation.

    A zero-width interval returns its point; coinciding anchors around a
    non-degenerate interval raise ``MergeError("degenerate anchors")``.
    """
    y_low, y_high, lower, upper = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (y_low, y_high, lower, upper))
    )
    span = y_high - y_low
    point = lower == upper
    if np.any((span <= 0) & ~point):
        raise MergeError("degenerate anchors")
    y_low, y_high, lower, upper = _prepare(y_low, y_high, lower, upper)
    safe = np.where(point, 1.0, span)
    est = (lower**2 - upper**2 + 2.0 * upper * y_high - 2.0 * lower * y_low) / (2.0 * safe)
    # Rounding can push the closed form a few ulps outside the interval.
    est = np.where(point, lower, np.clip(est, lower, upper))
    return _out(est)


def merge_approx(y_low, y_high, lower, upper, return_fallback: bool = False):
    """Weighted average of the interval ends, weights proportional to their anchor gaps.

    When both ends touch their anchors the weights are undefined and the
    midpoint is used; ``return_fallback=True`` also returns a mask flagging
    those entries.
    """
    y_low, y_high, lower, upper = _prepare(y_low, y_high, lower, upper)
    w_low = lower - y_low
    w_high = y_high - upper
    denom = w_low + w_high
    fallback = denom <= 0
    safe = np.where(fallback, 1.0, denom)
    est = np.where(fallback, 0.5 * (lower + upper), (w_low * lower + w_high * upper) / safe)
    est = np.clip(est, lower, upper)
    if return_fallback:
        return _out(est), (bool(fallback) if np.ndim(fallback) == 0 else fallback)
    return _out(est)


def merge(y_low, y_high, lower, upper, mode: str = "approx"):
    if mode == "exact":
        return merge_exact(y_low, y_high, lower, upper)
    if mode == "approx":
        return merge_approx(y_low, y_high, lower, upper)
    raise ValueError(f"unknown merge mode {mode!r}")


def minimax_gap(y_low, y_high, lower, upper, estimate):
    """Left minus right side of the balance equation at ``estimate`` (zero at the exact merge)."""
    lhs = (estimate - y_low) ** 2 - (lower - y_low) ** 2
    rhs = (y_high - estimate) ** 2 - (y_high - upper) ** 2
    return lhs - rhs
