"""Batched statistic evaluation over stacks of treatment assignments.

Given outcomes (shared or per-row) and an (M, N) matrix of label vectors,
these routines compute one statistic value per row together with a mask of
rows where the statistic is defined. Group moments use the same two-pass
formulas as :mod:`randex.stats`, and every reduction runs row-by-row with
numpy's pairwise summation, so results are independent of chunking and
thread count.

Zero within-group variance is detected exactly (group min equals max), never
from a floating-point variance estimate.
"""

from __future__ import annotations

import numpy as np

STATISTIC_NAMES = ("f", "x2", "t2", "pairwise", "dim")


def group_moments(y: np.ndarray, w: np.ndarray, sizes: tuple[int, ...]):
    """Per-row group means, centered sums of squares, and constancy flags.

    y is (N,) for a fixed outcome vector or (M, N) for per-row outcomes;
    w is (M, N) with labels 1..J. Returns (means, devsq, const), each (M, J).
    """
    w = np.asarray(w)
    m_rows = w.shape[0]
    j_max = len(sizes)
    yb = np.asarray(y, dtype=float)
    if yb.ndim == 1:
        yb = np.broadcast_to(yb, w.shape)
    means = np.empty((m_rows, j_max))
    devsq = np.empty((m_rows, j_max))
    const = np.empty((m_rows, j_max), dtype=bool)
    for j in range(1, j_max + 1):
        nj = sizes[j - 1]
        mask = w == j
        means[:, j - 1] = np.where(mask, yb, 0.0).sum(axis=1) / nj
        gmax = np.where(mask, yb, -np.inf).max(axis=1)
        gmin = np.where(mask, yb, np.inf).min(axis=1)
        const[:, j - 1] = gmax == gmin
        dev = np.where(mask, yb - means[:, j - 1, None], 0.0)
        devsq[:, j - 1] = np.where(const[:, j - 1], 0.0, (dev * dev).sum(axis=1))
    return means, devsq, const


def total_variance_rows(y: np.ndarray, n: int) -> np.ndarray | float:
    """Row-wise total sample variance (divisor N-1), exact 0 for constant rows."""
    yb = np.asarray(y, dtype=float)
    if yb.ndim == 1:
        if yb.min() == yb.max():
            return 0.0
        dev = yb - yb.mean()
        return float(dev @ dev) / (n - 1)
    constant = yb.min(axis=1) == yb.max(axis=1)
    dev = yb - yb.mean(axis=1, keepdims=True)
    s2 = (dev * dev).sum(axis=1) / (n - 1)
    return np.where(constant, 0.0, s2)


def statistic_values(
    name: str,
    y: np.ndarray,
    w: np.ndarray,
    sizes: tuple[int, ...],
    pair: tuple[int, int] | None = None,
):
    """Evaluate one statistic on every row of assignments.

    Returns (values, defined); values are NaN where not defined. Static
    preconditions (arity, minimum group sizes) must already hold: they are
    checked against the observed data before any replicate is evaluated.
    """
    sizes = tuple(int(s) for s in sizes)
    n = sum(sizes)
    j_max = len(sizes)
    means, devsq, const = group_moments(y, w, sizes)
    nj = np.asarray(sizes, dtype=float)

    if name == "f":
        grand = means @ nj / n
        ss_tre = (nj * (means - grand[:, None]) ** 2).sum(axis=1)
        ss_res = devsq.sum(axis=1)
        defined = ss_res > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            values = (ss_tre / (j_max - 1)) / (ss_res / (n - j_max))
        return np.where(defined, values, np.nan), defined

    if name == "x2":
        defined = ~const.any(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            var = devsq / (nj - 1.0)
            q = nj / var
            weighted_mean = (q * means).sum(axis=1) / q.sum(axis=1)
            values = (q * (means - weighted_mean[:, None]) ** 2).sum(axis=1)
        return np.where(defined, values, np.nan), defined

    if name == "t2":
        tau = means[:, 0] - means[:, 1]
        s2 = total_variance_rows(y, n)
        scale = n * s2 / (sizes[0] * sizes[1])
        if np.ndim(scale) == 0:
            defined = np.full(w.shape[0], scale > 0.0)
            scale = np.where(scale > 0.0, scale, np.nan)
        else:
            defined = scale > 0.0
            scale = np.where(defined, scale, np.nan)
        return np.where(defined, tau**2 / scale, np.nan), defined

    if name == "pairwise":
        j, jp = pair
        defined = ~const[:, j - 1] & ~const[:, jp - 1]
        tau = means[:, j - 1] - means[:, jp - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = devsq[:, j - 1] / ((sizes[j - 1] - 1.0) * sizes[j - 1]) + devsq[
                :, jp - 1
            ] / ((sizes[jp - 1] - 1.0) * sizes[jp - 1])
            values = tau**2 / denom
        return np.where(defined, values, np.nan), defined

    if name == "dim":
        values = np.abs(means[:, 0] - means[:, 1])
        return values, np.ones(w.shape[0], dtype=bool)

    raise ValueError(f"unknown statistic kernel {name!r}")
