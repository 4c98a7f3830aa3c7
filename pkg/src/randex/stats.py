"""Sample-level summaries and test statistics for an observed dataset.

All statistics are pure functions of (outcomes, treatments). Undefined cases
raise typed errors from :mod:`randex.errors`; they never return inf or NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Design
from .errors import (
    DegreesOfFreedom,
    GroupTooSmall,
    WrongArity,
    ZeroGroupVariance,
    ZeroResidual,
    ZeroTotalVariance,
)


@dataclass(frozen=True)
class ObservedDataset:
    """Observed outcomes paired with the treatment each unit received.

    Treatments are labels in {1, ..., J}; every level must appear at least
    once. The implied design is recovered from the label counts.
    """

    outcomes: np.ndarray
    treatments: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.outcomes, dtype=float)
        w = np.asarray(self.treatments, dtype=np.int64)
        if y.ndim != 1 or w.ndim != 1 or y.size != w.size:
            raise ValueError("outcomes and treatments must be 1-D and equally long")
        if y.size == 0 or not np.all(np.isfinite(y)):
            raise ValueError("outcomes must be nonempty and finite")
        j = int(w.max())
        if j < 2 or int(w.min()) < 1:
            raise ValueError("treatment labels must cover {1, ..., J} with J >= 2")
        counts = np.bincount(w, minlength=j + 1)[1:]
        if np.any(counts == 0):
            raise ValueError("every treatment level 1..J must appear at least once")
        y.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "outcomes", y)
        object.__setattr__(self, "treatments", w)

    @property
    def n_units(self) -> int:
        return self.outcomes.size

    @property
    def n_treatments(self) -> int:
        return int(self.treatments.max())

    @property
    def design(self) -> Design:
        counts = np.bincount(self.treatments, minlength=self.n_treatments + 1)[1:]
        return Design(group_sizes=tuple(int(c) for c in counts))

    def group(self, j: int) -> np.ndarray:
        return self.outcomes[self.treatments == j]


@dataclass(frozen=True)
class GroupSummary:
    sizes: tuple[int, ...]
    means: tuple[float, ...]
    variances: tuple[float, ...]  # divisor N_j - 1; NaN for singleton groups
    grand_mean: float
    total_variance: float  # divisor N - 1


@dataclass(frozen=True)
class AnovaDecomposition:
    ss_treatment: float
    ss_residual: float
    ss_total: float
    df_treatment: int  # J - 1
    df_residual: int  # N - J

    @property
    def ms_treatment(self) -> float:
        return self.ss_treatment / self.df_treatment

    @property
    def ms_residual(self) -> float:
        return self.ss_residual / self.df_residual


def _sample_variance(values: np.ndarray) -> float:
    """Two-pass sample variance with divisor n-1; exact 0 for constant data."""
    n = values.size
    if n < 2:
        return float("nan")
    if values.min() == values.max():
        return 0.0
    dev = values - values.mean()
    return float(dev @ dev) / (n - 1)


def summarize(data: ObservedDataset) -> GroupSummary:
    """Per-group sizes, means, and variances plus the pooled mean/variance."""
    j_max = data.n_treatments
    sizes, means, variances = [], [], []
    for j in range(1, j_max + 1):
        yj = data.group(j)
        sizes.append(int(yj.size))
        means.append(float(yj.mean()))
        variances.append(_sample_variance(yj))
    return GroupSummary(
        sizes=tuple(sizes),
        means=tuple(means),
        variances=tuple(variances),
        grand_mean=float(data.outcomes.mean()),
        total_variance=_sample_variance(data.outcomes),
    )


def anova(data: ObservedDataset) -> AnovaDecomposition:
    """Treatment / residual / total sum-of-squares decomposition."""
    n, j = data.n_units, data.n_treatments
    if n <= j:
        raise DegreesOfFreedom(f"need N > J, got N={n}, J={j}")
    summary = summarize(data)
    ss_tre = 0.0
    ss_res = 0.0
    for nj, mj, vj in zip(summary.sizes, summary.means, summary.variances):
        ss_tre += nj * (mj - summary.grand_mean) ** 2
        if nj > 1:
            ss_res += (nj - 1) * vj
    ss_tot = (n - 1) * summary.total_variance
    return AnovaDecomposition(
        ss_treatment=ss_tre,
        ss_residual=ss_res,
        ss_total=ss_tot,
        df_treatment=j - 1,
        df_residual=n - j,
    )


def f_statistic(data: ObservedDataset) -> float:
    """Classical one-way F ratio: between-group over within-group mean square."""
    n, j = data.n_units, data.n_treatments
    decomp = anova(data)
    if decomp.ss_residual == 0.0:
        raise ZeroResidual("all within-group outcomes are constant")
    return (decomp.ss_treatment / (j - 1)) / (decomp.ss_residual / (n - j))


def x2_statistic(data: ObservedDataset) -> float:
    """Variance-weighted between-group statistic (weighted least squares form).

    Weights each group mean by N_j over its sample variance; robust to
    unequal variances across groups under unbalanced designs.
    """
    summary = summarize(data)
    weights = []
    for j, (nj, vj) in enumerate(zip(summary.sizes, summary.variances), start=1):
        if nj < 2:
            raise GroupTooSmall(j)
        if vj == 0.0:
            raise ZeroGroupVariance(j)
        weights.append(nj / vj)
    q = np.asarray(weights)
    means = np.asarray(summary.means)
    weighted_mean = float(q @ means) / float(q.sum())
    return float(q @ (means - weighted_mean) ** 2)


def difference_in_means(data: ObservedDataset, j: int = 1, jp: int = 2) -> float:
    """Mean outcome of group j minus that of group jp."""
    return float(data.group(j).mean() - data.group(jp).mean())


def t2_statistic(data: ObservedDataset) -> float:
    """Squared difference in means scaled by the pooled variance (J = 2 only).

    The two-sided randomization test using this statistic orders assignments
    exactly as the absolute difference in means does.
    """
    if data.n_treatments != 2:
        raise WrongArity(f"T^2 needs exactly 2 treatments, got {data.n_treatments}")
    s2 = _sample_variance(data.outcomes)
    if s2 == 0.0:
        raise ZeroTotalVariance("all outcomes are equal")
    n1, n2 = data.design.group_sizes
    n = data.n_units
    tau = difference_in_means(data)
    return tau**2 / (n * s2 / (n1 * n2))


def pairwise_statistic(data: ObservedDataset, j: int, jp: int) -> float:
    """Studentized squared mean difference between groups j and jp."""
    if j == jp:
        raise ValueError("pairwise statistic needs two distinct groups")
    summary = summarize(data)
    for g in (j, jp):
        if not 1 <= g <= data.n_treatments:
            raise ValueError(f"group {g} not in 1..{data.n_treatments}")
        if summary.sizes[g - 1] < 2:
            raise GroupTooSmall(g)
        if summary.variances[g - 1] == 0.0:
            raise ZeroGroupVariance(g)
    tau = summary.means[j - 1] - summary.means[jp - 1]
    denom = (
        summary.variances[j - 1] / summary.sizes[j - 1]
        + summary.variances[jp - 1] / summary.sizes[jp - 1]
    )
    return tau**2 / denom
