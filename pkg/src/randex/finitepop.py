"""Finite-population quantities computed from a full potential-outcome table.

The table holds every Y_i(j), so nothing here is estimated: means, variances,
unit-level effect variances, the additivity deviation Delta, the exact
expectations of the ANOVA sums of squares over the assignment distribution,
and the two-treatment scale constants are all closed-form evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._vectorized import group_moments
from .design import DEFAULT_ENUMERATION_CAP, Design, label_matrix_chunks
from .errors import DimensionMismatch, NotNeymanNull, WrongArity

NEYMAN_NULL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PotentialOutcomeTable:
    """N x J science table; row i holds unit i's outcome under each treatment."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] < 2 or t.shape[1] < 2:
            raise ValueError("table must be N x J with N >= 2, J >= 2")
        if not np.all(np.isfinite(t)):
            raise ValueError("table entries must be finite")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def n_units(self) -> int:
        return self.table.shape[0]

    @property
    def n_treatments(self) -> int:
        return self.table.shape[1]

    def observe(self, labels: np.ndarray) -> np.ndarray:
        """Observed outcomes Y_i(W_i) for a label vector, or row-wise for a matrix."""
        labels = np.asarray(labels)
        units = np.arange(self.n_units)
        if labels.ndim == 1:
            return self.table[units, labels - 1]
        return self.table[units[None, :], labels - 1]


@dataclass(frozen=True)
class PopulationSummary:
    means: np.ndarray  # (J,)
    variances: np.ndarray  # (J,), divisor N-1
    effect_variances: np.ndarray  # (J, J) symmetric, S^2 of Y(j) - Y(j'), 0 diagonal
    delta: float  # weighted average of unit-level effect variances
    delta_j: np.ndarray  # (J,)
    weighted_mean: float  # sum_j p_j * mean_j
    weighted_variance: float  # sum_j p_j * var_j
    correlation: np.ndarray  # (J, J), NaN where a column variance is 0


def _column_variance(col: np.ndarray) -> float:
    if col.min() == col.max():
        return 0.0
    dev = col - col.mean()
    return float(dev @ dev) / (col.size - 1)


def _check_dimensions(pop: PotentialOutcomeTable, design: Design) -> None:
    if design.n_treatments != pop.n_treatments or design.n_units != pop.n_units:
        raise DimensionMismatch(
            f"table is {pop.n_units} x {pop.n_treatments}, design wants "
            f"{design.n_units} x {design.n_treatments}"
        )


def summarize_population(pop: PotentialOutcomeTable, design: Design) -> PopulationSummary:
    """All first- and second-moment population quantities for a design."""
    _check_dimensions(pop, design)
    t = pop.table
    n, j_max = t.shape
    p = design.proportions
    means = t.mean(axis=0)
    variances = np.array([_column_variance(t[:, j]) for j in range(j_max)])

    effect_variances = np.zeros((j_max, j_max))
    for j in range(j_max):
        for k in range(j + 1, j_max):
            v = _column_variance(t[:, j] - t[:, k])
            effect_variances[j, k] = effect_variances[k, j] = v

    delta_j = np.array(
        [
            sum(p[k] * effect_variances[j, k] for k in range(j_max) if k != j)
            for j in range(j_max)
        ]
    )
    delta = 0.0
    for j in range(j_max):
        for k in range(j + 1, j_max):
            delta += p[j] * p[k] * effect_variances[j, k]

    centered = t - means
    cov = centered.T @ centered / (n - 1)
    sd = np.sqrt(variances)
    with np.errstate(divide="ignore", invalid="ignore"):
        correlation = cov / np.outer(sd, sd)
    correlation[np.isinf(correlation)] = np.nan
    np.fill_diagonal(correlation, np.where(variances > 0, 1.0, np.nan))

    return PopulationSummary(
        means=means,
        variances=variances,
        effect_variances=effect_variances,
        delta=float(delta),
        delta_j=delta_j,
        weighted_mean=float(p @ means),
        weighted_variance=float(p @ variances),
        correlation=correlation,
    )


def expected_ss(pop: PotentialOutcomeTable, design: Design) -> tuple[float, float]:
    """Exact expectations (E[SSTre], E[SSRes]) over the assignment distribution."""
    _check_dimensions(pop, design)
    s = summarize_population(pop, design)
    sizes = np.asarray(design.group_sizes, dtype=float)
    p = design.proportions
    e_ss_res = float((sizes - 1) @ s.variances)
    e_ss_tre = float(
        sizes @ (s.means - s.weighted_mean) ** 2 + (1 - p) @ s.variances - s.delta
    )
    return e_ss_tre, e_ss_res


def enumerated_expected_ss(
    pop: PotentialOutcomeTable, design: Design, cap: int = DEFAULT_ENUMERATION_CAP
) -> tuple[float, float]:
    """(E[SSTre], E[SSRes]) by averaging over every enumerated assignment.

    The closed forms in :func:`expected_ss` are exact, so on designs under
    the enumeration cap the two routes must agree to rounding error; this is
    the self-check behind the CLI's --verify-enumerate flag.
    """
    _check_dimensions(pop, design)
    sizes = np.asarray(design.group_sizes, dtype=float)
    n = design.n_units
    total = 0
    sum_tre = 0.0
    sum_res = 0.0
    for w in label_matrix_chunks(design, cap=cap):
        y = pop.observe(w)
        means, devsq, _ = group_moments(y, w, design.group_sizes)
        grand = means @ sizes / n
        sum_tre += float((sizes * (means - grand[:, None]) ** 2).sum())
        sum_res += float(devsq.sum())
        total += w.shape[0]
    return sum_tre / total, sum_res / total


def ms_gap(pop: PotentialOutcomeTable, design: Design) -> float:
    """E[MSRes - MSTre] under equal column means.

    Positive for balanced designs; can be negative when larger groups have
    smaller variances, which is what makes the F randomization test
    anti-conservative there.
    """
    _check_dimensions(pop, design)
    s = summarize_population(pop, design)
    spread = float(s.means.max() - s.means.min())
    if spread > NEYMAN_NULL_TOLERANCE:
        raise NotNeymanNull(
            f"column means differ by {spread:.3g}; the gap formula assumes equal means"
        )
    n = design.n_units
    j_max = design.n_treatments
    p = design.proportions
    lead = (n - 1) * j_max / ((j_max - 1) * (n - j_max))
    return float(
        lead * ((p - 1.0 / j_max) @ s.variances) + s.delta / (j_max - 1)
    )


def two_treatment_constants(
    pop: PotentialOutcomeTable, design: Design
) -> tuple[float, float]:
    """Finite-N plug-in of the two-treatment scale constants (C1, C2).

    C1 scales the limiting chi-square law of the F statistic and can sit on
    either side of 1; C2 scales that of the variance-weighted statistic and
    never exceeds 1. Both are defined in the large-N limit; this evaluates
    the same ratios at the given N.
    """
    _check_dimensions(pop, design)
    if design.n_treatments != 2:
        raise WrongArity("constants are defined for two-treatment designs only")
    s = summarize_population(pop, design)
    n1, n2 = design.group_sizes
    n = n1 + n2
    v1, v2 = s.variances
    var_tau = v1 / n1 + v2 / n2 - s.effect_variances[0, 1] / n
    c1 = var_tau / (v1 / n2 + v2 / n1)
    c2 = var_tau / (v1 / n1 + v2 / n2)
    if not c2 <= 1 + 1e-12:
        raise AssertionError(f"C2 = {c2} exceeds 1 beyond numerical slack")
    return float(c1), float(c2)
