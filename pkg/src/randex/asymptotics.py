"""Reference distributions and large-sample theory for the test statistics.

Under the sharp null the F statistic is approximately F(J-1, N-J) and the
variance-weighted statistic approximately chi-square with J-1 degrees of
freedom. Under the weak null the latter converges to a weighted sum of
independent chi-square(1) terms whose weights are the nonzero eigenvalues of
P_w (P * R): P and P_w are the projections orthogonal to the square-root
proportion and precision vectors, R is the correlation matrix of the
potential-outcome columns, and * is the element-wise product. Every weight
is at most 1, which is what makes the test conservative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Design
from .errors import UnknownStatistic, ZeroVariance
from .finitepop import PotentialOutcomeTable, summarize_population
from .numerics import betainc_reg, gammainc_lower_reg, jacobi_eigenvalues
from .rng import make_rng
from .stats import ObservedDataset

SCHUR_SLACK = 1e-9
ZERO_EIGENVALUE_RELATIVE = 1e-8


def f_cdf(x: float, d1: int, d2: int) -> float:
    """CDF of the F distribution with (d1, d2) degrees of freedom."""
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0.0:
        return 0.0
    return betainc_reg(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2))


def chisq_cdf(x: float, d: int) -> float:
    """CDF of the chi-square distribution with d degrees of freedom."""
    if d < 1:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0.0:
        return 0.0
    return gammainc_lower_reg(d / 2.0, x / 2.0)


@dataclass(frozen=True)
class AsymptoticContext:
    """Projection and correlation matrices of a population under a design."""

    design: Design
    q: np.ndarray  # sqrt proportions, (J,)
    p_matrix: np.ndarray  # I - q q^T
    precision: np.ndarray  # Q_j = N_j / S^2(j), (J,)
    q_w: np.ndarray  # sqrt(Q_j / Q), (J,)
    p_w_matrix: np.ndarray  # I - q_w q_w^T
    correlation: np.ndarray  # R, (J, J)


@dataclass(frozen=True)
class ChiSquareMixture:
    """Law of sum_j lambda_j xi_j with xi_j iid chi-square(1)."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if any(v < -1e-12 for v in w):
            raise ValueError("mixture weights must be nonnegative")
        if any(v > 1.0 + SCHUR_SLACK for v in w):
            raise ValueError("mixture weights must not exceed 1")
        object.__setattr__(self, "weights", tuple(max(v, 0.0) for v in w))


@dataclass(frozen=True)
class TailEstimate:
    value: float
    se: float


def build_context(pop: PotentialOutcomeTable, design: Design) -> AsymptoticContext:
    """Assemble q, P, Q_j, q_w, P_w and R from population quantities."""
    s = summarize_population(pop, design)
    if np.any(s.variances <= 0.0):
        offenders = [j + 1 for j in np.flatnonzero(s.variances <= 0.0)]
        raise ZeroVariance(f"columns {offenders} have zero variance")
    sizes = np.asarray(design.group_sizes, dtype=float)
    q = np.sqrt(design.proportions)
    p_matrix = np.eye(design.n_treatments) - np.outer(q, q)
    precision = sizes / s.variances
    q_w = np.sqrt(precision / precision.sum())
    p_w_matrix = np.eye(design.n_treatments) - np.outer(q_w, q_w)
    return AsymptoticContext(
        design=design,
        q=q,
        p_matrix=p_matrix,
        precision=precision,
        q_w=q_w,
        p_w_matrix=p_w_matrix,
        correlation=s.correlation,
    )


def x2_null_mixture(ctx: AsymptoticContext) -> ChiSquareMixture:
    """Weights of the weak-null limit law of the variance-weighted statistic.

    The nonzero eigenvalues of P_w (P * R) are extracted from the symmetric
    sandwich P_w (P * R) P_w, which has the same nonzero spectrum because
    P_w is idempotent. The smallest eigenvalue is the structural zero
    contributed by the projection; the J-1 others are the weights.
    """
    j_max = ctx.design.n_treatments
    hadamard = ctx.p_matrix * ctx.correlation
    sandwich = ctx.p_w_matrix @ hadamard @ ctx.p_w_matrix
    eigenvalues = jacobi_eigenvalues((sandwich + sandwich.T) / 2.0)
    weights, structural_zero = eigenvalues[: j_max - 1], eigenvalues[j_max - 1]
    top = max(abs(float(eigenvalues[0])), 1e-30)
    if abs(float(structural_zero)) > ZERO_EIGENVALUE_RELATIVE * top:
        raise ValueError(
            f"expected a structural zero eigenvalue, found {structural_zero:.3e}"
        )
    if np.any(weights > 1.0 + SCHUR_SLACK):
        raise ValueError(f"eigenvalue above 1 beyond slack: {weights.max()}")
    return ChiSquareMixture(weights=tuple(float(v) for v in weights))


def mixture_tail(
    mix: ChiSquareMixture, a: float, draws: int = 10**6, seed: int = 0
) -> TailEstimate:
    """Monte Carlo estimate of P(mixture >= a) with its standard error."""
    if a < 0:
        raise ValueError("tail point must be nonnegative")
    weights = np.asarray(mix.weights)
    rng = make_rng(seed)
    hits = 0
    remaining = int(draws)
    while remaining > 0:
        block = min(remaining, 200_000)
        z = rng.standard_normal((block, weights.size))
        values = (z * z) @ weights
        hits += int((values >= a).sum())
        remaining -= block
    p = hits / draws
    return TailEstimate(value=p, se=float(np.sqrt(p * (1.0 - p) / draws)))


def asymptotic_pvalue(stat_name: str, value: float, data: ObservedDataset) -> float:
    """Large-sample tail p-value for an observed statistic value."""
    n, j = data.n_units, data.n_treatments
    if stat_name == "f":
        return 1.0 - f_cdf(value, j - 1, n - j)
    if stat_name == "x2":
        return 1.0 - chisq_cdf(value, j - 1)
    if stat_name == "pairwise":
        return 1.0 - chisq_cdf(value, 1)
    if stat_name == "t2":
        return 1.0 - chisq_cdf(value, 1)
    raise UnknownStatistic(f"no asymptotic reference for statistic {stat_name!r}")
