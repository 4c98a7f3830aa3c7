"""Randomization inference for completely randomized experiments.

Exact and Monte Carlo Fisher randomization tests with the classical F
statistic and a variance-weighted alternative that stays conservative under
treatment-effect heterogeneity, plus the finite-population theory and the
simulation studies behind the comparison.
"""

from . import errors
from .asymptotics import (
    AsymptoticContext,
    ChiSquareMixture,
    TailEstimate,
    asymptotic_pvalue,
    build_context,
    chisq_cdf,
    f_cdf,
    mixture_tail,
    x2_null_mixture,
)
from .design import (
    Assignment,
    Design,
    assignment_count,
    enumerate_assignments,
    sample_assignment,
)
from .finitepop import (
    PopulationSummary,
    PotentialOutcomeTable,
    enumerated_expected_ss,
    expected_ss,
    ms_gap,
    summarize_population,
    two_treatment_constants,
)
from .frt import FrtConfig, TestResult, run_frt, run_frt_batch, run_frt_multi
from .rng import derive_seed, make_rng
from .scenarios import (
    ColumnSpec,
    ScenarioSpec,
    StudyResult,
    SummaryOnlyExample,
    builtin_scenarios,
    generate_population,
    get_scenario,
    load_example,
    run_study,
    sample_statistic,
)
from .stats import (
    AnovaDecomposition,
    GroupSummary,
    ObservedDataset,
    anova,
    difference_in_means,
    f_statistic,
    pairwise_statistic,
    summarize,
    t2_statistic,
    x2_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "AsymptoticContext",
    "AnovaDecomposition",
    "ChiSquareMixture",
    "ColumnSpec",
    "Design",
    "FrtConfig",
    "GroupSummary",
    "ObservedDataset",
    "PopulationSummary",
    "PotentialOutcomeTable",
    "ScenarioSpec",
    "StudyResult",
    "SummaryOnlyExample",
    "TailEstimate",
    "TestResult",
    "anova",
    "assignment_count",
    "asymptotic_pvalue",
    "build_context",
    "builtin_scenarios",
    "chisq_cdf",
    "derive_seed",
    "difference_in_means",
    "enumerate_assignments",
    "enumerated_expected_ss",
    "errors",
    "expected_ss",
    "f_cdf",
    "f_statistic",
    "generate_population",
    "get_scenario",
    "load_example",
    "make_rng",
    "mixture_tail",
    "ms_gap",
    "pairwise_statistic",
    "run_frt",
    "run_frt_batch",
    "run_frt_multi",
    "run_study",
    "sample_assignment",
    "sample_statistic",
    "summarize",
    "summarize_population",
    "t2_statistic",
    "two_treatment_constants",
    "x2_null_mixture",
    "x2_statistic",
]
