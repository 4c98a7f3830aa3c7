"""Simulation scenarios, rejection-rate studies, and built-in datasets.

Two study protocols exist and the distinction matters:

- ``fixed-population`` (type-I-error studies): one potential-outcome table is
  generated per scenario and then treated as fixed; each of the R replicates
  draws a fresh treatment assignment from it.
- ``fresh-population`` (power studies): every replicate generates its own
  table and assignment.

Column generation happens in three ordered steps: random columns are drawn,
the standardization directive (centering, or centering plus unit scaling) is
applied to them, and linear-transform columns are then computed from their
already-standardized sources. Mean shifts, when present, are added last, so
shifted scenarios have exactly the stated finite-population means.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .design import Design, sample_assignment
from .errors import InvalidScenario, RandexError, UnknownExample, UnknownScenario
from .finitepop import PotentialOutcomeTable
from .frt import FrtConfig, run_frt_multi
from ._vectorized import statistic_values
from .rng import derive_seed, make_rng
from .stats import ObservedDataset

HISTOGRAM_BINS = 20

STANDARDIZATIONS = ("none", "center", "center-scale")
PROTOCOLS = ("fixed-population", "fresh-population")


class ReplicateFailure(RandexError):
    """A study replicate's observed statistic was undefined."""

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"replicate {index}: {cause}")


@dataclass(frozen=True)
class ColumnSpec:
    """Generator for one potential-outcome column."""

    family: str  # "normal" | "exponential" | "lognormal" | "linear"
    mu: float = 0.0
    sigma: float = 1.0
    rate: float = 1.0  # exponential rate; the mean is 1 / rate
    slope: float = 1.0  # linear: slope * column[source] + intercept
    intercept: float = 0.0
    source: int = 1  # 1-based index of an earlier column


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    sizes: tuple[int, ...]
    columns: tuple[ColumnSpec, ...]
    standardize: str = "center"
    shifts: tuple[float, ...] | None = None
    protocol: str = "fixed-population"
    datasets: int = 2000  # R
    frt_draws: int = 2000  # M
    alpha: float = 0.05
    fixed_data: str | None = None  # built-in observed dataset instead of a generator

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if self.standardize not in STANDARDIZATIONS:
            raise InvalidScenario(f"unknown standardization {self.standardize!r}")
        if self.protocol not in PROTOCOLS:
            raise InvalidScenario(f"unknown protocol {self.protocol!r}")
        if self.fixed_data is not None:
            return
        if len(self.columns) != len(sizes):
            raise InvalidScenario("need one column generator per treatment group")
        for idx, col in enumerate(self.columns, start=1):
            if col.family == "linear" and not 1 <= col.source < idx:
                raise InvalidScenario(
                    f"linear column {idx} must reference an earlier column"
                )
        if self.shifts is not None and len(self.shifts) != len(sizes):
            raise InvalidScenario("shift vector length must equal J")

    @property
    def design(self) -> Design:
        return Design(group_sizes=self.sizes)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(raw: dict) -> "ScenarioSpec":
        columns = tuple(ColumnSpec(**c) for c in raw.get("columns", ()))
        fields = {k: v for k, v in raw.items() if k != "columns"}
        for key in ("sizes", "shifts"):
            if fields.get(key) is not None:
                fields[key] = tuple(fields[key])
        return ScenarioSpec(columns=columns, **fields)


@dataclass(frozen=True)
class StudyResult:
    scenario: str
    statistic: str
    alpha: float
    datasets: int
    frt_draws: int
    rejection_rate: float  # add-one p-value convention
    rejection_rate_raw: float  # raw-proportion convention
    mc_se: float  # sqrt(r (1 - r) / R) at the add-one rate
    histogram: tuple[int, ...]  # add-one p-values in 20 right-closed bins on [0, 1]
    p_value_convention: str
    degenerate_total: int


@dataclass(frozen=True)
class SummaryOnlyExample:
    """A dataset the source reports only through group summaries.

    The randomization test cannot be run from this record; the reported
    p-values are carried along as annotations.
    """

    name: str
    group_labels: tuple[str, ...]
    sizes: tuple[int, ...]
    means: tuple[float, ...]
    variances: tuple[float, ...]
    reported_p_f: float
    reported_p_x2: float
    summary_only: bool = True


def generate_population(spec: ScenarioSpec, seed: int) -> PotentialOutcomeTable:
    """Materialize the scenario's potential-outcome table."""
    if spec.fixed_data is not None:
        raise InvalidScenario(
            f"scenario {spec.name!r} is a fixed dataset; it has no generator"
        )
    n = sum(spec.sizes)
    rng = make_rng(seed)
    columns: list[np.ndarray | None] = [None] * len(spec.columns)
    for idx, col in enumerate(spec.columns):
        if col.family == "normal":
            columns[idx] = col.mu + col.sigma * rng.standard_normal(n)
        elif col.family == "exponential":
            columns[idx] = rng.exponential(scale=1.0 / col.rate, size=n)
        elif col.family == "lognormal":
            columns[idx] = np.exp(col.mu + col.sigma * rng.standard_normal(n))
        elif col.family != "linear":
            raise InvalidScenario(f"unknown column family {col.family!r}")

    if spec.standardize != "none":
        for idx, col in enumerate(columns):
            if col is None:
                continue
            centered = col - col.mean()
            if spec.standardize == "center-scale":
                sd = math.sqrt(float(centered @ centered) / (n - 1))
                centered = centered / sd
            columns[idx] = centered

    for idx, col in enumerate(spec.columns):
        if col.family == "linear":
            columns[idx] = col.slope * columns[col.source - 1] + col.intercept

    table = np.column_stack(columns)
    if spec.shifts is not None:
        table = table + np.asarray(spec.shifts)
    return PotentialOutcomeTable(table=table)


def run_study(
    spec: ScenarioSpec,
    statistics: tuple[str, ...],
    seed: int,
    threads: int = 1,
) -> dict[str, StudyResult]:
    """Rejection rates and p-value histograms over R replicates.

    Replicate r derives everything from derive_seed(seed, r + 1): its
    population (fresh-population protocol only), its assignment, and its
    Monte Carlo draw stream. Results are therefore identical for any thread
    count. All statistics share each replicate's draws.
    """
    if spec.fixed_data is not None:
        raise InvalidScenario(
            f"scenario {spec.name!r} is a fixed dataset; run the test command on it"
        )
    names = tuple(dict.fromkeys(statistics))
    design = spec.design
    fixed_pop = None
    if spec.protocol == "fixed-population":
        fixed_pop = generate_population(spec, derive_seed(seed, 0))

    def one(r: int) -> dict[str, tuple[float, float, int]]:
        child = derive_seed(seed, r + 1)
        pop = fixed_pop
        if pop is None:
            pop = generate_population(spec, derive_seed(child, 0))
        labels = sample_assignment(design, make_rng(derive_seed(child, 1))).as_array()
        data = ObservedDataset(outcomes=pop.observe(labels), treatments=labels)
        config = FrtConfig(
            statistic=names[0],
            seed=derive_seed(child, 2),
            mode="monte_carlo",
            replications=spec.frt_draws,
        )
        try:
            results = run_frt_multi(data, names, config)
        except RandexError as error:
            raise ReplicateFailure(r, error) from error
        out = {}
        for name in names:
            res = results[name]
            raw = res.tail_count / res.valid_replications
            out[name] = (res.p_value, raw, res.degenerate)
        return out

    indices = range(spec.datasets)
    if threads <= 1:
        rows = [one(r) for r in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, indices))

    studies = {}
    for name in names:
        p_addone = np.array([row[name][0] for row in rows])
        p_raw = np.array([row[name][1] for row in rows])
        degenerate_total = sum(row[name][2] for row in rows)
        rate = float((p_addone <= spec.alpha).mean())
        studies[name] = StudyResult(
            scenario=spec.name,
            statistic=name,
            alpha=spec.alpha,
            datasets=spec.datasets,
            frt_draws=spec.frt_draws,
            rejection_rate=rate,
            rejection_rate_raw=float((p_raw <= spec.alpha).mean()),
            mc_se=float(math.sqrt(rate * (1.0 - rate) / spec.datasets)),
            histogram=pvalue_histogram(p_addone),
            p_value_convention="add-one",
            degenerate_total=degenerate_total,
        )
    return studies


def pvalue_histogram(p_values: np.ndarray) -> tuple[int, ...]:
    """Counts over 20 equal right-closed bins of [0, 1]."""
    idx = np.ceil(np.asarray(p_values) * HISTOGRAM_BINS).astype(int) - 1
    idx = np.clip(idx, 0, HISTOGRAM_BINS - 1)
    return tuple(int(c) for c in np.bincount(idx, minlength=HISTOGRAM_BINS))


def sample_statistic(
    pop: PotentialOutcomeTable,
    design: Design,
    statistic: str,
    draws: int,
    seed: int,
    pair: tuple[int, int] | None = None,
) -> tuple[np.ndarray, int]:
    """Sampling distribution of a statistic over fresh assignments.

    Unlike the randomization test, the observed outcomes change with each
    assignment: Y_i = table[i, W_i]. Returns the defined statistic values
    and the count of degenerate draws.
    """
    if design.n_units != pop.n_units or design.n_treatments != pop.n_treatments:
        raise InvalidScenario("design does not match the table")
    rng = make_rng(seed)
    base = design.base_labels()
    n = design.n_units
    chunk_rows = max(1, min(4096, (1 << 21) // n))
    collected = []
    degenerate = 0
    remaining = int(draws)
    while remaining > 0:
        rows = min(remaining, chunk_rows)
        w = rng.permuted(np.tile(base, (rows, 1)), axis=1)
        y = pop.observe(w)
        values, defined = statistic_values(statistic, y, w, design.group_sizes, pair)
        collected.append(values[defined])
        degenerate += int(rows - defined.sum())
        remaining -= rows
    return np.concatenate(collected), degenerate


# --- built-in catalog ------------------------------------------------------

_MONTGOMERY_GROUPS = (
    (58.2, 57.2, 58.4, 55.8, 54.9),
    (56.3, 54.5, 57.0, 55.3),
    (50.1, 54.2, 55.4),
    (52.9, 49.9, 50.0, 51.7),
)

_ANGRIST = SummaryOnlyExample(
    name="angrist-summary",
    group_labels=("control", "sfp", "ssp", "sfsp"),
    sizes=(854, 219, 212, 119),
    means=(63.86, 65.83, 64.13, 66.10),
    variances=(144.97, 124.45, 159.76, 114.33),
    reported_p_f=0.058,
    reported_p_x2=0.045,
)


def load_example(name: str) -> ObservedDataset | SummaryOnlyExample:
    """Built-in datasets: 'montgomery' (full data) or 'angrist-summary'."""
    key = name.strip().lower()
    if key == "montgomery":
        outcomes = np.concatenate([np.asarray(g) for g in _MONTGOMERY_GROUPS])
        treatments = np.concatenate(
            [np.full(len(g), j + 1) for j, g in enumerate(_MONTGOMERY_GROUPS)]
        )
        return ObservedDataset(outcomes=outcomes, treatments=treatments)
    if key == "angrist-summary":
        return _ANGRIST
    raise UnknownExample(f"no built-in example named {name!r}")


def _normals(sigmas, mus=None) -> tuple[ColumnSpec, ...]:
    mus = mus or [0.0] * len(sigmas)
    return tuple(
        ColumnSpec(family="normal", mu=m, sigma=s) for m, s in zip(mus, sigmas)
    )


def _exponentials(rates) -> tuple[ColumnSpec, ...]:
    return tuple(ColumnSpec(family="exponential", rate=r) for r in rates)


def _transformed(base: ColumnSpec, slopes, intercepts=None) -> tuple[ColumnSpec, ...]:
    intercepts = intercepts or [0.0] * len(slopes)
    tail = tuple(
        ColumnSpec(family="linear", slope=s, intercept=b, source=1)
        for s, b in zip(slopes, intercepts)
    )
    return (base,) + tail


def builtin_scenarios() -> dict[str, ScenarioSpec]:
    """All named simulation scenarios, keyed by identifier."""
    normal = ColumnSpec(family="normal")
    expo = ColumnSpec(family="exponential", rate=1.0)
    catalog: dict[str, ScenarioSpec] = {}

    def add(name, sizes, columns, shifts=None, protocol="fixed-population", standardize="center"):
        catalog[name] = ScenarioSpec(
            name=name,
            sizes=tuple(sizes),
            columns=columns,
            standardize=standardize,
            shifts=shifts,
            protocol=protocol,
        )

    # Balanced designs, heteroskedastic independent columns, weak null holds.
    for n in (45, 120):
        third = (n // 3,) * 3
        add(f"case-1.1-n{n}", third, _normals((1.0, 1.2, 1.5)))
        add(f"case-1.2-n{n}", third, _normals((1.0, 2.0, 3.0)))
    # Unbalanced, sizes increasing with variances: conservative F.
    for sizes in ((10, 20, 30), (20, 30, 50)):
        n = sum(sizes)
        add(f"case-2.1-n{n}", sizes, _transformed(normal, (2.0, 3.0)))
        add(f"case-2.2-n{n}", sizes, _transformed(normal, (3.0, 5.0)))
    # Unbalanced, sizes decreasing in variances: anti-conservative F.
    for sizes in ((30, 20, 10), (50, 30, 20)):
        n = sum(sizes)
        add(f"case-3.1-n{n}", sizes, _transformed(normal, (2.0, 3.0)))
        add(f"case-3.2-n{n}", sizes, _transformed(normal, (3.0, 5.0)))
    # Power studies: fresh population per replicate, shifted means.
    for n in (30, 45):
        add(
            f"case-4-n{n}",
            (n // 3,) * 3,
            _normals((1.0, 2.0, 3.0)),
            shifts=(0.0, 1.0, 2.0),
            protocol="fresh-population",
        )
    for sizes in ((10, 20, 30), (20, 30, 50)):
        add(
            f"case-5-n{sum(sizes)}",
            sizes,
            _transformed(normal, (3.0, 5.0), intercepts=(1.0, 2.0)),
            protocol="fresh-population",
        )
    for sizes in ((30, 20, 10), (50, 30, 20)):
        add(
            f"case-6-n{sum(sizes)}",
            sizes,
            _transformed(normal, (3.0, 5.0), intercepts=(1.0, 2.0)),
            protocol="fresh-population",
        )

    # Exponential-outcome twins of the cases above.
    for n in (45, 120):
        third = (n // 3,) * 3
        add(f"case-s1.1-n{n}", third, _exponentials((1.0, 0.7, 0.5)))
        add(f"case-s1.2-n{n}", third, _exponentials((1.0, 0.5, 0.3)))
    for sizes in ((10, 20, 30), (20, 30, 50)):
        n = sum(sizes)
        add(f"case-s2.1-n{n}", sizes, _transformed(expo, (2.0, 3.0)))
        add(f"case-s2.2-n{n}", sizes, _transformed(expo, (3.0, 5.0)))
    for sizes in ((30, 20, 10), (50, 30, 20)):
        n = sum(sizes)
        add(f"case-s3.1-n{n}", sizes, _transformed(expo, (1.2, 1.5)))
        add(f"case-s3.2-n{n}", sizes, _transformed(expo, (1.5, 2.0)))
    for n in (30, 45):
        add(
            f"case-s4-n{n}",
            (n // 3,) * 3,
            _exponentials((1.0, 0.7, 0.5)),
            shifts=(0.0, 0.5, 1.0),
            protocol="fresh-population",
        )
    for sizes in ((10, 20, 30), (20, 30, 50)):
        add(
            f"case-s5-n{sum(sizes)}",
            sizes,
            _transformed(expo, (3.0, 5.0), intercepts=(1.0, 2.0)),
            protocol="fresh-population",
        )
    for sizes in ((30, 20, 10), (50, 30, 20)):
        add(
            f"case-s6-n{sum(sizes)}",
            sizes,
            _transformed(expo, (3.0, 5.0), intercepts=(1.0, 2.0)),
            protocol="fresh-population",
        )

    # Log-normal columns standardized to common mean 0 and variance 1:
    # equal-variance check of the F / weighted-statistic equivalence.
    lognormal = tuple(
        ColumnSpec(family="lognormal", mu=float(m), sigma=1.0) for m in (0, 1, 2)
    )
    for sizes in ((10, 10, 10), (10, 15, 20), (20, 15, 10)):
        tag = "-".join(str(s) for s in sizes)
        add(f"lognormal-homo-{tag}", sizes, lognormal, standardize="center-scale")
        shifts = (0.0, 0.5, 1.0) if sizes == (10, 10, 10) else (0.0, 0.2, 0.5)
        add(
            f"lognormal-shifted-{tag}",
            sizes,
            lognormal,
            shifts=shifts,
            protocol="fresh-population",
            standardize="center-scale",
        )

    # The two demonstration populations for the weak-null law of the
    # variance-weighted statistic: perfectly correlated vs independent columns.
    add("example-s1-correlated", (120, 80, 40), _transformed(normal, (3.0, 5.0)))
    add("example-s1-independent", (120, 80, 40), _normals((1.0, 3.0, 5.0)))

    # Fixed real dataset; runs through the test command, not the simulator.
    catalog["montgomery"] = ScenarioSpec(
        name="montgomery",
        sizes=(5, 4, 3, 4),
        columns=(),
        fixed_data="montgomery",
    )
    return catalog


def get_scenario(name: str) -> ScenarioSpec:
    key = name.strip().lower()
    catalog = builtin_scenarios()
    if key not in catalog:
        raise UnknownScenario(f"unknown scenario {name!r}; see builtin_scenarios()")
    return catalog[key]
