"""The Fisher randomization test engine.

Holds the observed outcomes fixed (the sharp null makes every counterfactual
equal to the observed value), recomputes the chosen statistic under exactly
enumerated or Monte Carlo treatment assignments, and reports the tail
p-value with ties counted as extreme.

Conventions, fixed here and relied on by the tests:

- Exact mode reports the unadjusted proportion #{T* >= T_obs} / #assignments.
- Monte Carlo mode reports the add-one estimate (1 + #{T* >= T_obs}) / (1 + M),
  which is a valid p-value and never zero.
- "Extreme" means T* >= T_obs - 1e-12 * |T_obs|: the relative slack keeps
  mathematically tied replicates (label permutations, mirror assignments)
  from being dropped by last-bit rounding.
- Replicates where the statistic is undefined (for example a rerandomization
  that makes some group constant, breaking the variance-weighted statistic)
  follow the configured policy: counted as extreme by default, or skipped.
  Their count is always reported. An undefined statistic on the *observed*
  data is an error.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import stats
from ._vectorized import STATISTIC_NAMES, statistic_values
from .design import DEFAULT_ENUMERATION_CAP, label_matrix_chunks
from .errors import RandexError, WrongArity
from .rng import derive_seed, make_rng

TIE_RELATIVE_SLACK = 1e-12

MODES = ("exact", "monte_carlo")
DEGENERATE_POLICIES = ("count-extreme", "skip")


@dataclass(frozen=True)
class FrtConfig:
    statistic: str
    seed: int
    mode: str = "monte_carlo"
    replications: int = 2000
    pair: tuple[int, int] | None = None
    degenerate_policy: str = "count-extreme"
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if self.statistic not in STATISTIC_NAMES:
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "monte_carlo" and self.replications < 1:
            raise ValueError("monte_carlo mode needs at least 1 replication")
        if (self.pair is not None) != (self.statistic == "pairwise"):
            raise ValueError("pair must be given exactly when statistic='pairwise'")
        if self.degenerate_policy not in DEGENERATE_POLICIES:
            raise ValueError(f"degenerate policy must be one of {DEGENERATE_POLICIES}")


@dataclass(frozen=True)
class TestResult:
    statistic: str
    observed: float
    p_value: float
    mode: str
    replications: int
    degenerate: int
    seed: int
    elapsed: float
    # Raw ingredients of the p-value after the degenerate policy was applied:
    # exact mode p = tail_count / valid_replications, Monte Carlo mode
    # p = (1 + tail_count) / (1 + valid_replications).
    tail_count: int = 0
    valid_replications: int = 0


def observed_statistic(
    data: stats.ObservedDataset, statistic: str, pair: tuple[int, int] | None = None
) -> float:
    """Statistic value on the observed data; raises when undefined."""
    if statistic == "f":
        return stats.f_statistic(data)
    if statistic == "x2":
        return stats.x2_statistic(data)
    if statistic == "t2":
        return stats.t2_statistic(data)
    if statistic == "dim":
        if data.n_treatments != 2:
            raise WrongArity("difference in means needs exactly 2 treatments")
        return abs(stats.difference_in_means(data))
    if statistic == "pairwise":
        return stats.pairwise_statistic(data, *pair)
    raise ValueError(f"unknown statistic {statistic!r}")


def run_frt(data: stats.ObservedDataset, config: FrtConfig) -> TestResult:
    """Run the randomization test for one statistic."""
    return run_frt_multi(data, (config.statistic,), config)[config.statistic]


def run_frt_multi(
    data: stats.ObservedDataset,
    statistics: Sequence[str],
    config: FrtConfig,
) -> dict[str, TestResult]:
    """Run the randomization test for several statistics on shared draws.

    All statistics see the same enumerated or simulated assignments, so a
    multi-statistic study costs one pass. The config's own ``statistic``
    field is ignored; ``statistics`` decides what is evaluated.
    """
    started = time.perf_counter()
    names = list(dict.fromkeys(statistics))
    # Statistic preconditions on the observed data are fatal by contract.
    for name in names:
        observed_statistic(data, name, config.pair)

    y = data.outcomes
    sizes = data.design.group_sizes
    w_observed = data.treatments[None, :]
    observed: dict[str, float] = {}
    for name in names:
        value, defined = statistic_values(name, y, w_observed, sizes, config.pair)
        assert bool(defined[0])
        observed[name] = float(value[0])

    extreme = {name: 0 for name in names}
    degenerate = {name: 0 for name in names}
    total = 0
    for chunk in _assignment_chunks(data, config):
        total += chunk.shape[0]
        for name in names:
            values, defined = statistic_values(name, y, chunk, sizes, config.pair)
            threshold = observed[name] - TIE_RELATIVE_SLACK * abs(observed[name])
            extreme[name] += int((values[defined] >= threshold).sum())
            degenerate[name] += int(chunk.shape[0] - defined.sum())

    elapsed = time.perf_counter() - started
    results = {}
    for name in names:
        if config.degenerate_policy == "count-extreme":
            tail = extreme[name] + degenerate[name]
            valid = total
        else:
            tail = extreme[name]
            valid = total - degenerate[name]
        if config.mode == "exact":
            if valid == 0:
                raise RandexError("every enumerated assignment was degenerate")
            p_value = tail / valid
        else:
            p_value = (1 + tail) / (1 + valid)
        results[name] = TestResult(
            statistic=name,
            observed=observed[name],
            p_value=p_value,
            mode=config.mode,
            replications=total,
            degenerate=degenerate[name],
            seed=config.seed,
            elapsed=elapsed,
            tail_count=tail,
            valid_replications=valid,
        )
    return results


def _assignment_chunks(data: stats.ObservedDataset, config: FrtConfig):
    n = data.n_units
    chunk_rows = max(1, min(4096, (1 << 21) // max(n, 1)))
    if config.mode == "exact":
        yield from label_matrix_chunks(
            data.design, cap=config.enumeration_cap, chunk_rows=chunk_rows
        )
        return
    rng = make_rng(config.seed)
    base = data.design.base_labels()
    remaining = config.replications
    while remaining > 0:
        rows = min(remaining, chunk_rows)
        yield rng.permuted(np.tile(base, (rows, 1)), axis=1)
        remaining -= rows


def run_frt_batch(
    datasets: Sequence[stats.ObservedDataset],
    config: FrtConfig,
    threads: int = 1,
) -> list[TestResult | RandexError]:
    """Run the same test over many datasets with per-item derived seeds.

    Item i uses seed derive_seed(config.seed, i), so results are a pure
    function of (datasets, config.seed) no matter how many threads run.
    Items whose observed statistic is undefined contribute their error
    object in place of a result; the batch continues.
    """

    def one(index: int) -> TestResult | RandexError:
        item_config = replace(config, seed=derive_seed(config.seed, index))
        try:
            return run_frt(datasets[index], item_config)
        except RandexError as error:
            return error

    indices = range(len(datasets))
    if threads <= 1:
        return [one(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, indices))
