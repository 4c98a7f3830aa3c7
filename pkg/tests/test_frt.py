"""Randomization-test engine: exact enumeration, Monte Carlo, determinism."""

import dataclasses
import math

import numpy as np
import pytest

from randex import (
    Design,
    FrtConfig,
    ObservedDataset,
    derive_seed,
    enumerate_assignments,
    f_statistic,
    run_frt,
    run_frt_batch,
    run_frt_multi,
    x2_statistic,
)
from randex.errors import CapExceeded, RandexError, ZeroGroupVariance

from helpers import (
    ORACLE_STATISTICS,
    oracle_exact_pvalue,
    oracle_pairwise,
)


def toy():
    return ObservedDataset(outcomes=[1.0, 2.0, 3.0, 4.0], treatments=[1, 1, 2, 2])


def random_dataset(rng, sizes, scale=1.0, shift=0.0):
    labels = np.repeat(np.arange(1, len(sizes) + 1), sizes)
    y = shift + scale * rng.standard_normal(labels.size)
    return ObservedDataset(outcomes=y, treatments=labels)


class TestExactMode:
    def test_toy_two_sided_difference(self):
        # Over all 6 assignments exactly the observed one and its mirror have
        # |difference in means| >= 2, so p = 2/6.
        for statistic in ("dim", "t2"):
            result = run_frt(toy(), FrtConfig(statistic=statistic, seed=0, mode="exact"))
            assert result.p_value == 2 / 6
            assert result.replications == 6
            assert result.degenerate == 0

    def test_constant_outcomes_give_p_one(self):
        data = ObservedDataset(outcomes=[5.0] * 6, treatments=[1, 1, 1, 2, 2, 2])
        for mode in ("exact", "monte_carlo"):
            result = run_frt(
                data, FrtConfig(statistic="dim", seed=3, mode=mode, replications=500)
            )
            assert result.p_value == 1.0

    def test_p_value_lower_bound(self):
        rng = np.random.default_rng(0)
        data = random_dataset(rng, (3, 3))
        result = run_frt(data, FrtConfig(statistic="f", seed=0, mode="exact"))
        assert result.p_value >= 1 / 20

    def test_cap_exceeded(self):
        rng = np.random.default_rng(1)
        data = random_dataset(rng, (10, 10, 10))
        with pytest.raises(CapExceeded):
            run_frt(data, FrtConfig(statistic="f", seed=0, mode="exact"))

    def test_observed_statistic_matches_stats_module(self):
        rng = np.random.default_rng(2)
        data = random_dataset(rng, (4, 5), shift=3.0)
        result = run_frt(data, FrtConfig(statistic="f", seed=0, mode="exact"))
        assert result.observed == pytest.approx(f_statistic(data), rel=1e-12)
        result = run_frt(data, FrtConfig(statistic="x2", seed=0, mode="exact"))
        assert result.observed == pytest.approx(x2_statistic(data), rel=1e-12)

    def test_monotonicity_in_observed_value(self):
        # Same outcome vector, same replicate set: a larger observed value
        # never gets a larger p-value.
        rng = np.random.default_rng(4)
        y = rng.standard_normal(8)
        design = Design(group_sizes=(4, 4))
        results = []
        for a in enumerate_assignments(design):
            data = ObservedDataset(outcomes=y, treatments=a.labels)
            res = run_frt(data, FrtConfig(statistic="t2", seed=0, mode="exact"))
            results.append((res.observed, res.p_value))
        results.sort()
        for (_, p_small), (_, p_large) in zip(results, results[1:]):
            assert p_large <= p_small

    def test_two_sided_equivalence_dim_t2(self):
        # Exact p-values via |tau| and via the pooled-variance square agree
        # on every two-treatment dataset (monotone transformation).
        rng = np.random.default_rng(5)
        for sizes in [(3, 4), (4, 4), (2, 5)]:
            data = random_dataset(rng, sizes, scale=2.0)
            p_dim = run_frt(data, FrtConfig(statistic="dim", seed=0, mode="exact")).p_value
            p_t2 = run_frt(data, FrtConfig(statistic="t2", seed=0, mode="exact")).p_value
            assert p_dim == p_t2


class TestBruteForceOracle:
    @pytest.mark.parametrize(
        "sizes, statistic",
        [
            ((4, 4), "f"),
            ((4, 4), "x2"),
            ((4, 4), "t2"),
            ((4, 4), "dim"),
            ((3, 4), "t2"),
            ((2, 3, 4), "f"),
            ((2, 3, 4), "x2"),
            ((3, 3, 2), "f"),
        ],
    )
    def test_exact_pvalues_bit_for_bit(self, sizes, statistic):
        rng = np.random.default_rng(sum(sizes) * 37 + len(statistic))
        data = random_dataset(rng, sizes, scale=1.5, shift=1.0)
        engine = run_frt(data, FrtConfig(statistic=statistic, seed=0, mode="exact"))
        oracle_p, oracle_degenerate = oracle_exact_pvalue(
            data.outcomes.tolist(),
            data.treatments.tolist(),
            sizes,
            ORACLE_STATISTICS[statistic],
        )
        assert engine.p_value == oracle_p
        assert engine.degenerate == oracle_degenerate

    def test_exact_pairwise_bit_for_bit(self):
        rng = np.random.default_rng(88)
        data = random_dataset(rng, (3, 2, 3), scale=2.0)
        engine = run_frt(
            data, FrtConfig(statistic="pairwise", seed=0, mode="exact", pair=(1, 3))
        )
        oracle_p, _ = oracle_exact_pvalue(
            data.outcomes.tolist(),
            data.treatments.tolist(),
            (3, 2, 3),
            oracle_pairwise(1, 3),
        )
        assert engine.p_value == oracle_p

    def test_tied_discrete_outcomes(self):
        # Heavily tied integer outcomes stress the tie-counting rule.
        data = ObservedDataset(outcomes=[1.0, 2.0, 1.0, 2.0], treatments=[1, 1, 2, 2])
        engine = run_frt(data, FrtConfig(statistic="f", seed=0, mode="exact"))
        oracle_p, oracle_degenerate = oracle_exact_pvalue(
            [1.0, 2.0, 1.0, 2.0], [1, 1, 2, 2], (2, 2), ORACLE_STATISTICS["f"]
        )
        assert engine.p_value == oracle_p
        assert engine.degenerate == oracle_degenerate
        assert engine.degenerate == 2  # the two split-by-value assignments


class TestDegeneratePolicies:
    def setup_method(self):
        # Observed groups (0, 1) and (0, 2) are fine; the two assignments
        # pooling the equal outcomes (0, 0) into one group break the
        # variance-weighted statistic.
        self.data = ObservedDataset(outcomes=[0.0, 0.0, 1.0, 2.0], treatments=[1, 2, 1, 2])

    def test_count_extreme(self):
        result = run_frt(self.data, FrtConfig(statistic="x2", seed=0, mode="exact"))
        assert result.degenerate == 2
        oracle_p, _ = oracle_exact_pvalue(
            [0.0, 0.0, 1.0, 2.0], [1, 2, 1, 2], (2, 2), ORACLE_STATISTICS["x2"]
        )
        assert result.p_value == oracle_p

    def test_skip_policy(self):
        result = run_frt(
            self.data,
            FrtConfig(statistic="x2", seed=0, mode="exact", degenerate_policy="skip"),
        )
        assert result.degenerate == 2
        oracle_p, _ = oracle_exact_pvalue(
            [0.0, 0.0, 1.0, 2.0], [1, 2, 1, 2], (2, 2),
            ORACLE_STATISTICS["x2"], policy="skip",
        )
        assert result.p_value == oracle_p
        assert result.valid_replications == 4

    def test_observed_degenerate_is_fatal(self):
        data = ObservedDataset(outcomes=[0.0, 0.0, 1.0, 2.0], treatments=[1, 1, 2, 2])
        with pytest.raises(ZeroGroupVariance):
            run_frt(data, FrtConfig(statistic="x2", seed=0, mode="exact"))


class TestMonteCarlo:
    def test_p_value_range_and_add_one(self):
        rng = np.random.default_rng(6)
        data = random_dataset(rng, (5, 5))
        m = 199
        result = run_frt(
            data, FrtConfig(statistic="f", seed=9, mode="monte_carlo", replications=m)
        )
        assert 1 / (m + 1) <= result.p_value <= 1.0
        assert result.replications == m
        # p has the add-one form (1 + k) / (1 + M).
        k = round(result.p_value * (m + 1)) - 1
        assert result.p_value == (1 + k) / (1 + m)

    def test_matches_exact_within_binomial_error(self):
        rng = np.random.default_rng(7)
        data = random_dataset(rng, (4, 4, 4))  # 34 650 assignments: still exact-able
        exact = run_frt(
            data, FrtConfig(statistic="f", seed=0, mode="exact", enumeration_cap=10**5)
        )
        m = 20_000
        violations = 0
        for seed in range(12):
            mc = run_frt(
                data,
                FrtConfig(statistic="f", seed=seed, mode="monte_carlo", replications=m),
            )
            se = math.sqrt(exact.p_value * (1 - exact.p_value) / m)
            if abs(mc.p_value - exact.p_value) > 4 * se + 1 / (m + 1):
                violations += 1
        assert violations == 0

    def test_determinism_same_seed(self):
        rng = np.random.default_rng(8)
        data = random_dataset(rng, (10, 10))
        config = FrtConfig(statistic="x2", seed=321, mode="monte_carlo", replications=500)
        first = run_frt(data, config)
        second = run_frt(data, config)
        assert first.p_value == second.p_value
        assert first.tail_count == second.tail_count


class TestSuperUniformity:
    def test_sharp_null_exact_pvalues(self):
        # Constant rows: the sharp null holds, so over the uniform assignment
        # the exact p-value satisfies P(p <= alpha) <= alpha everywhere.
        rng = np.random.default_rng(9)
        y = rng.standard_normal(6)  # units differ, treatments do not matter
        design = Design(group_sizes=(3, 3))
        p_values = []
        for a in enumerate_assignments(design):
            data = ObservedDataset(outcomes=y, treatments=a.labels)
            p_values.append(
                run_frt(data, FrtConfig(statistic="t2", seed=0, mode="exact")).p_value
            )
        p_values = np.asarray(p_values)
        for alpha in np.arange(0.01, 1.0, 0.01):
            assert (p_values <= alpha).mean() <= alpha + 1e-12


class TestBatch:
    def test_batch_of_one_matches_derived_seed(self):
        rng = np.random.default_rng(10)
        data = random_dataset(rng, (6, 6))
        config = FrtConfig(statistic="f", seed=77, mode="monte_carlo", replications=300)
        batch = run_frt_batch([data], config)
        direct = run_frt(data, dataclasses.replace(config, seed=derive_seed(77, 0)))
        assert batch[0].p_value == direct.p_value
        assert batch[0].seed == derive_seed(77, 0)

    def test_thread_count_does_not_change_results(self):
        rng = np.random.default_rng(11)
        datasets = [random_dataset(rng, (5, 7)) for _ in range(16)]
        config = FrtConfig(statistic="x2", seed=55, mode="monte_carlo", replications=400)
        serial = run_frt_batch(datasets, config, threads=1)
        parallel = run_frt_batch(datasets, config, threads=8)
        assert [r.p_value for r in serial] == [r.p_value for r in parallel]
        assert [r.tail_count for r in serial] == [r.tail_count for r in parallel]

    def test_batch_records_errors_in_place(self):
        good = ObservedDataset(outcomes=[1.0, 2.0, 3.0, 4.0], treatments=[1, 1, 2, 2])
        bad = ObservedDataset(outcomes=[1.0, 1.0, 3.0, 4.0], treatments=[1, 1, 2, 2])
        config = FrtConfig(statistic="x2", seed=5, mode="monte_carlo", replications=50)
        results = run_frt_batch([good, bad, good], config)
        assert not isinstance(results[0], RandexError)
        assert isinstance(results[1], ZeroGroupVariance)
        assert not isinstance(results[2], RandexError)


class TestMultiStatistic:
    def test_shared_draws_consistency(self):
        rng = np.random.default_rng(12)
        data = random_dataset(rng, (8, 8, 8))
        config = FrtConfig(statistic="f", seed=99, mode="monte_carlo", replications=800)
        multi = run_frt_multi(data, ("f", "x2"), config)
        assert set(multi) == {"f", "x2"}
        assert multi["f"].replications == multi["x2"].replications == 800
        # Single-statistic runs with the same seed see the same draw stream.
        assert run_frt(data, config).p_value == multi["f"].p_value


def test_config_validation():
    with pytest.raises(ValueError):
        FrtConfig(statistic="nope", seed=0)
    with pytest.raises(ValueError):
        FrtConfig(statistic="f", seed=0, mode="guess")
    with pytest.raises(ValueError):
        FrtConfig(statistic="f", seed=0, mode="monte_carlo", replications=0)
    with pytest.raises(ValueError):
        FrtConfig(statistic="pairwise", seed=0)  # missing pair
    with pytest.raises(ValueError):
        FrtConfig(statistic="f", seed=0, pair=(1, 2))  # stray pair
