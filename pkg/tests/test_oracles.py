import math

import numpy as np
import pytest
from scipy import stats

from app.core.errors import ConfigurationError, SamplingError
from app.numerics.lipschitz import solve_s0
from simulators.oracles import (
    ESTIMATION_STREAM,
    SELECTION_STREAM,
    ClassifierOracle,
    ExtremalOracle,
    MultinomialOracle,
    collect_counts,
    lipschitz_1d_oracle,
    multinomial_sample,
    stream_generator,
)


class ConstantOracle:
    """Always predicts the same class"""

    def __init__(self, label: int, num_classes: int = 4):
        self.label = label
        self.num_classes = num_classes

    def draw_noise(self, rng, size):
        return rng.random(size)

    def predict(self, input_id, noise):
        return np.full(len(noise), self.label)


class FailingOracle(ConstantOracle):
    def __init__(self, fail_on_batch: int):
        super().__init__(0)
        self.fail_on_batch = fail_on_batch
        self.calls = 0

    def predict(self, input_id, noise):
        self.calls += 1
        if self.calls > self.fail_on_batch:
            raise RuntimeError("model crashed")
        return super().predict(input_id, noise)


class OutOfRangeOracle(ConstantOracle):
    def predict(self, input_id, noise):
        labels = np.zeros(len(noise), dtype=int)
        labels[7] = 9
        return labels


class TestStreams:
    """Tests for the counter-based generator keys"""

    def test_same_key_same_draws(self):
        a = stream_generator(5, "img-1", SELECTION_STREAM, 3).random(10)
        b = stream_generator(5, "img-1", SELECTION_STREAM, 3).random(10)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("other", [(6, "img-1", 0, 3), (5, "img-2", 0, 3), (5, "img-1", 1, 3), (5, "img-1", 0, 4)])
    def test_any_key_change_changes_draws(self, other):
        base = stream_generator(5, "img-1", 0, 3).random(10)
        assert not np.array_equal(base, stream_generator(*other).random(10))

    @pytest.mark.parametrize("input_id", ["img-1", "img-2"])
    def test_selection_and_estimation_streams_independent(self, input_id):
        """Pairing draws of the two phases shows no more correlation than random re-pairings"""
        selection = stream_generator(5, input_id, SELECTION_STREAM).random(2000)
        estimation = stream_generator(5, input_id, ESTIMATION_STREAM).random(2000)

        def correlation(x, y):
            return np.corrcoef(x, y)[0, 1]

        result = stats.permutation_test((selection, estimation), correlation, permutation_type="pairings",
                                        n_resamples=2000, random_state=np.random.default_rng(0))
        assert result.pvalue > 0.001

    def test_selection_and_estimation_draws_equally_distributed(self):
        selection = stream_generator(9, "img-1", SELECTION_STREAM).random(2000)
        estimation = stream_generator(9, "img-1", ESTIMATION_STREAM).random(2000)

        def mean_gap(x, y):
            return np.mean(x) - np.mean(y)

        result = stats.permutation_test((selection, estimation), mean_gap, n_resamples=2000,
                                        random_state=np.random.default_rng(0))
        assert result.pvalue > 0.001


class TestMultinomialSample:
    """Tests for single inverse-CDF draws"""

    def test_one_hot(self):
        rng = np.random.default_rng(0)
        assert {multinomial_sample([0.0, 0.0, 1.0], rng) for _ in range(100)} == {2}

    def test_two_class_frequency(self):
        rng = np.random.default_rng(1)
        draws = [multinomial_sample([0.9, 0.1], rng) for _ in range(20_000)]
        band = 6 * math.sqrt(0.9 * 0.1 / 20_000)
        assert abs(draws.count(0) / 20_000 - 0.9) <= band

    @pytest.mark.parametrize("p", [[0.5, 0.6], [1.2, -0.2], [0.5, math.nan], [[0.5, 0.5]]])
    def test_rejects_non_simplex(self, p):
        with pytest.raises(ConfigurationError):
            multinomial_sample(p, np.random.default_rng(0))


class TestMultinomialOracle:
    """Tests for the synthetic multinomial classifier"""

    def test_satisfies_protocol(self):
        assert isinstance(MultinomialOracle([0.5, 0.5]), ClassifierOracle)

    def test_uniform_chi_square(self):
        oracle = MultinomialOracle([0.25] * 4)
        labels = oracle.predict("x", np.random.default_rng(2).random(1_000_000))
        observed = np.bincount(labels, minlength=4)
        statistic = np.sum((observed - 250_000) ** 2 / 250_000)
        assert statistic < stats.chi2.ppf(0.999, df=3)

    def test_needs_two_classes(self):
        with pytest.raises(ConfigurationError):
            MultinomialOracle([1.0])


class TestCollectCounts:
    """Tests for Monte Carlo count collection"""

    def test_constant_oracle(self):
        result = collect_counts(ConstantOracle(2), "x", m=50, seed=0, stream_id=SELECTION_STREAM)
        assert result.counts == [0, 0, 50, 0]
        assert result.total == 50

    def test_frequencies_converge(self):
        p = np.array([0.5, 0.3, 0.2])
        result = collect_counts(MultinomialOracle(p), "x", m=100_000, seed=42, stream_id=ESTIMATION_STREAM)
        assert result.total == 100_000
        assert np.all(np.abs(result.array / 100_000 - p) <= 0.01)

    def test_deterministic(self):
        oracle = MultinomialOracle([0.5, 0.3, 0.2])
        a = collect_counts(oracle, "x", m=5000, seed=9, stream_id=ESTIMATION_STREAM, batch=700)
        b = collect_counts(oracle, "x", m=5000, seed=9, stream_id=ESTIMATION_STREAM, batch=700)
        assert a == b

    def test_phases_use_different_streams(self):
        oracle = MultinomialOracle([0.5, 0.5])
        selection = collect_counts(oracle, "x", m=1000, seed=9, stream_id=SELECTION_STREAM)
        estimation = collect_counts(oracle, "x", m=1000, seed=9, stream_id=ESTIMATION_STREAM)
        assert selection != estimation

    def test_phase_counts_uncorrelated_across_inputs(self):
        oracle = MultinomialOracle([0.5, 0.5])
        selection, estimation = [], []
        for i in range(400):
            selection.append(collect_counts(oracle, f"img-{i}", 100, 3, SELECTION_STREAM).counts[0])
            estimation.append(collect_counts(oracle, f"img-{i}", 100, 3, ESTIMATION_STREAM).counts[0])
        correlation = np.corrcoef(selection, estimation)[0, 1]
        assert abs(correlation) < 5 / math.sqrt(400)

    def test_oracle_failure_carries_sample_index(self):
        with pytest.raises(SamplingError) as excinfo:
            collect_counts(FailingOracle(fail_on_batch=2), "x", m=500, seed=0, stream_id=0, batch=100)
        assert excinfo.value.sample_index == 200

    def test_out_of_range_prediction(self):
        with pytest.raises(SamplingError) as excinfo:
            collect_counts(OutOfRangeOracle(0), "x", m=20, seed=0, stream_id=0, batch=10)
        assert excinfo.value.sample_index == 7

    def test_rejects_empty_round(self):
        with pytest.raises(ConfigurationError):
            collect_counts(ConstantOracle(0), "x", m=0, seed=0, stream_id=0)


class TestExtremalOracle:
    """Tests for the one-dimensional oracle that attains the Lipschitz bound"""

    def test_exact_smoothed_value(self):
        oracle = lipschitz_1d_oracle(4.0, 0.9, 0.5)
        assert oracle.smoothed_value(0.0) == pytest.approx(0.9, abs=1e-12)

    def test_monte_carlo_mean(self):
        oracle = lipschitz_1d_oracle(4.0, 0.9, 0.5)
        m = 1_000_000
        band = 6 * math.sqrt(0.9 * 0.1 / m)
        assert abs(oracle.monte_carlo_smoothed_value(0.0, m, seed=1) - 0.9) <= band

    def test_lipschitz_in_input_units(self):
        oracle = lipschitz_1d_oracle(4.0, 0.7, 0.25)
        assert oracle.lipschitz == pytest.approx(16.0)
        rng = np.random.default_rng(6)
        x, y = rng.normal(0, 1, size=(2, 5000))
        assert np.all(np.abs(oracle.soft(x) - oracle.soft(y)) <= oracle.lipschitz * np.abs(x - y) + 1e-12)

    def test_directional_derivative_attains_objective(self):
        sigma = 0.5
        oracle = lipschitz_1d_oracle(3.0, 0.8, sigma)
        h = 1e-5
        slope = (oracle.smoothed_value(h) - oracle.smoothed_value(-h)) / (2 * h)
        assert slope == pytest.approx(oracle.solution.objective / sigma, rel=1e-6)

    def test_hard_counts_match_target(self):
        rng = np.random.default_rng(12)
        m = 20_000
        for i in range(20):
            L = float(10 ** rng.uniform(-0.5, 1.5))
            p = float(rng.uniform(0.05, 0.95))
            oracle = ExtremalOracle(solve_s0(p, L), sigma=0.3, p_target=p)
            result = collect_counts(oracle, f"pair-{i}", m, seed=i, stream_id=ESTIMATION_STREAM)
            assert abs(result.counts[0] / m - p) <= 6 * math.sqrt(p * (1 - p) / m)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ConfigurationError):
            lipschitz_1d_oracle(4.0, 0.9, 0.0)
