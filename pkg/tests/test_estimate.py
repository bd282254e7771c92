import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scoreconf.errors import DimensionMismatchError, TooFewSamplesError
from scoreconf.estimate import StochasticSampleSet, estimate_uncertainty, population_std


@pytest.mark.parametrize(
    "values, expected",
    [([1, 1, 1], 0.0), ([0, 2], 1.0), ([1, 2, 3, 4], math.sqrt(1.25))],
)
def test_population_std(values, expected):
    assert population_std(values) == pytest.approx(expected, abs=1e-15)


def test_population_std_needs_two_values():
    with pytest.raises(TooFewSamplesError):
        population_std([1.0])


def test_identical_samples_give_zero_sigma():
    det = np.array([0.6, 0.8])
    s = StochasticSampleSet("a", "s", det, np.tile(det, (5, 1)))
    e = estimate_uncertainty(s)
    np.testing.assert_array_equal(e.sigma, [0.0, 0.0])


def test_two_normalized_samples_hand_computed():
    n = math.sqrt(1.01)
    samples = [[1 / n, 0.1 / n], [1 / n, -0.1 / n]]
    e = estimate_uncertainty(StochasticSampleSet("a", "s", [1.0, 0.0], samples))
    # both samples share the first coordinate; second is +-0.1/n around 0
    assert e.sigma[0] == pytest.approx(0.0, abs=1e-15)
    assert e.sigma[1] == pytest.approx(0.1 / math.sqrt(1.01), rel=1e-14)
    np.testing.assert_array_equal(e.mean, [1.0, 0.0])


def test_normalization_is_applied_per_sample():
    # un-normalized the two samples differ in scale only, so per-sample
    # normalization removes all spread
    s = StochasticSampleSet("a", "s", [1.0, 1.0], [[1.0, 1.0], [3.0, 3.0]])
    assert estimate_uncertainty(s, normalize_samples=True).sigma.max() == pytest.approx(0.0, abs=1e-15)
    raw = estimate_uncertainty(s, normalize_samples=False)
    # raw std is 1 per dimension, then rescaled by 1/||(1, 1)||
    np.testing.assert_allclose(raw.sigma, [1 / math.sqrt(2)] * 2, rtol=1e-14)


def test_too_few_samples():
    with pytest.raises(TooFewSamplesError):
        StochasticSampleSet("a", "s", [1.0, 0.0], [[1.0, 0.0]])


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        StochasticSampleSet("a", "s", [1.0, 0.0], [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 20), st.booleans())
def test_permutation_invariance(seed, t, normalize):
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((t, 6)) + 3.0
    a = estimate_uncertainty(StochasticSampleSet("a", "s", samples[0], samples), normalize)
    b = estimate_uncertainty(
        StochasticSampleSet("a", "s", samples[0], rng.permutation(samples)), normalize
    )
    np.testing.assert_allclose(a.sigma, b.sigma, rtol=1e-12, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_scale_behaviour_without_normalization(seed, c):
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((10, 5))
    det = np.ones(5)
    base = estimate_uncertainty(StochasticSampleSet("a", "s", det, samples), False)
    scaled = estimate_uncertainty(StochasticSampleSet("a", "s", det, c * samples), False)
    np.testing.assert_allclose(scaled.sigma, c * base.sigma, rtol=1e-12)


@pytest.mark.parametrize("t, tol", [(10, 0.6), (100, 0.2), (10_000, 0.03)])
def test_converges_to_true_std(t, tol):
    rng = np.random.default_rng(7)
    true_sigma = np.array([0.5, 1.0, 2.0, 0.1])
    samples = rng.standard_normal((t, 4)) * true_sigma
    det = np.array([1.0, 0.0, 0.0, 0.0])
    e = estimate_uncertainty(StochasticSampleSet("a", "s", det, samples), normalize_samples=False)
    np.testing.assert_allclose(e.sigma, true_sigma, rtol=tol)
