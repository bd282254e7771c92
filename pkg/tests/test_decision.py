import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_embedding, pair_with_score
from scoreconf.core import ComparisonResult, Decision, Label, Pair
from scoreconf.decision import (
    ALPHA_PRESETS,
    ALPHA_SWEEP,
    ConfidenceParams,
    confidence_heatmap_data,
    decision_confidence,
    decision_confidence_closed_form,
    evaluate_pair,
    intuitive_confidence,
    mean_confidence_by_score,
    resolve_alpha,
    score_pairs,
    sigmoid_decision,
)
from scoreconf.errors import EmptyInputError, InvalidConfigError, MissingKeyError, UnknownIdError
from scoreconf.oracle import mc_decision_confidence_std
from scoreconf.scoring import cosine_similarity, score_uncertainty


def test_sigmoid_midpoint_and_saturation():
    assert sigmoid_decision(0.3, ConfidenceParams(alpha=4.0, threshold=0.3)) == 0.5
    assert sigmoid_decision(40.5, ConfidenceParams(alpha=1.0, threshold=0.5)) == pytest.approx(1.0, abs=1e-15)


def test_sigmoid_direct_evaluation():
    got = sigmoid_decision(0.8, ConfidenceParams(alpha=2.0, threshold=0.3))
    assert got == pytest.approx(1 / (1 + math.exp(-1.0)), rel=1e-15)
    assert got == pytest.approx(0.731058578, abs=1e-9)


def test_params_validation():
    with pytest.raises(InvalidConfigError):
        ConfidenceParams(alpha=0.0)
    with pytest.raises(ValueError):
        ConfidenceParams(threshold=math.nan)


def test_alpha_presets():
    assert resolve_alpha("arcface") == 2.0
    assert resolve_alpha("MagFace") == 5.0
    assert resolve_alpha("curricularface") == 5.0
    assert resolve_alpha("3.5") == 3.5
    assert ALPHA_SWEEP == (1.0, 2.0, 3.0, 5.0, 7.0)
    assert set(ALPHA_PRESETS) == {"arcface", "magface", "curricularface"}
    with pytest.raises(InvalidConfigError):
        resolve_alpha("facenet")


def test_zero_sigma_gives_full_confidence(rng):
    x = make_embedding(rng.standard_normal(16))
    y = make_embedding(rng.standard_normal(16))
    assert decision_confidence(x, y, ConfidenceParams(alpha=5.0, threshold=0.1)) == 1.0


def test_confidence_at_threshold_hand_example():
    # score 0, score uncertainty 0.2 (see scoring tests), alpha 5, d = 0
    x = make_embedding([1.0, 0.0], [0.0, 0.0])
    y = make_embedding([0.0, 1.0], [0.2, 0.0])
    params = ConfidenceParams(alpha=5.0, threshold=0.0)
    assert decision_confidence(x, y, params) == pytest.approx(1 - 5 * 0.25 * 0.2, abs=1e-15)


def test_saturated_score_gives_full_confidence(rng):
    x = make_embedding(rng.standard_normal(16), 1.0)
    y = make_embedding(rng.standard_normal(16), 1.0)
    s = cosine_similarity(x, y)
    alpha = 50.0
    params = ConfidenceParams(alpha=alpha, threshold=s - 40.0 / alpha - 0.01)
    assert decision_confidence(x, y, params) == pytest.approx(1.0, abs=1e-12)


def test_clamping():
    x = make_embedding([1.0, 0.0], [0.0, 3.0])
    y = make_embedding([0.0, 1.0], [3.0, 0.0])
    clamped = decision_confidence(x, y, ConfidenceParams(alpha=7.0, threshold=0.0))
    raw = decision_confidence(x, y, ConfidenceParams(alpha=7.0, threshold=0.0, clamp=False))
    assert clamped == 0.0
    assert raw < 0.0
    assert raw == pytest.approx(1 - 7 * 0.25 * math.sqrt(18), rel=1e-14)


def test_intuitive_confidence():
    assert intuitive_confidence(0.4, 0.4) == 0.0
    assert intuitive_confidence(0.65, 0.4) == pytest.approx(0.25)
    assert intuitive_confidence(0.0, 0.4) == pytest.approx(0.4)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-5, 5))
def test_intuitive_confidence_is_translation_covariant(s, d, c):
    assert intuitive_confidence(s + c, d + c) == pytest.approx(intuitive_confidence(s, d), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(ALPHA_SWEEP), st.floats(-0.9, 0.9))
def test_closed_form_identity(seed, alpha, threshold):
    r = np.random.default_rng(seed)
    x = make_embedding(r.standard_normal(24), r.uniform(0, 0.3, 24))
    y = make_embedding(r.standard_normal(24), r.uniform(0, 0.3, 24))
    params = ConfidenceParams(alpha=alpha, threshold=threshold, clamp=False)
    assert decision_confidence(x, y, params) == pytest.approx(
        decision_confidence_closed_form(x, y, params), abs=1e-12
    )


def test_confidence_minimum_at_threshold(rng):
    # fixed pair, threshold scanned so that s - d sweeps through zero
    x = make_embedding(rng.standard_normal(32), rng.uniform(0, 0.1, 32))
    y = make_embedding(rng.standard_normal(32), rng.uniform(0, 0.1, 32))
    s = cosine_similarity(x, y)
    offsets = np.linspace(-1.0, 1.0, 201)
    for alpha in ALPHA_SWEEP:
        conf = [
            decision_confidence(x, y, ConfidenceParams(alpha, s - off, clamp=False))
            for off in offsets
        ]
        assert offsets[int(np.argmin(conf))] == pytest.approx(0.0, abs=1e-12)


def test_larger_alpha_widens_confidence_range(rng):
    x = make_embedding(rng.standard_normal(32), rng.uniform(0, 0.1, 32))
    y = make_embedding(rng.standard_normal(32), rng.uniform(0, 0.1, 32))
    s = cosine_similarity(x, y)
    offsets = np.linspace(-1.0, 1.0, 201)
    minima = [
        min(decision_confidence(x, y, ConfidenceParams(a, s - off, clamp=False)) for off in offsets)
        for a in ALPHA_SWEEP
    ]
    assert all(b <= a for a, b in zip(minima, minima[1:]))


def test_evaluate_pair_uses_one_threshold(rng):
    x = make_embedding(rng.standard_normal(8), 0.05, "a", "s1", 0.5)
    y = make_embedding(rng.standard_normal(8), 0.05, "b", "s2", 0.2)
    params = ConfidenceParams(alpha=2.0, threshold=0.1)
    res = evaluate_pair(x, y, params)
    assert res.threshold == 0.1
    assert res.decision is (Decision.MATCH if res.score >= 0.1 else Decision.NON_MATCH)
    assert res.intuitive_confidence == pytest.approx(abs(res.score - 0.1))
    assert res.decision_confidence == decision_confidence(x, y, params)
    assert res.min_quality == 0.2


def test_score_pairs_matches_scalar_path(rng):
    embs = {
        f"i{k}": make_embedding(rng.standard_normal(16), rng.uniform(0, 0.1, 16), f"i{k}", f"s{k % 3}", float(k))
        for k in range(9)
    }
    pairs = [Pair(f"i{a}", f"i{b}", Label.GENUINE if a % 3 == b % 3 else Label.IMPOSTER)
             for a in range(9) for b in range(a + 1, 9)]
    params = ConfidenceParams(alpha=3.0, threshold=0.05)
    batch = score_pairs(embs, pairs, params, chunk_size=7)
    for res, p in zip(batch, pairs):
        single = evaluate_pair(embs[p.probe_id], embs[p.reference_id], params, p)
        assert res == single
    with pytest.raises(UnknownIdError):
        score_pairs(embs, [Pair("i0", "zz", Label.IMPOSTER)], params)


def _result(score, conf, label="genuine", threshold=0.5):
    return ComparisonResult(
        Pair("a", "b", Label(label)), score, 0.1,
        Decision.MATCH if score >= threshold else Decision.NON_MATCH, threshold, conf, abs(score - threshold),
    )


def test_heatmap_single_result():
    h = confidence_heatmap_data([_result(0.5, 0.9)], bins=10, score_range=(0, 1))
    total = h.total
    assert total.sum() == 1
    assert total[5, 9] == 1
    assert h.threshold == 0.5


def test_heatmap_identical_results():
    h = confidence_heatmap_data([_result(0.31, 0.42, "imposter")] * 17, bins=10, score_range=(0, 1))
    assert h.total.max() == 17 and h.total.sum() == 17
    assert h.counts["imposter"].sum() == 17 and h.counts["genuine"].sum() == 0


def test_heatmap_uniform_grid():
    n_side, bins = 50, 10
    centers = (np.arange(n_side) + 0.5) / n_side
    results = [_result(s, c) for s in centers for c in centers]
    h = confidence_heatmap_data(results, bins=bins, score_range=(0, 1))
    expected = len(results) / bins**2
    assert np.all(np.abs(h.total - expected) <= 1)


def test_heatmap_errors():
    with pytest.raises(EmptyInputError):
        confidence_heatmap_data([])
    partial = ComparisonResult(Pair("a", "b", Label.GENUINE), 0.2, 0.1, Decision.NON_MATCH, 0.5)
    with pytest.raises(MissingKeyError):
        confidence_heatmap_data([partial])


def test_mean_confidence_by_score():
    results = [_result(0.05, 1.0), _result(0.15, 0.5), _result(0.16, 0.7)]
    means, counts = mean_confidence_by_score(results, np.array([0.0, 0.1, 0.2, 0.3]))
    np.testing.assert_array_equal(counts, [1, 2, 0])
    assert means[0] == 1.0 and means[1] == pytest.approx(0.6) and np.isnan(means[2])


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [2.0, 5.0])
def test_confidence_matches_monte_carlo_near_threshold(rng, alpha):
    x, y = pair_with_score(rng, 64, 0.4)
    ex = make_embedding(x, rng.uniform(0, 0.02, 64))
    ey = make_embedding(y, rng.uniform(0, 0.02, 64))
    params = ConfidenceParams(alpha=alpha, threshold=0.4 + 0.5 / alpha, clamp=False)
    mc = mc_decision_confidence_std(ex, ey, alpha, params.threshold, 100_000, seed=3)
    assert 1 - decision_confidence(ex, ey, params) == pytest.approx(mc, rel=0.10)
