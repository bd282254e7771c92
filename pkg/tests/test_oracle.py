import numpy as np
import pytest

from helpers import make_embedding, pair_with_score
from scoreconf.decision import ConfidenceParams, sigmoid_slope
from scoreconf.errors import TooFewSamplesError
from scoreconf.oracle import mc_decision_confidence_std, mc_score_std


def test_zero_sigma_is_exactly_zero(rng):
    x = make_embedding(rng.standard_normal(16))
    y = make_embedding(rng.standard_normal(16))
    assert mc_score_std(x, y, 2000) == 0.0
    assert mc_decision_confidence_std(x, y, 5.0, 0.0, 2000) == 0.0


def test_needs_enough_samples(rng):
    x = make_embedding(rng.standard_normal(4))
    with pytest.raises(TooFewSamplesError):
        mc_score_std(x, x, 999)


def test_axis_example_converges_to_point_two():
    x = make_embedding([1.0, 0.0], [0.0, 0.0])
    y = make_embedding([0.0, 1.0], [0.2, 0.0])
    assert mc_score_std(x, y, 100_000, seed=1) == pytest.approx(0.2, rel=0.02)


def test_doubling_sigma_doubles_std(rng):
    mx, my = rng.standard_normal(32), rng.standard_normal(32)
    sx, sy = rng.uniform(0, 0.02, 32), rng.uniform(0, 0.02, 32)
    one = mc_score_std(make_embedding(mx, sx), make_embedding(my, sy), 50_000, seed=2)
    two = mc_score_std(make_embedding(mx, 2 * sx), make_embedding(my, 2 * sy), 50_000, seed=2)
    assert two / one == pytest.approx(2.0, rel=0.03)


def test_seeded_determinism(rng):
    x = make_embedding(rng.standard_normal(8), 0.05)
    y = make_embedding(rng.standard_normal(8), 0.05)
    assert mc_score_std(x, y, 5000, seed=9) == mc_score_std(x, y, 5000, seed=9)
    assert mc_score_std(x, y, 5000, seed=9) != mc_score_std(x, y, 5000, seed=10)


def test_error_shrinks_like_inverse_sqrt_n():
    x = make_embedding([1.0, 0.0], [0.0, 0.0])
    y = make_embedding([0.0, 1.0], [0.2, 0.0])
    # exact answer is 0.2; compare mean absolute error over seeds at n and 4n
    err = {
        n: np.mean([abs(mc_score_std(x, y, n, seed=s) - 0.2) for s in range(40)])
        for n in (2000, 8000)
    }
    ratio = err[2000] / err[8000]
    assert 1.3 < ratio < 3.2


def test_at_threshold_matches_first_order(rng):
    x, y = pair_with_score(rng, 32, 0.25)
    ex = make_embedding(x, 0.01)
    ey = make_embedding(y, 0.01)
    alpha = 5.0
    got = mc_decision_confidence_std(ex, ey, alpha, 0.25, 100_000, seed=4)
    # slope at the threshold is alpha/4; score std is 0.01*sqrt(2)
    assert got == pytest.approx(alpha * 0.25 * 0.01 * np.sqrt(2), rel=0.10)


def test_saturated_region_is_flat(rng):
    x, y = pair_with_score(rng, 32, 0.9)
    ex = make_embedding(x, 0.01)
    ey = make_embedding(y, 0.01)
    alpha = 5.0
    got = mc_decision_confidence_std(ex, ey, alpha, 0.9 - 40 / alpha, 20_000, seed=5)
    assert got == pytest.approx(0.0, abs=1e-12)
    assert float(sigmoid_slope(0.9, ConfidenceParams(alpha, 0.9 - 40 / alpha))) < 1e-15


def test_renormalized_variant_reports_gap(rng):
    x = make_embedding(rng.standard_normal(64), 0.05)
    y = make_embedding(rng.standard_normal(64), 0.05)
    plain = mc_score_std(x, y, 20_000, seed=6)
    renorm = mc_score_std(x, y, 20_000, seed=6, renormalize=True)
    assert plain > 0 and renorm > 0 and plain != renorm
