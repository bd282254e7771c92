"""Cosine comparison scores and their first-order propagated uncertainty.

For unit-norm embeddings the cosine similarity reduces to the dot product
``S = sum_i x_i * y_i``. Its partial derivatives are ``dS/dx_i = y_i`` and
``dS/dy_i = x_i``, so with independent per-dimension uncertainties the
score uncertainty is::

    dS = sqrt( sum_i y_i**2 * sx_i**2 + sum_i x_i**2 * sy_i**2 )

Cross-feature correlations are ignored; no covariance input is accepted.
The batch functions operate row-wise on ``(n, d)`` arrays and are what the
scalar functions call, so both paths give bit-identical results.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import (
    ComparisonResult,
    Decision,
    Pair,
    ProbabilisticEmbedding,
    check_same_dimension,
)
from .errors import DimensionMismatchError, NonFiniteValueError


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape {a.shape} does not match {b.shape}")


def batch_cosine(x_mean: np.ndarray, y_mean: np.ndarray) -> np.ndarray:
    """Row-wise dot product of unit vectors, clamped to [-1, 1]."""
    _check_shapes(x_mean, y_mean)
    return np.clip(np.sum(x_mean * y_mean, axis=-1), -1.0, 1.0)


def batch_score_uncertainty(
    x_mean: np.ndarray,
    x_sigma: np.ndarray,
    y_mean: np.ndarray,
    y_sigma: np.ndarray,
) -> np.ndarray:
    _check_shapes(x_mean, y_mean)
    _check_shapes(x_mean, x_sigma)
    _check_shapes(y_mean, y_sigma)
    term_x = np.sum((y_mean * x_sigma) ** 2, axis=-1)
    term_y = np.sum((x_mean * y_sigma) ** 2, axis=-1)
    return np.sqrt(term_x + term_y)


def propagate_uncertainty(gradient, sigma) -> float:
    """First-order propagation ``sqrt(sum_i (df/dz_i)**2 * sigma_i**2)``."""
    g = np.asarray(gradient, dtype=np.float64).reshape(-1)
    s = np.asarray(sigma, dtype=np.float64).reshape(-1)
    _check_shapes(g, s)
    return float(np.sqrt(np.sum((g * s) ** 2)))


def cosine_similarity(x: ProbabilisticEmbedding, y: ProbabilisticEmbedding) -> float:
    check_same_dimension(x, y)
    return float(batch_cosine(x.mean[None, :], y.mean[None, :])[0])


def score_uncertainty(x: ProbabilisticEmbedding, y: ProbabilisticEmbedding) -> float:
    """Propagated standard deviation of the cosine score of ``x`` and ``y``."""
    check_same_dimension(x, y)
    return float(
        batch_score_uncertainty(
            x.mean[None, :], x.sigma[None, :], y.mean[None, :], y.sigma[None, :]
        )[0]
    )


def decide(score: float, threshold: float) -> Decision:
    # a score exactly at the threshold is a match
    return Decision.MATCH if score >= threshold else Decision.NON_MATCH


def min_quality(x: ProbabilisticEmbedding, y: ProbabilisticEmbedding) -> Optional[float]:
    if x.quality is None or y.quality is None:
        return None
    return min(x.quality, y.quality)


def compare(
    x: ProbabilisticEmbedding,
    y: ProbabilisticEmbedding,
    threshold: float,
    pair: Optional[Pair] = None,
) -> ComparisonResult:
    """Score one pair and threshold it; confidence fields are left empty.

    ``pair`` defaults to a genuine/imposter pair inferred from subject ids.
    """
    if not np.isfinite(threshold):
        raise NonFiniteValueError(f"threshold must be finite, got {threshold!r}")
    if pair is None:
        label = "genuine" if x.subject_id == y.subject_id else "imposter"
        pair = Pair(x.image_id, y.image_id, label)
    score = cosine_similarity(x, y)
    return ComparisonResult(
        pair=pair,
        score=score,
        score_uncertainty=score_uncertainty(x, y),
        decision=decide(score, threshold),
        threshold=float(threshold),
        min_quality=min_quality(x, y),
    )
