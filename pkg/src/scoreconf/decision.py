"""Decision confidence for threshold-based verification decisions.

The hard decision step at threshold ``d`` is approximated by a sigmoid
``delta(s) = 1 / (1 + exp(-alpha * (s - d)))``. Propagating the score
uncertainty through ``delta`` (chain rule, squared partials) gives::

    confidence = 1 - alpha * delta(s) * (1 - delta(s)) * score_uncertainty

The intuitive baseline is just the distance ``|s - d|`` to the threshold.

Note: a literal reading of the published summation drops the squares on the
partial derivatives. That variant is not dimensionally consistent with the
score uncertainty and is deliberately not implemented.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import expit

from .core import ComparisonResult, Pair, ProbabilisticEmbedding, check_same_dimension
from .errors import (
    EmptyInputError,
    InvalidConfigError,
    MissingKeyError,
    NonFiniteValueError,
    UnknownIdError,
)
from .scoring import (
    batch_cosine,
    batch_score_uncertainty,
    compare,
    cosine_similarity,
    decide,
    min_quality,
    score_uncertainty,
)

# alpha values used for the three reference models, and the sweep set
ALPHA_PRESETS: dict[str, float] = {
    "arcface": 2.0,
    "magface": 5.0,
    "curricularface": 5.0,
}
ALPHA_SWEEP = (1.0, 2.0, 3.0, 5.0, 7.0)
DEFAULT_ALPHA = 5.0


@dataclass(frozen=True)
class ConfidenceParams:
    alpha: float = DEFAULT_ALPHA
    threshold: float = 0.0
    clamp: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidConfigError(f"alpha must be a positive finite number, got {self.alpha!r}")
        if not np.isfinite(self.threshold):
            raise NonFiniteValueError(f"threshold must be finite, got {self.threshold!r}")


def resolve_alpha(value) -> float:
    """Accept a number or a preset name (``arcface``, ``magface``, ...)."""
    if isinstance(value, str):
        key = value.strip().lower()
        if key in ALPHA_PRESETS:
            return ALPHA_PRESETS[key]
        try:
            return float(key)
        except ValueError:
            raise InvalidConfigError(
                f"unknown alpha {value!r}; use a number or one of {sorted(ALPHA_PRESETS)}"
            ) from None
    return float(value)


def sigmoid_decision(score, params: ConfidenceParams):
    z = params.alpha * (np.asarray(score, dtype=np.float64) - params.threshold)
    out = expit(z)
    return float(out) if np.ndim(out) == 0 else out


def sigmoid_slope(score, params: ConfidenceParams):
    """``d delta / d s = alpha * delta * (1 - delta)``, stable in the tails."""
    z = params.alpha * (np.asarray(score, dtype=np.float64) - params.threshold)
    return params.alpha * expit(z) * expit(-z)


def _finish(conf: np.ndarray, clamp: bool) -> np.ndarray:
    return np.clip(conf, 0.0, 1.0) if clamp else conf


def batch_decision_confidence(
    x_mean: np.ndarray,
    x_sigma: np.ndarray,
    y_mean: np.ndarray,
    y_sigma: np.ndarray,
    params: ConfidenceParams,
) -> np.ndarray:
    """Row-wise decision confidence, written as the explicit summation."""
    g = sigmoid_slope(batch_cosine(x_mean, y_mean), params)[..., None]
    spread = np.sqrt(
        np.sum((g * y_mean) ** 2 * x_sigma**2, axis=-1)
        + np.sum((g * x_mean) ** 2 * y_sigma**2, axis=-1)
    )
    return _finish(1.0 - spread, params.clamp)


def decision_confidence(
    x: ProbabilisticEmbedding, y: ProbabilisticEmbedding, params: ConfidenceParams
) -> float:
    check_same_dimension(x, y)
    return float(
        batch_decision_confidence(
            x.mean[None, :], x.sigma[None, :], y.mean[None, :], y.sigma[None, :], params
        )[0]
    )


def decision_confidence_closed_form(
    x: ProbabilisticEmbedding, y: ProbabilisticEmbedding, params: ConfidenceParams
) -> float:
    """Same quantity as :func:`decision_confidence`, via ``1 - slope * dS``."""
    g = float(sigmoid_slope(cosine_similarity(x, y), params))
    conf = 1.0 - g * score_uncertainty(x, y)
    return float(_finish(np.float64(conf), params.clamp))


def intuitive_confidence(score, threshold):
    out = np.abs(np.asarray(score, dtype=np.float64) - threshold)
    return float(out) if np.ndim(out) == 0 else out


def evaluate_pair(
    x: ProbabilisticEmbedding,
    y: ProbabilisticEmbedding,
    params: ConfidenceParams,
    pair: Optional[Pair] = None,
) -> ComparisonResult:
    """Full comparison result; decision and confidence share ``params.threshold``."""
    base = compare(x, y, params.threshold, pair)
    return dataclasses.replace(
        base,
        decision_confidence=decision_confidence(x, y, params),
        intuitive_confidence=intuitive_confidence(base.score, params.threshold),
    )


def score_pairs(
    embeddings: Mapping[str, ProbabilisticEmbedding],
    pairs: Sequence[Pair],
    params: ConfidenceParams,
    chunk_size: int = 4096,
) -> list[ComparisonResult]:
    """Score many pairs at once. Output order follows ``pairs``."""
    missing = [
        pid
        for p in pairs
        for pid in (p.probe_id, p.reference_id)
        if pid not in embeddings
    ]
    if missing:
        raise UnknownIdError(f"pair references unknown image id {missing[0]!r}")
    if pairs:
        check_same_dimension(*embeddings.values())
    results: list[ComparisonResult] = []
    for start in range(0, len(pairs), chunk_size):
        chunk = pairs[start : start + chunk_size]
        xs = [embeddings[p.probe_id] for p in chunk]
        ys = [embeddings[p.reference_id] for p in chunk]
        xm = np.stack([e.mean for e in xs])
        xsd = np.stack([e.sigma for e in xs])
        ym = np.stack([e.mean for e in ys])
        ysd = np.stack([e.sigma for e in ys])
        scores = batch_cosine(xm, ym)
        uncert = batch_score_uncertainty(xm, xsd, ym, ysd)
        conf = batch_decision_confidence(xm, xsd, ym, ysd, params)
        intuitive = np.abs(scores - params.threshold)
        for i, p in enumerate(chunk):
            s = float(scores[i])
            results.append(
                ComparisonResult(
                    pair=p,
                    score=s,
                    score_uncertainty=float(uncert[i]),
                    decision=decide(s, params.threshold),
                    threshold=float(params.threshold),
                    decision_confidence=float(conf[i]),
                    intuitive_confidence=float(intuitive[i]),
                    min_quality=min_quality(xs[i], ys[i]),
                )
            )
    return results


@dataclass(frozen=True)
class HeatmapData:
    """2-D histogram over (score, confidence) with per-label counts.

    ``counts[label]`` has shape ``(score_bins, confidence_bins)``.
    """

    score_edges: np.ndarray
    confidence_edges: np.ndarray
    counts: dict
    threshold: Optional[float]
    measure: str

    @property
    def total(self) -> np.ndarray:
        return sum(self.counts.values())


def _confidence_values(results: Sequence[ComparisonResult], measure: str) -> np.ndarray:
    if measure == "decision":
        vals = [r.decision_confidence for r in results]
    elif measure == "intuitive":
        vals = [r.intuitive_confidence for r in results]
    else:
        raise InvalidConfigError(f"unknown confidence measure {measure!r}")
    if any(v is None for v in vals):
        raise MissingKeyError(f"results lack {measure} confidence")
    return np.asarray(vals, dtype=np.float64)


def confidence_heatmap_data(
    results: Sequence[ComparisonResult],
    bins: int | tuple[int, int] = (100, 100),
    score_range: tuple[float, float] = (-1.0, 1.0),
    confidence_range: Optional[tuple[float, float]] = (0.0, 1.0),
    measure: str = "decision",
) -> HeatmapData:
    """Histogram comparison results over (score, confidence).

    With ``confidence_range=None`` the range is taken from the data, which is
    what the intuitive measure (unbounded above) usually needs.
    """
    if not results:
        raise EmptyInputError("no comparison results to bin")
    if isinstance(bins, int):
        bins = (bins, bins)
    scores = np.array([r.score for r in results])
    conf = _confidence_values(results, measure)
    if confidence_range is None:
        lo, hi = float(conf.min()), float(conf.max())
        confidence_range = (lo, hi if hi > lo else lo + 1.0)
    counts = {}
    score_edges = conf_edges = None
    for label in ("genuine", "imposter"):
        mask = np.array([r.label.value == label for r in results])
        h, score_edges, conf_edges = np.histogram2d(
            scores[mask],
            conf[mask],
            bins=bins,
            range=[score_range, confidence_range],
        )
        counts[label] = h.astype(np.int64)
    thresholds = {r.threshold for r in results}
    threshold = thresholds.pop() if len(thresholds) == 1 else None
    return HeatmapData(score_edges, conf_edges, counts, threshold, measure)


def mean_confidence_by_score(
    results: Iterable[ComparisonResult],
    score_edges: np.ndarray,
    measure: str = "decision",
) -> tuple[np.ndarray, np.ndarray]:
    """Mean confidence and count of results per score bin.

    Bins are half-open ``[e_k, e_k+1)``; empty bins get NaN.
    """
    results = list(results)
    scores = np.array([r.score for r in results])
    conf = _confidence_values(results, measure)
    idx = np.searchsorted(score_edges, scores, side="right") - 1
    nbins = len(score_edges) - 1
    inside = (idx >= 0) & (idx < nbins)
    counts = np.bincount(idx[inside], minlength=nbins)
    sums = np.bincount(idx[inside], weights=conf[inside], minlength=nbins)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return means, counts
