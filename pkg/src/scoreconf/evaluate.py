"""Pairing protocol, FMR-calibrated thresholds and error-vs-reject curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    ComparisonResult,
    ErcCurve,
    ErcPoint,
    Label,
    Pair,
    ProbabilisticEmbedding,
    RejectionKey,
    ThresholdCalibration,
)
from .errors import (
    EmptyInputError,
    InvalidConfigError,
    MissingKeyError,
    NoGenuinesError,
    NoImpostersError,
    SingleSubjectError,
    TooFewPointsError,
)

DEFAULT_FMR_TARGET = 1e-3
DEFAULT_IMPOSTERS_PER_IMAGE = 30
UNDEFINED = math.nan


def _check_fmr_target(value: float) -> None:
    if not 0.0 < value <= 1.0:
        raise InvalidConfigError(f"fmr_target must lie in (0, 1], got {value!r}")


@dataclass(frozen=True)
class EvalConfig:
    fmr_target: float = DEFAULT_FMR_TARGET
    imposters_per_image: int = DEFAULT_IMPOSTERS_PER_IMAGE
    erc_steps: int = 101
    max_reject: float = 0.95
    rng_seed: int = 0
    dedup_imposters: bool = False

    def __post_init__(self):
        _check_fmr_target(self.fmr_target)
        if self.imposters_per_image < 1:
            raise InvalidConfigError("imposters_per_image must be >= 1")
        if self.erc_steps < 2:
            raise InvalidConfigError("erc_steps must be >= 2")
        if not 0.0 <= self.max_reject <= 1.0:
            raise InvalidConfigError("max_reject must lie in [0, 1]")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidConfigError("rng_seed must be a 64-bit unsigned integer")


# --------------------------------------------------------------------------
# pairing


def build_pairs(
    embeddings: Sequence[ProbabilisticEmbedding], cfg: EvalConfig = EvalConfig()
) -> list[Pair]:
    """All genuine pairs plus ``cfg.imposters_per_image`` random imposters per image.

    Genuine pairs are every unordered same-subject pair ``(a, b)`` with ``a``
    before ``b`` in input order. Then, for each image in input order, up to
    ``imposters_per_image`` distinct images of other subjects are drawn
    without replacement and paired as ``(image, drawn)``.

    Because imposter draws are per image, the unordered pair ``{a, b}`` can
    be drawn from both sides; such duplicates are kept unless
    ``cfg.dedup_imposters`` is set.
    """
    subjects = [e.subject_id for e in embeddings]
    if len(set(subjects)) < 2:
        raise SingleSubjectError("imposter pairs need at least two subjects")
    ids = [e.image_id for e in embeddings]
    subj_arr = np.array(subjects, dtype=object)

    pairs: list[Pair] = []
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if subjects[i] == subjects[j]:
                pairs.append(Pair(ids[i], ids[j], Label.GENUINE))

    rng = np.random.default_rng(cfg.rng_seed)
    seen: set[frozenset] = set()
    for i, image_id in enumerate(ids):
        pool = np.flatnonzero(subj_arr != subjects[i])
        k = min(cfg.imposters_per_image, pool.size)
        drawn = rng.choice(pool, size=k, replace=False)
        for j in drawn:
            other = ids[int(j)]
            if cfg.dedup_imposters:
                key = frozenset((image_id, other))
                if key in seen:
                    continue
                seen.add(key)
            pairs.append(Pair(image_id, other, Label.IMPOSTER))
    return pairs


# --------------------------------------------------------------------------
# rates and calibration


def _split_scores(results) -> tuple[np.ndarray, np.ndarray]:
    gen, imp = [], []
    for item in results:
        if isinstance(item, ComparisonResult):
            score, label = item.score, item.label
        else:
            score, label = item
        (gen if Label(label) is Label.GENUINE else imp).append(float(score))
    return np.asarray(gen, dtype=np.float64), np.asarray(imp, dtype=np.float64)


def fnmr_fmr(results: Iterable, threshold: float) -> tuple[float, float]:
    """FNMR and FMR at ``threshold``; a score equal to it counts as a match.

    ``results`` holds :class:`ComparisonResult` objects or ``(score, label)``
    tuples. A rate whose class is empty is returned as NaN.
    """
    gen, imp = _split_scores(results)
    fnmr = float(np.count_nonzero(gen < threshold)) / gen.size if gen.size else UNDEFINED
    fmr = float(np.count_nonzero(imp >= threshold)) / imp.size if imp.size else UNDEFINED
    return fnmr, fmr


def calibrate_threshold(results: Iterable, fmr_target: float = DEFAULT_FMR_TARGET) -> ThresholdCalibration:
    """Smallest threshold with empirical FMR at or below ``fmr_target``.

    Candidates are the observed imposter scores plus ``+inf``. FMR at a
    candidate ``t`` counts imposter scores ``>= t``, so the result is the
    lowest imposter score ``t`` for which at most ``fmr_target * n`` imposters
    score ``t`` or higher, or ``+inf`` if even the maximum is too many.
    """
    _check_fmr_target(fmr_target)
    gen, imp = _split_scores(results)
    if imp.size == 0:
        raise NoImpostersError("calibration needs at least one imposter score")
    if gen.size == 0:
        raise NoGenuinesError("calibration needs at least one genuine score")
    n = imp.size
    desc = np.sort(imp)[::-1]
    # count of imposters >= desc[k] is the index of the last equal value + 1
    ge_counts = n - np.searchsorted(np.sort(imp), desc, side="left")
    ok = ge_counts / n <= fmr_target
    # ok is monotone: True for a prefix of the descending candidates
    n_ok = int(np.count_nonzero(ok))
    threshold = float(desc[n_ok - 1]) if n_ok else math.inf
    fnmr, fmr = fnmr_fmr(
        [(s, Label.GENUINE) for s in gen] + [(s, Label.IMPOSTER) for s in imp], threshold
    )
    return ThresholdCalibration(
        threshold=threshold,
        fmr_target=float(fmr_target),
        achieved_fmr=fmr,
        achieved_fnmr=fnmr,
        n_genuine=int(gen.size),
        n_imposter=int(n),
    )


# --------------------------------------------------------------------------
# error-vs-reject curves


def rejection_values(results: Sequence[ComparisonResult], key: RejectionKey) -> np.ndarray:
    """Per-result values such that ascending order is rejection order."""
    key = RejectionKey(key)
    attr, sign = {
        RejectionKey.SCORE_UNCERTAINTY: ("score_uncertainty", -1.0),
        RejectionKey.DECISION_CONFIDENCE: ("decision_confidence", 1.0),
        RejectionKey.INTUITIVE_CONFIDENCE: ("intuitive_confidence", 1.0),
        RejectionKey.MIN_QUALITY: ("min_quality", 1.0),
    }[key]
    vals = [getattr(r, attr) for r in results]
    if any(v is None for v in vals):
        raise MissingKeyError(f"some results have no {attr.replace('_', ' ')} ({key.value})")
    return sign * np.asarray(vals, dtype=np.float64)


def rejection_order(results: Sequence[ComparisonResult], key: RejectionKey) -> np.ndarray:
    """Indices in rejection order; ties keep their original order."""
    return np.argsort(rejection_values(results, key), kind="stable")


def reject_counts(n: int, cfg: EvalConfig) -> list[tuple[float, int]]:
    """``(reject_fraction, n_dropped)`` for each grid point up to ``cfg.max_reject``.

    Fractions are ``i / (erc_steps - 1)`` and the dropped count is
    ``floor(i * n / (erc_steps - 1))`` in exact integer arithmetic.
    """
    last = cfg.erc_steps - 1
    grid = []
    for i in range(cfg.erc_steps):
        # i / last <= max_reject, compared without float division error
        if i > cfg.max_reject * last + 1e-9:
            break
        grid.append((i / last, (i * n) // last))
    return grid


def erc(
    results: Sequence[ComparisonResult],
    key: RejectionKey,
    cfg: EvalConfig,
    calibration: ThresholdCalibration | float,
) -> ErcCurve:
    """Error-vs-reject curve at the fixed calibrated threshold.

    Results are sorted by rejection priority (highest score uncertainty,
    lowest decision confidence, lowest intuitive confidence, or lowest pair
    quality first) and the first ``floor(r * N)`` are dropped for each reject
    fraction ``r``. FNMR and FMR of the remainder are computed without
    recalibrating. The curve stops at the first fraction where either class
    is empty and records it in ``exhausted_at``.
    """
    if not results:
        raise EmptyInputError("no comparison results")
    key = RejectionKey(key)
    threshold = (
        calibration.threshold
        if isinstance(calibration, ThresholdCalibration)
        else float(calibration)
    )
    order = rejection_order(results, key)
    n = len(results)
    scores = np.array([results[i].score for i in order])
    genuine = np.array([results[i].label is Label.GENUINE for i in order])
    errors = np.where(genuine, scores < threshold, scores >= threshold)

    # suffix counts: remaining after dropping the first k sorted results
    def suffix(a):
        return np.concatenate([np.cumsum(a[::-1])[::-1], [0]])

    gen_left = suffix(genuine.astype(np.int64))
    imp_left = suffix((~genuine).astype(np.int64))
    fn_left = suffix((errors & genuine).astype(np.int64))
    fm_left = suffix((errors & ~genuine).astype(np.int64))

    points = []
    exhausted = None
    for frac, k in reject_counts(n, cfg):
        if gen_left[k] == 0 or imp_left[k] == 0:
            exhausted = frac
            break
        points.append(
            ErcPoint(
                reject_fraction=frac,
                fnmr=float(fn_left[k]) / float(gen_left[k]),
                fmr=float(fm_left[k]) / float(imp_left[k]),
            )
        )
    return ErcCurve(key, threshold, tuple(points), exhausted)


def erc_auc(curve: ErcCurve) -> float:
    """Trapezoidal area under FNMR over reject fraction."""
    if len(curve.points) < 2:
        raise TooFewPointsError(f"need at least 2 curve points, got {len(curve.points)}")
    x = curve.reject_fractions
    y = curve.fnmr
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def erc_bundle(
    results: Sequence[ComparisonResult],
    cfg: EvalConfig,
    calibration: ThresholdCalibration | float,
    keys: Iterable[RejectionKey] = tuple(RejectionKey),
) -> dict[RejectionKey, ErcCurve]:
    return {RejectionKey(k): erc(results, k, cfg, calibration) for k in keys}
