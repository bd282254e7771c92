"""Shared domain types: probabilistic embeddings, pairs, results and curves."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    InvalidValueError,
    NotNormalizedError,
    NegativeSigmaError,
    NonFiniteValueError,
    ZeroNormError,
)

DEFAULT_DIMENSION = 512
NORM_TOLERANCE = 1e-9


class Label(str, enum.Enum):
    GENUINE = "genuine"
    IMPOSTER = "imposter"


class Decision(str, enum.Enum):
    MATCH = "match"
    NON_MATCH = "nonmatch"


class RejectionKey(str, enum.Enum):
    """Which per-comparison quantity drives rejection in an ERC."""

    SCORE_UNCERTAINTY = "score-uncertainty"
    DECISION_CONFIDENCE = "decision-confidence"
    INTUITIVE_CONFIDENCE = "intuitive-confidence"
    MIN_QUALITY = "min-quality"


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.size < 1:
        raise DimensionMismatchError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"{name} contains NaN or Inf")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProbabilisticEmbedding:
    """A unit-norm feature vector with per-dimension standard deviations.

    Instances are normally built with :func:`validate_embedding`, which
    normalizes the mean. The constructor itself only checks invariants.
    """

    image_id: str
    subject_id: str
    mean: np.ndarray
    sigma: np.ndarray
    quality: Optional[float] = None

    def __post_init__(self):
        mean = _as_vector(self.mean, "mean")
        sigma = _as_vector(self.sigma, "sigma")
        if mean.shape != sigma.shape:
            raise DimensionMismatchError(
                f"mean has dimension {mean.size}, sigma has {sigma.size}"
            )
        if np.any(sigma < 0):
            raise NegativeSigmaError(f"negative sigma entry for {self.image_id!r}")
        norm = math.sqrt(float(np.dot(mean, mean)))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            if norm == 0.0:
                raise ZeroNormError(f"mean of {self.image_id!r} is the zero vector")
            raise NotNormalizedError(
                f"mean of {self.image_id!r} has norm {norm!r}; use validate_embedding"
            )
        if self.quality is not None:
            q = float(self.quality)
            if not math.isfinite(q):
                raise NonFiniteValueError(f"quality of {self.image_id!r} is not finite")
            if q < 0:
                raise InvalidValueError(f"quality of {self.image_id!r} must be >= 0")
            object.__setattr__(self, "quality", q)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dimension(self) -> int:
        return int(self.mean.size)


def validate_embedding(
    mean,
    sigma,
    image_id: str,
    subject_id: str,
    quality: Optional[float] = None,
) -> ProbabilisticEmbedding:
    """Normalize a raw (mean, sigma) pair into a :class:`ProbabilisticEmbedding`.

    The mean is scaled to unit L2 norm and sigma is divided by the same raw
    norm, i.e. normalization is treated as a linear rescaling of the
    coordinate system.

    Raises:
        DimensionMismatchError: mean and sigma differ in length.
        NonFiniteValueError: any entry is NaN or Inf.
        ZeroNormError: the raw mean is the zero vector.
        NegativeSigmaError: any sigma entry is negative.
    """
    raw_mean = np.array(mean, dtype=np.float64).reshape(-1)
    raw_sigma = np.array(sigma, dtype=np.float64).reshape(-1)
    if raw_mean.shape != raw_sigma.shape or raw_mean.size < 1:
        raise DimensionMismatchError(
            f"mean has dimension {raw_mean.size}, sigma has {raw_sigma.size}"
        )
    if not (np.all(np.isfinite(raw_mean)) and np.all(np.isfinite(raw_sigma))):
        raise NonFiniteValueError(f"non-finite entry in embedding {image_id!r}")
    if np.any(raw_sigma < 0):
        raise NegativeSigmaError(f"negative sigma entry in embedding {image_id!r}")
    norm = float(np.linalg.norm(raw_mean))
    if norm == 0.0:
        raise ZeroNormError(f"embedding {image_id!r} has a zero mean vector")
    if abs(norm - 1.0) <= NORM_TOLERANCE:
        # already unit length: keep bit-identical so validation is idempotent
        return ProbabilisticEmbedding(image_id, subject_id, raw_mean, raw_sigma, quality)
    return ProbabilisticEmbedding(
        image_id, subject_id, raw_mean / norm, raw_sigma / norm, quality
    )


@dataclass(frozen=True)
class Pair:
    probe_id: str
    reference_id: str
    label: Label

    def __post_init__(self):
        if self.probe_id == self.reference_id:
            raise InvalidValueError(f"pair compares {self.probe_id!r} with itself")
        object.__setattr__(self, "label", Label(self.label))


@dataclass(frozen=True)
class ComparisonResult:
    """Outcome of one comparison.

    ``decision_confidence`` and ``intuitive_confidence`` stay ``None`` until
    filled by :mod:`scoreconf.decision`.
    """

    pair: Pair
    score: float
    score_uncertainty: float
    decision: Decision
    threshold: float
    decision_confidence: Optional[float] = None
    intuitive_confidence: Optional[float] = None
    min_quality: Optional[float] = None

    @property
    def label(self) -> Label:
        return self.pair.label


@dataclass(frozen=True)
class ThresholdCalibration:
    threshold: float
    fmr_target: float
    achieved_fmr: float
    achieved_fnmr: float
    n_genuine: int = 0
    n_imposter: int = 0


@dataclass(frozen=True)
class ErcPoint:
    reject_fraction: float
    fnmr: float
    fmr: float


@dataclass(frozen=True)
class ErcCurve:
    """Error-vs-reject curve at one fixed threshold.

    ``exhausted_at`` is the first grid reject fraction at which a class ran
    out of comparisons; the curve stops before it. ``None`` if the whole grid
    was evaluated.
    """

    rejection_key: RejectionKey
    threshold: float
    points: tuple[ErcPoint, ...] = field(default_factory=tuple)
    exhausted_at: Optional[float] = None

    @property
    def reject_fractions(self) -> np.ndarray:
        return np.array([p.reject_fraction for p in self.points])

    @property
    def fnmr(self) -> np.ndarray:
        return np.array([p.fnmr for p in self.points])

    @property
    def fmr(self) -> np.ndarray:
        return np.array([p.fmr for p in self.points])


def check_same_dimension(*embeddings: ProbabilisticEmbedding) -> int:
    dims = {e.dimension for e in embeddings}
    if len(dims) != 1:
        raise DimensionMismatchError(f"embeddings have differing dimensions {sorted(dims)}")
    return dims.pop()


def index_embeddings(embeddings) -> dict[str, ProbabilisticEmbedding]:
    by_id: dict[str, ProbabilisticEmbedding] = {}
    for emb in embeddings:
        if emb.image_id in by_id:
            raise DuplicateIdError(f"duplicate image_id {emb.image_id!r}")
        by_id[emb.image_id] = emb
    if by_id:
        check_same_dimension(*by_id.values())
    return by_id
