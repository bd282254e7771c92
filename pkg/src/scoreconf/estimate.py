"""Embedding uncertainty from sets of stochastic embeddings.

The stochastic forward passes themselves (dropout inside a network) happen
elsewhere; this module only reduces the resulting samples to a per-dimension
standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ProbabilisticEmbedding, validate_embedding
from .errors import DimensionMismatchError, TooFewSamplesError, ZeroNormError

DEFAULT_NUM_PASSES = 100


@dataclass(frozen=True, eq=False)
class StochasticSampleSet:
    """Deterministic embedding of one image plus ``t`` stochastic embeddings.

    ``samples`` has shape ``(t, d)``.
    """

    image_id: str
    subject_id: str
    deterministic: np.ndarray
    samples: np.ndarray
    quality: Optional[float] = None

    def __post_init__(self):
        det = np.array(self.deterministic, dtype=np.float64).reshape(-1)
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            samples = samples.reshape(len(samples), -1)
        if samples.shape[0] < 2:
            raise TooFewSamplesError(
                f"{self.image_id!r} has {samples.shape[0]} samples, need at least 2"
            )
        if samples.shape[1] != det.size:
            raise DimensionMismatchError(
                f"{self.image_id!r}: samples have dimension {samples.shape[1]}, "
                f"deterministic embedding has {det.size}"
            )
        det.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "deterministic", det)
        object.__setattr__(self, "samples", samples)

    @property
    def num_samples(self) -> int:
        return int(self.samples.shape[0])


def population_std(values: Sequence[float]) -> float:
    """Standard deviation of a finite set, dividing by its size (not size - 1)."""
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size < 2:
        raise TooFewSamplesError(f"need at least 2 values, got {arr.size}")
    dev = arr - arr.mean()
    return float(np.sqrt(np.mean(dev * dev)))


def _normalize_rows(samples: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(samples, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ZeroNormError("zero vector among stochastic embeddings")
    return samples / norms


def estimate_uncertainty(
    sample_set: StochasticSampleSet, normalize_samples: bool = True
) -> ProbabilisticEmbedding:
    """Build a probabilistic embedding from stochastic samples.

    sigma is the per-dimension population standard deviation of the samples,
    taken after L2-normalizing each sample when ``normalize_samples`` is set.
    The mean comes from the deterministic embedding.

    With normalized samples sigma is already on the unit-sphere scale, so the
    deterministic vector is normalized on its own. Without, sigma is in raw
    feature units and :func:`~scoreconf.core.validate_embedding` rescales it
    together with the mean.
    """
    samples = sample_set.samples
    det = sample_set.deterministic
    if normalize_samples:
        samples = _normalize_rows(samples)
        det = _normalize_rows(det[None, :])[0]
    dev = samples - samples.mean(axis=0)
    sigma = np.sqrt(np.mean(dev * dev, axis=0))
    return validate_embedding(
        det,
        sigma,
        image_id=sample_set.image_id,
        subject_id=sample_set.subject_id,
        quality=sample_set.quality,
    )
