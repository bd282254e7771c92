"""Synthetic probabilistic embeddings with clustered identities.

Identity centers are uniform on the unit sphere. Each image's mean is its
subject's center plus isotropic Gaussian noise, renormalized (a tangent-space
approximation of a von Mises-Fisher cluster, adequate for small spreads).
``intra_class_spread`` is the expected norm of that displacement, i.e.
roughly the angular spread in radians; the per-dimension std is
``spread / sqrt(d)``.

Per-image uncertainty and quality are coupled through a Gaussian copula: a
latent ``z`` sets the sigma magnitude, and quality is ``Phi(rho*z + sqrt(1-rho^2)*e)``
with ``rho = quality_coupling``. A negative coupling makes low-quality images
uncertain.

With ``sigma_drives_mean`` the image mean is additionally displaced by a draw
from its own per-dimension sigma, so the stated uncertainty describes real
noise in the embedding. Without it, sigma is attached but carries no
information about errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .core import ProbabilisticEmbedding
from .errors import InvalidConfigError
from .estimate import StochasticSampleSet


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 200
    images_per_subject: int = 5
    dimension: int = 512
    intra_class_spread: float = 1.0
    sigma_low: float = 0.01
    sigma_high: float = 0.08
    quality_coupling: float = -0.9
    cross_quality_fraction: float = 0.0
    rng_seed: int = 0
    sigma_drives_mean: bool = False
    sigma_jitter: float = 0.2

    def __post_init__(self):
        if self.n_subjects < 2:
            raise InvalidConfigError("n_subjects must be >= 2")
        if self.images_per_subject < 1:
            raise InvalidConfigError("images_per_subject must be >= 1")
        if self.dimension < 2:
            raise InvalidConfigError("dimension must be >= 2")
        if not self.intra_class_spread >= 0:
            raise InvalidConfigError("intra_class_spread must be >= 0")
        if not 0 <= self.sigma_low <= self.sigma_high:
            raise InvalidConfigError("need 0 <= sigma_low <= sigma_high")
        if not -1.0 <= self.quality_coupling <= 1.0:
            raise InvalidConfigError("quality_coupling must lie in [-1, 1]")
        if not 0.0 <= self.cross_quality_fraction <= 1.0:
            raise InvalidConfigError("cross_quality_fraction must lie in [0, 1]")
        if not 0.0 <= self.sigma_jitter < 1.0:
            raise InvalidConfigError("sigma_jitter must lie in [0, 1)")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidConfigError("rng_seed must be a 64-bit unsigned integer")


def image_id(subject: int, image: int) -> str:
    return f"s{subject:05d}_i{image:03d}"


def subject_id(subject: int) -> str:
    return f"s{subject:05d}"


# low-quality regime for forced cross-quality images: top decile of sigma
_LOW_QUALITY_RANGE = (0.9, 0.999)


def _subject_streams(cfg: SynthConfig) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_subjects)


def _generate_subject(cfg: SynthConfig, subject: int, stream: np.random.SeedSequence):
    emb_stream, sample_stream = stream.spawn(2)
    rng = np.random.default_rng(emb_stream)
    d = cfg.dimension
    center = rng.standard_normal(d)
    center /= np.linalg.norm(center)

    out = []
    for img in range(cfg.images_per_subject):
        z = rng.standard_normal()
        if rng.random() < cfg.cross_quality_fraction:
            z = float(ndtri(rng.uniform(*_LOW_QUALITY_RANGE)))
        position = float(ndtr(z))
        magnitude = cfg.sigma_low + (cfg.sigma_high - cfg.sigma_low) * position
        jitter = 1.0 + cfg.sigma_jitter * rng.uniform(-1.0, 1.0, d)
        sigma = np.clip(magnitude * jitter, cfg.sigma_low, cfg.sigma_high)

        rho = cfg.quality_coupling
        quality = float(ndtr(rho * z + np.sqrt(1.0 - rho * rho) * rng.standard_normal()))

        noise = rng.standard_normal(d) * (cfg.intra_class_spread / np.sqrt(d))
        displaced = center + noise
        if cfg.sigma_drives_mean:
            displaced = displaced + rng.standard_normal(d) * sigma
        else:
            rng.standard_normal(d)  # keep streams aligned across the flag
        if cfg.intra_class_spread == 0 and not cfg.sigma_drives_mean:
            mean = center.copy()
        else:
            mean = displaced / np.linalg.norm(displaced)
        out.append(
            ProbabilisticEmbedding(
                image_id(subject, img), subject_id(subject), mean, sigma, quality
            )
        )
    return out, sample_stream


def generate(cfg: SynthConfig) -> list[ProbabilisticEmbedding]:
    """Embeddings ordered by subject, then image; deterministic given the seed."""
    embeddings: list[ProbabilisticEmbedding] = []
    for subject, stream in enumerate(_subject_streams(cfg)):
        embs, _ = _generate_subject(cfg, subject, stream)
        embeddings.extend(embs)
    return embeddings


def generate_with_samples(
    cfg: SynthConfig, num_samples: int = 100
) -> tuple[list[ProbabilisticEmbedding], list[StochasticSampleSet]]:
    """Embeddings plus ``num_samples`` stochastic embeddings per image.

    Samples are ``mean + N(0, sigma**2)`` per dimension, without
    renormalization, so :func:`~scoreconf.estimate.estimate_uncertainty`
    with ``normalize_samples=False`` recovers sigma. The embeddings equal
    those of :func:`generate` for the same config.
    """
    embeddings: list[ProbabilisticEmbedding] = []
    sample_sets: list[StochasticSampleSet] = []
    for subject, stream in enumerate(_subject_streams(cfg)):
        embs, sample_stream = _generate_subject(cfg, subject, stream)
        rng = np.random.default_rng(sample_stream)
        for emb in embs:
            noise = rng.standard_normal((num_samples, cfg.dimension)) * emb.sigma
            sample_sets.append(
                StochasticSampleSet(
                    emb.image_id, emb.subject_id, emb.mean, emb.mean + noise, emb.quality
                )
            )
        embeddings.extend(embs)
    return embeddings, sample_sets
