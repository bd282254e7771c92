"""Monte-Carlo references for the analytic score uncertainty and confidence.

These deliberately share no code with :mod:`scoreconf.scoring` or
:mod:`scoreconf.decision`: they perturb the embeddings, recompute the score
from scratch and take an empirical standard deviation.

By default perturbed vectors are *not* renormalized, which is the regime in
which the first-order formulas are derived (the dot product of fixed-norm
vectors). ``renormalize=True`` gives the full cosine instead and is meant for
measuring the approximation gap, not for asserting agreement.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ProbabilisticEmbedding
from .errors import DimensionMismatchError, TooFewSamplesError

MIN_SAMPLES = 1000
BATCH_SIZE = 8192


def _perturbed_scores(
    x: ProbabilisticEmbedding,
    y: ProbabilisticEmbedding,
    n_samples: int,
    seed: int,
    renormalize: bool,
) -> np.ndarray:
    if n_samples < MIN_SAMPLES:
        raise TooFewSamplesError(f"n_samples must be >= {MIN_SAMPLES}, got {n_samples}")
    if x.mean.shape != y.mean.shape:
        raise DimensionMismatchError("embeddings differ in dimension")
    d = x.mean.size
    n_batches = math.ceil(n_samples / BATCH_SIZE)
    streams = np.random.SeedSequence(seed).spawn(n_batches)
    out = np.empty(n_samples)
    for b, ss in enumerate(streams):
        lo = b * BATCH_SIZE
        m = min(BATCH_SIZE, n_samples - lo)
        rng = np.random.default_rng(ss)
        xt = x.mean + rng.standard_normal((m, d)) * x.sigma
        yt = y.mean + rng.standard_normal((m, d)) * y.sigma
        dots = np.einsum("ij,ij->i", xt, yt)
        if renormalize:
            dots = dots / (np.linalg.norm(xt, axis=1) * np.linalg.norm(yt, axis=1))
        out[lo : lo + m] = dots
    return out


def _std(values: np.ndarray) -> float:
    # shifting by one sample leaves the variance unchanged and makes a
    # constant array come out as exactly 0
    return float(np.std(values - values[0]))


def mc_score_std(
    x: ProbabilisticEmbedding,
    y: ProbabilisticEmbedding,
    n_samples: int = 100_000,
    seed: int = 0,
    renormalize: bool = False,
) -> float:
    """Empirical std of the comparison score under Gaussian embedding noise."""
    return _std(_perturbed_scores(x, y, n_samples, seed, renormalize))


def mc_decision_confidence_std(
    x: ProbabilisticEmbedding,
    y: ProbabilisticEmbedding,
    alpha: float,
    threshold: float,
    n_samples: int = 100_000,
    seed: int = 0,
    renormalize: bool = False,
) -> float:
    """Empirical std of the sigmoid decision value; compare to ``1 - confidence``."""
    scores = _perturbed_scores(x, y, n_samples, seed, renormalize)
    z = alpha * (scores - threshold)
    # logistic written out, independent of the library's sigmoid
    e = np.exp(-np.abs(z))
    delta = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _std(delta)
