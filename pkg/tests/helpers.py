import numpy as np

from scoreconf.core import ProbabilisticEmbedding


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def make_embedding(mean, sigma=None, image_id="x", subject_id="s", quality=None):
    mean = unit(mean)
    sigma = np.zeros_like(mean) if sigma is None else np.broadcast_to(sigma, mean.shape)
    return ProbabilisticEmbedding(image_id, subject_id, mean, np.array(sigma, dtype=float), quality)


def pair_with_score(rng, d, score):
    """Two random unit vectors whose dot product is ``score`` (up to rounding)."""
    x = unit(rng.standard_normal(d))
    u = rng.standard_normal(d)
    u = unit(u - np.dot(u, x) * x)
    y = score * x + np.sqrt(max(0.0, 1.0 - score * score)) * u
    return x, unit(y)
