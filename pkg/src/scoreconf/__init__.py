"""Comparison-score uncertainty and verification decision confidence for
probabilistic face embeddings."""

from .core import (
    ComparisonResult,
    Decision,
    ErcCurve,
    ErcPoint,
    Label,
    Pair,
    ProbabilisticEmbedding,
    RejectionKey,
    ThresholdCalibration,
    validate_embedding,
)
from .decision import (
    ConfidenceParams,
    confidence_heatmap_data,
    decision_confidence,
    evaluate_pair,
    intuitive_confidence,
    score_pairs,
    sigmoid_decision,
)
from .estimate import StochasticSampleSet, estimate_uncertainty, population_std
from .evaluate import (
    EvalConfig,
    build_pairs,
    calibrate_threshold,
    erc,
    erc_auc,
    fnmr_fmr,
)
from .scoring import compare, cosine_similarity, propagate_uncertainty, score_uncertainty

__version__ = "0.1.0"
