"""zgs: model selection for pre-trained model zoos via graph learning.

Predicts the fine-tune accuracy of every (model, dataset) pair by
learning node embeddings on a weighted model/dataset graph and feeding
them, together with metadata and transferability scores, into a
regression predictor. Models are ranked by predicted score; quality is
measured by leave-one-out Pearson correlation against held-out
fine-tuning results.
"""

from .errors import ZgsError
from .evaluate import (
    LooResult,
    PipelineConfig,
    compare_strategies,
    loo_evaluate,
    pearson,
    ratio_ablation,
    topk_accuracy,
)
from .predictor import FeatureSpec
from .registry import Zoo, load_zoo, save_zoo, validate_zoo
from .simfeat import aggregate_features, correlation_distance, similarity_matrix
from .synthzoo import SynthConfig, generate
from .transferability import log_evidence, logme_score, maximize_evidence
from .zoograph import GraphConfig, ZooGraph, build_graph, remove_target_edges

__version__ = "0.1.0"

__all__ = [
    "FeatureSpec",
    "GraphConfig",
    "LooResult",
    "PipelineConfig",
    "SynthConfig",
    "Zoo",
    "ZooGraph",
    "ZgsError",
    "aggregate_features",
    "build_graph",
    "compare_strategies",
    "correlation_distance",
    "generate",
    "load_zoo",
    "log_evidence",
    "logme_score",
    "loo_evaluate",
    "maximize_evidence",
    "pearson",
    "ratio_ablation",
    "remove_target_edges",
    "save_zoo",
    "similarity_matrix",
    "topk_accuracy",
    "validate_zoo",
]
