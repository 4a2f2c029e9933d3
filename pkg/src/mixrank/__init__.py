"""Personalized two-level ranking: GBDT retrieval features feeding a
mixed-effect logistic re-ranker, with training, evaluation, synthetic
data generation, and a CLI."""

from ._kernels import BACKEND, available_backends
from .core import (
    Dataset,
    DatasetFormatError,
    EntityKind,
    FeatureVector,
    ImpressionRecord,
    MixrankError,
    TrainingError,
    load_dataset,
    save_dataset,
)
from .gbdt import GbdtModel, GbdtTrainConfig, leaf_indices, predict_margin, train_gbdt
from .glmix import (
    GlmixModel,
    GlmixTrainConfig,
    fit_glm,
    grid_search,
    load_glmix_model,
    save_glmix_model,
    train_glmix,
)
from .metrics import MetricReport, auc, evaluate_rankings, lift, log_loss, positive_responses_at_k
from .benchmark import benchmark_variants, default_variants
from .synthgen import GeneratorSpec, GroundTruth, generate, generate_days, oracle_rank
from .treefeat import assemble_f_all, enrich_dataset, interaction_features, score_feature
from .twolevel import PipelineConfig, RankedItem, RankedList, rank_l1, rerank_l2, run_daily_pipeline

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset",
    "DatasetFormatError",
    "EntityKind",
    "FeatureVector",
    "GbdtModel",
    "GbdtTrainConfig",
    "GeneratorSpec",
    "GlmixModel",
    "GlmixTrainConfig",
    "GroundTruth",
    "ImpressionRecord",
    "MetricReport",
    "MixrankError",
    "PipelineConfig",
    "RankedItem",
    "RankedList",
    "TrainingError",
    "assemble_f_all",
    "auc",
    "available_backends",
    "benchmark_variants",
    "default_variants",
    "enrich_dataset",
    "evaluate_rankings",
    "fit_glm",
    "generate",
    "generate_days",
    "grid_search",
    "interaction_features",
    "leaf_indices",
    "lift",
    "load_dataset",
    "load_glmix_model",
    "log_loss",
    "oracle_rank",
    "positive_responses_at_k",
    "predict_margin",
    "rank_l1",
    "rerank_l2",
    "run_daily_pipeline",
    "save_dataset",
    "save_glmix_model",
    "score_feature",
    "train_gbdt",
    "train_glmix",
    "__version__",
]
