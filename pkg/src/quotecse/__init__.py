"""Contrastive quote embeddings and contextomized-headline-quote detection."""

__version__ = "0.1.0"

from .corpus import (
    Article,
    DetectionExample,
    Quote,
    extract_quotes,
    is_identical_quote,
    load_articles,
    load_detection_examples,
    split_labeled,
)
from .encoder import Embedding, Encoder, EncoderConfig, cosine_sim, toy_encode_raw
from .mining import MinedTriplet, assign_samples, filter_by_threshold, mine_corpus, reassign_batch
from .contrastive import (
    ContrastiveBatch,
    MocoState,
    TrainConfig,
    ablation_loss,
    moco_loss,
    moco_step,
    quotecse_loss,
    simcse_loss,
    train,
)
from .detection import (
    ClassifierConfig,
    ClassifierParams,
    build_features,
    classify,
    detect,
    select_body_quote,
    train_classifier,
)
from .evaluation import (
    alignment,
    auc_score,
    embedding_quality,
    f1_score,
    precision_at_k,
    repeated_split_eval,
    uniformity,
)

__all__ = [
    "Article",
    "ClassifierConfig",
    "ClassifierParams",
    "ContrastiveBatch",
    "DetectionExample",
    "Embedding",
    "Encoder",
    "EncoderConfig",
    "MinedTriplet",
    "MocoState",
    "Quote",
    "TrainConfig",
    "ablation_loss",
    "alignment",
    "assign_samples",
    "auc_score",
    "build_features",
    "classify",
    "cosine_sim",
    "detect",
    "embedding_quality",
    "extract_quotes",
    "f1_score",
    "filter_by_threshold",
    "is_identical_quote",
    "load_articles",
    "load_detection_examples",
    "mine_corpus",
    "moco_loss",
    "moco_step",
    "precision_at_k",
    "quotecse_loss",
    "reassign_batch",
    "repeated_split_eval",
    "select_body_quote",
    "simcse_loss",
    "split_labeled",
    "toy_encode_raw",
    "train",
    "train_classifier",
    "uniformity",
]
