from .metrics import Metrics, compute_metrics
from .model import (VARIANTS, AttentionRecord, Example, ForwardResult, HierNet, ModelConfig,
                    encode_word_chars, load_embeddings)
from .train import EarlyStopping, TrainHistory, evaluate, predict, train

__all__ = [
    "VARIANTS", "AttentionRecord", "EarlyStopping", "Example", "ForwardResult", "HierNet",
    "Metrics", "ModelConfig", "TrainHistory", "compute_metrics", "encode_word_chars", "evaluate",
    "load_embeddings", "predict", "train",
]
