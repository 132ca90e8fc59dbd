"""Emotion-cause pair extraction engine with task-aligned features.

A trainable multi-task extractor: a partition-filter recurrent encoder splits
clause features into emotion, cause, and shared partitions; clause and pair
heads score the three tasks; an inter-task alignment loss pulls pair scores
toward soft-masked combinations of the clause-level scores.
"""

from .data import Clause, Corpus, Document, SynthConfig, generate_synthetic, parse_corpus
from .estimator import PairExtractor
from .metrics import MetricsReport, Predictions, ScoreMatrices
from .model import ModelConfig, PairModel
from .train import TrainConfig, fit, load_checkpoint, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    "Clause",
    "Corpus",
    "Document",
    "MetricsReport",
    "ModelConfig",
    "PairExtractor",
    "PairModel",
    "Predictions",
    "ScoreMatrices",
    "SynthConfig",
    "TrainConfig",
    "fit",
    "generate_synthetic",
    "load_checkpoint",
    "parse_corpus",
    "save_checkpoint",
]
