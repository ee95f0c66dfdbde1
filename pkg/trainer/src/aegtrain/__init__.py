"""Desk-scale trainer for the fuzzing engine's model artifacts.

Synthesizes a two-domain image dataset, trains a toy classifier, a feature
extractor and a cycle-consistent generator pair, and exports all of them
in the engine's interchange and corpus formats.
"""

from .config import SyntheticDatasetConfig, TrainConfig
from .dataset import LabeledImages, make_synthetic_dataset
from .errors import DivergenceDetected, TrainerError, UnsupportedLayer
from .export import ExportableModel, export_model, write_dataset
from .training import (
    ClassifierResult,
    GeneratorResult,
    train_cycle_generators,
    train_feature_extractor,
    train_target_classifier,
)

__all__ = [
    "ClassifierResult",
    "DivergenceDetected",
    "ExportableModel",
    "GeneratorResult",
    "LabeledImages",
    "SyntheticDatasetConfig",
    "TrainConfig",
    "TrainerError",
    "UnsupportedLayer",
    "export_model",
    "make_synthetic_dataset",
    "train_cycle_generators",
    "train_feature_extractor",
    "train_target_classifier",
    "write_dataset",
]
