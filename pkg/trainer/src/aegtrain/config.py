"""Configuration dataclasses for dataset synthesis and training."""

from dataclasses import dataclass


@dataclass
class SyntheticDatasetConfig:
    """Controls the procedural two-domain dataset.

    The same class patterns are drawn in two styles: domain X uses thin
    strokes, domain Y thick ones.  ``per_class`` counts images per class
    per domain; the labeled test set mixes both styles.
    """

    image_size: int = 16
    channels: int = 1
    classes: int = 4
    per_class: int = 40
    test_per_class: int = 25
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.image_size < 8:
            problems.append(f"image_size must be >= 8, got {self.image_size}")
        if self.channels != 1:
            problems.append(f"only single-channel images supported, got {self.channels}")
        if not 1 <= self.classes <= 4:
            problems.append(f"classes must be in 1..4, got {self.classes}")
        if self.per_class < 1:
            problems.append(f"per_class must be >= 1, got {self.per_class}")
        if self.test_per_class < 1:
            problems.append(f"test_per_class must be >= 1, got {self.test_per_class}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class TrainConfig:
    epochs: int = 30
    lr: float = 2e-3
    cycle_weight: float = 10.0  # weight on the L1 reconstruction penalty
    batch_size: int = 32
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            problems.append(f"lr must be positive, got {self.lr}")
        if self.cycle_weight < 0:
            problems.append(f"cycle_weight must be >= 0, got {self.cycle_weight}")
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1, got {self.batch_size}")
        if problems:
            raise ValueError("; ".join(problems))
