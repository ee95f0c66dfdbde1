"""Trainer exception types."""


class TrainerError(Exception):
    """Base class for trainer failures."""


class DivergenceDetected(TrainerError):
    """A training loss became non-finite."""


class UnsupportedLayer(TrainerError):
    """A module cannot be expressed in the interchange layer set."""
