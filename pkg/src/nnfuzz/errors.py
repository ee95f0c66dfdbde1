"""Exception types shared across the engine.

Every error raised by the engine derives from EngineError so callers can
catch the whole family with one clause.  The CLI maps these onto exit codes.
"""


class EngineError(Exception):
    """Base class for all engine errors."""


# ---- model interchange format ----

class MalformedManifest(EngineError):
    """Manifest JSON is missing fields, has bad types, or breaks a schema rule.

    Carries a ``violations`` list with one human-readable string per problem.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ShapeChainError(EngineError):
    """Consecutive layers disagree about tensor shape."""


class WeightCountMismatch(EngineError):
    """Weight blob length does not match the declared parameter count."""


class NonFiniteWeight(EngineError):
    """Weight blob contains NaN or infinity."""


class IoError(EngineError):
    """Filesystem-level failure while reading or writing engine files."""


# ---- inference ----

class ShapeMismatch(EngineError):
    """Input tensor shape does not match what a model expects."""


class RangeViolation(EngineError):
    """Input values fall outside the model's declared range (strict mode)."""


class NotAClassifier(EngineError):
    """Model's final layer is not softmax, so it cannot classify."""


class UnsupportedLayer(EngineError):
    """Layer kind exists in the manifest but the engine cannot execute it."""


# ---- coverage ----

class ProfileMismatch(EngineError):
    """Activation profiles or trackers with incompatible dimensions or
    settings were combined."""


# ---- seed pool / corpus ----

class EmptyPool(EngineError):
    """Selection was attempted on a pool with no entries."""


class CorruptCorpus(EngineError):
    """A corpus file is truncated or inconsistent with its metadata."""


# ---- mutation ----

class UnknownOp(EngineError):
    """Requested mutation operator does not exist."""


class MagnitudeOutOfRange(EngineError):
    """Mutation magnitude falls outside the operator's documented range."""


# ---- feature gate ----

class NoFeatureLayer(EngineError):
    """Extractor manifest does not declare a feature layer."""


class ZeroVector(EngineError):
    """Cosine similarity is undefined for a zero-norm vector."""


class DimensionMismatch(EngineError):
    """Vectors of different lengths were compared."""


# ---- orchestration ----

class ConfigError(EngineError):
    """Campaign configuration values are unusable."""


class CampaignAborted(EngineError):
    """Campaign stopped mid-run; a partial report was written."""
