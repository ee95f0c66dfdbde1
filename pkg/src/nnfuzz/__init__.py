"""Coverage-guided fuzzing for feed-forward image classifiers.

The engine mutates seed images through a generator pair (or classical image
transforms), keeps candidates whose deep features stay close to the parent,
and admits candidates that improve neuron coverage into the live pool.
Misclassified candidates are recorded as findings.
"""

from .coverage import (
    ActivationProfile,
    CoverageTracker,
    activation_profile,
    is_new_coverage,
)
from .errors import EngineError
from .feature_gate import GateDecision, cosine_similarity, extract_features, gate_and_rank
from .inference import ActivationRecord, classify, forward
from .model_format import (
    LayerSpec,
    Manifest,
    Model,
    load_model,
    neuron_count,
    save_model,
    validate_files,
)
from .mutation import (
    GeneratorPair,
    MutatorConfig,
    aeg_mutate,
    batch_generate,
    classical_mutate,
)
from .orchestrator import CampaignConfig, Finding, init_pool, run_campaign
from .seed_pool import SeedEntry, SeedPool

__version__ = "0.1.0"

__all__ = [
    "ActivationProfile",
    "ActivationRecord",
    "CampaignConfig",
    "CoverageTracker",
    "EngineError",
    "Finding",
    "GateDecision",
    "GeneratorPair",
    "LayerSpec",
    "Manifest",
    "Model",
    "MutatorConfig",
    "SeedEntry",
    "SeedPool",
    "activation_profile",
    "aeg_mutate",
    "batch_generate",
    "classical_mutate",
    "classify",
    "cosine_similarity",
    "extract_features",
    "forward",
    "gate_and_rank",
    "init_pool",
    "is_new_coverage",
    "load_model",
    "neuron_count",
    "run_campaign",
    "save_model",
    "validate_files",
]
