"""Deep-feature similarity gating of mutation candidates.

Candidates only move on to classification and coverage profiling when their
deep features stay close to the parent's, measured by cosine similarity.
This filters mutations that wandered off the parent's semantics.  The gate
applies the similarity threshold first, then keeps at most top_k survivors
ranked by descending similarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoFeatureLayer, ShapeMismatch, ZeroVector
from .inference import layer_output
from .model_format import Model


def _nearest_resample(image: np.ndarray, target_hw: tuple[int, int]) -> np.ndarray:
    th, tw = target_hw
    h, w = image.shape[0], image.shape[1]
    rows = (np.arange(th) * h) // th
    cols = (np.arange(tw) * w) // tw
    return image[rows][:, cols]


def extract_features(extractor: Model, image: np.ndarray) -> np.ndarray:
    """Deep feature vector of ``image`` from the extractor's feature layer.

    Images whose spatial size differs from the extractor's input are
    resampled with nearest-neighbor first; the channel count must match.
    """
    fl = extractor.manifest.feature_layer
    if fl is None:
        raise NoFeatureLayer(
            f"model {extractor.manifest.name!r} declares no feature layer"
        )
    eh, ew, ec = extractor.manifest.input_shape
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != ec:
        raise ShapeMismatch(
            f"image shape {tuple(img.shape)} incompatible with extractor"
            f" input {(eh, ew, ec)}"
        )
    if img.shape[0] != eh or img.shape[1] != ew:
        img = _nearest_resample(img, (eh, ew))
    return layer_output(extractor, img, fl).ravel()


def cosine_similarity(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    Accumulates in float64.  Raises ZeroVector when either vector has zero
    norm and DimensionMismatch when lengths differ.
    """
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(y, dtype=np.float64).ravel()
    if a.size != b.size:
        raise DimensionMismatch(f"vector lengths differ: {a.size} vs {b.size}")
    aa = float(a @ a)
    bb = float(b @ b)
    if aa == 0.0 or bb == 0.0:
        raise ZeroVector("cosine similarity of a zero-norm vector is undefined")
    denom = float(np.sqrt(aa * bb))
    if denom == 0.0 or math.isinf(denom):
        # aa * bb under/overflowed; separate roots stay finite and nonzero
        denom = math.sqrt(aa) * math.sqrt(bb)
    sim = float(a @ b) / denom
    return min(1.0, max(-1.0, sim))


@dataclass
class GateDecision:
    """Outcome of gating one candidate.

    ``similarity`` is None when the candidate's feature vector was
    degenerate (zero norm) and no similarity exists.  ``rank`` is 1-based
    among kept candidates, None otherwise.
    """

    candidate_id: object
    similarity: float | None
    kept: bool
    rank: int | None = None
    degenerate: bool = False


def gate_and_rank(parent_features: np.ndarray, candidates: list,
                  threshold: float = 0.9, top_k: int = 5) -> list[GateDecision]:
    """Gate candidates against the parent's features.

    Args:
        parent_features: the parent seed's feature vector.
        candidates: (candidate_id, feature_vector) pairs.
        threshold: candidates must exceed this similarity strictly.
        top_k: at most this many survivors, ranked by descending
            similarity with ties broken by ascending candidate id.

    Returns:
        One GateDecision per candidate, in input order.  Candidates with a
        zero-norm feature vector (or gated against a zero-norm parent) are
        marked degenerate and never kept.
    """
    decisions: list[GateDecision] = []
    passing: list[GateDecision] = []
    for candidate_id, features in candidates:
        try:
            sim = cosine_similarity(parent_features, features)
        except ZeroVector:
            decisions.append(GateDecision(candidate_id, None, False, degenerate=True))
            continue
        decision = GateDecision(candidate_id, sim, False)
        decisions.append(decision)
        if sim > threshold:
            passing.append(decision)

    passing.sort(key=lambda d: (-d.similarity, d.candidate_id))
    for rank, decision in enumerate(passing[:top_k], start=1):
        decision.kept = True
        decision.rank = rank
    return decisions
