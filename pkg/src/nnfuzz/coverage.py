"""Neuron coverage profiling and accumulation.

An input covers a neuron when its (optionally rescaled) post-activation
value strictly exceeds the activation threshold t.  Campaign coverage is
the union of per-input profiles: the fraction of neurons activated by at
least one input seen so far.

Two scaling modes are supported:

* ``raw``: compare recorded values against t directly.
* ``layer_minmax``: rescale each recorded layer of each input to [0, 1]
  by that layer's own min and max before comparing.  A constant layer
  rescales to all zeros and so covers nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProfileMismatch
from .inference import ActivationRecord

SCALING_MODES = ("raw", "layer_minmax")


@dataclass
class ActivationProfile:
    """Boolean coverage vector for one input."""

    bits: np.ndarray
    threshold: float
    mode: str

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __len__(self) -> int:
        return int(self.bits.size)


def activation_profile(record: ActivationRecord, threshold: float,
                       mode: str = "raw") -> ActivationProfile:
    """Profile one forward pass's activation record.

    Bit i is set iff neuron i's scaled value strictly exceeds ``threshold``.
    """
    if mode not in SCALING_MODES:
        raise ProfileMismatch(f"unknown scaling mode {mode!r}")
    if mode == "raw":
        bits = record.values > threshold
    else:
        segments = []
        for layer_values in record.layers:
            v = layer_values.ravel()
            lo, hi = v.min(), v.max()
            if hi == lo:
                segments.append(np.zeros(v.size, dtype=bool))
            else:
                scaled = (v.astype(np.float64) - float(lo)) / (float(hi) - float(lo))
                segments.append(scaled > threshold)
        bits = (
            np.concatenate(segments) if segments else np.zeros(0, dtype=bool)
        )
    return ActivationProfile(bits=np.asarray(bits, dtype=bool),
                             threshold=threshold, mode=mode)


class CoverageTracker:
    """Cumulative union of activation profiles over a campaign.

    Fixed to one neuron dimension, threshold, and scaling mode; profiles
    produced under different settings are rejected.
    """

    def __init__(self, neuron_count: int, threshold: float, mode: str = "raw"):
        if neuron_count < 1:
            raise ProfileMismatch(
                f"tracker needs at least one neuron, got {neuron_count}"
            )
        if mode not in SCALING_MODES:
            raise ProfileMismatch(f"unknown scaling mode {mode!r}")
        self.neuron_count = int(neuron_count)
        self.threshold = float(threshold)
        self.mode = mode
        self.cumulative = np.zeros(self.neuron_count, dtype=bool)

    def _check(self, profile: ActivationProfile) -> None:
        if len(profile) != self.neuron_count:
            raise ProfileMismatch(
                f"profile has {len(profile)} neurons, tracker expects"
                f" {self.neuron_count}"
            )
        if profile.threshold != self.threshold or profile.mode != self.mode:
            raise ProfileMismatch(
                f"profile settings (t={profile.threshold}, {profile.mode}) do not"
                f" match tracker (t={self.threshold}, {self.mode})"
            )

    def update(self, profile: ActivationProfile) -> int:
        """Fold one profile in; returns how many neurons became newly covered."""
        self._check(profile)
        new_bits = profile.bits & ~self.cumulative
        self.cumulative |= profile.bits
        return int(np.count_nonzero(new_bits))

    def would_add(self, profile: ActivationProfile) -> bool:
        """True if folding this profile in would cover at least one new neuron."""
        self._check(profile)
        return bool(np.any(profile.bits & ~self.cumulative))

    def covered_count(self) -> int:
        return int(np.count_nonzero(self.cumulative))

    def nc_ratio(self) -> float:
        """Covered fraction in [0, 1]."""
        return self.covered_count() / self.neuron_count


FEEDBACK_MODES = ("parent_relative", "global_cumulative")


def is_new_coverage(parent: ActivationProfile, child: ActivationProfile,
                    tracker: CoverageTracker, mode: str = "parent_relative") -> bool:
    """Coverage feedback predicate deciding whether a child earns pool entry.

    ``parent_relative`` asks whether the child activates strictly more
    neurons than its parent did.  ``global_cumulative`` asks whether the
    child covers any neuron the whole campaign has not covered yet.
    """
    if mode not in FEEDBACK_MODES:
        raise ProfileMismatch(f"unknown feedback mode {mode!r}")
    if len(parent) != len(child):
        raise ProfileMismatch(
            f"parent profile has {len(parent)} neurons, child {len(child)}"
        )
    if mode == "parent_relative":
        return child.popcount > parent.popcount
    return tracker.would_add(child)
