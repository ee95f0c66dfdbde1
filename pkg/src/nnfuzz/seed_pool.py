"""Seed pool with recency-weighted selection and corpus persistence.

Each pool entry carries the logical time t_i at which it joined.  Selection
draws from a softmax over (t_i - now): newer seeds dominate, but every seed
keeps nonzero probability.  Logical time is the campaign's iteration
counter, so probabilities depend only on age differences.

On disk a pool is a corpus directory::

    <dir>/pool.json            selection clock, id counter, entry order
    <dir>/seeds/<id>.meta.json label, timestamps, lineage
    <dir>/seeds/<id>.tensor    the image

Findings mirror the seeds layout under ``<dir>/findings/``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import CorruptCorpus, EmptyPool, IoError
from .tensorfile import read_tensor, write_tensor


@dataclass
class SeedEntry:
    """One pool member."""

    id: str
    image: np.ndarray
    label: int
    t_i: int
    parent_id: str | None
    profile_popcount: int


class SeedPool:
    """Ordered collection of seeds plus the selection clock."""

    def __init__(self):
        self.entries: list[SeedEntry] = []
        self.t: int = 0
        self._next_index: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, image: np.ndarray, label: int, parent_id: str | None,
            profile_popcount: int, now: int) -> SeedEntry:
        """Append a new seed stamped with insertion time ``now``."""
        entry = SeedEntry(
            id=f"seed-{self._next_index:06d}",
            image=np.asarray(image, dtype=np.float32),
            label=int(label),
            t_i=int(now),
            parent_id=parent_id,
            profile_popcount=int(profile_popcount),
        )
        self._next_index += 1
        self.entries.append(entry)
        return entry

    def selection_probabilities(self, now: int) -> np.ndarray:
        """Softmax over (t_i - now) across the pool, as float64.

        The max exponent is subtracted before exponentiation so large clock
        values stay stable.  Raises EmptyPool on an empty pool.
        """
        if not self.entries:
            raise EmptyPool("cannot compute selection probabilities of an empty pool")
        ages = np.array([e.t_i - now for e in self.entries], dtype=np.float64)
        shifted = ages - ages.max()
        weights = np.exp(shifted)
        return weights / weights.sum()

    def select(self, now: int, rng: np.random.Generator) -> SeedEntry:
        """Sample one seed with replacement; consumes exactly one rng draw."""
        probs = self.selection_probabilities(now)
        u = rng.random()
        index = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        if index >= len(self.entries):  # guard against cumsum rounding below 1.0
            index = len(self.entries) - 1
        return self.entries[index]

    # ------------------------------------------------------------------
    # persistence

    def persist(self, directory) -> None:
        """Write the pool as a corpus directory (see module docstring)."""
        seeds_dir = os.path.join(directory, "seeds")
        try:
            os.makedirs(seeds_dir, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create corpus directory {directory}: {exc}") from exc
        for entry in self.entries:
            meta = {
                "id": entry.id,
                "label": entry.label,
                "t_i": entry.t_i,
                "parent_id": entry.parent_id,
                "profile_popcount": entry.profile_popcount,
            }
            meta_path = os.path.join(seeds_dir, f"{entry.id}.meta.json")
            try:
                with open(meta_path, "w", encoding="utf-8") as fh:
                    json.dump(meta, fh, indent=2)
                    fh.write("\n")
            except OSError as exc:
                raise IoError(f"cannot write {meta_path}: {exc}") from exc
            write_tensor(os.path.join(seeds_dir, f"{entry.id}.tensor"), entry.image)
        pool_meta = {
            "t": self.t,
            "next_index": self._next_index,
            "order": [e.id for e in self.entries],
        }
        pool_path = os.path.join(directory, "pool.json")
        try:
            with open(pool_path, "w", encoding="utf-8") as fh:
                json.dump(pool_meta, fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            raise IoError(f"cannot write {pool_path}: {exc}") from exc

    @classmethod
    def load(cls, directory) -> "SeedPool":
        """Load a corpus directory written by :meth:`persist`.

        A directory without pool.json loads as an empty pool; selection on
        it will raise EmptyPool.  Truncated or inconsistent entries raise
        CorruptCorpus naming the offending file.
        """
        pool = cls()
        pool_path = os.path.join(directory, "pool.json")
        if not os.path.exists(pool_path):
            return pool
        try:
            with open(pool_path, "r", encoding="utf-8") as fh:
                pool_meta = json.load(fh)
        except OSError as exc:
            raise IoError(f"cannot read {pool_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CorruptCorpus(f"{pool_path} is not valid JSON: {exc}") from exc

        seeds_dir = os.path.join(directory, "seeds")
        for seed_id in pool_meta.get("order", []):
            meta_path = os.path.join(seeds_dir, f"{seed_id}.meta.json")
            try:
                with open(meta_path, "r", encoding="utf-8") as fh:
                    meta = json.load(fh)
            except OSError as exc:
                raise CorruptCorpus(f"missing corpus entry {meta_path}") from exc
            except json.JSONDecodeError as exc:
                raise CorruptCorpus(f"{meta_path} is not valid JSON: {exc}") from exc
            if meta.get("id") != seed_id:
                raise CorruptCorpus(
                    f"{meta_path} declares id {meta.get('id')!r}, expected {seed_id!r}"
                )
            image = read_tensor(os.path.join(seeds_dir, f"{seed_id}.tensor"))
            pool.entries.append(SeedEntry(
                id=seed_id,
                image=image,
                label=int(meta["label"]),
                t_i=int(meta["t_i"]),
                parent_id=meta.get("parent_id"),
                profile_popcount=int(meta.get("profile_popcount", 0)),
            ))
        pool.t = int(pool_meta.get("t", 0))
        pool._next_index = int(pool_meta.get("next_index", len(pool.entries)))
        return pool
