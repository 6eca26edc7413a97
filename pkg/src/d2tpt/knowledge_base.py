"""Per-class entropy-ordered registers of visual features and retrieval math.

Each class owns a register of at most `capacity` (feature, entropy) pairs kept
sorted by ascending entropy. A full register admits a new pair only if its
entropy beats the current worst, which gets evicted, so a register always
holds the lowest-entropy evidence ever offered to that class. Retrieval turns
register means into keys, one-hot labels into values, and adds
lam * exp(-gamma * (1 - <query, key>)) worth of each value to the logits.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVector, EmptyKnowledgeBase, ShapeMismatch
from .numerics import l2_normalize

log = logging.getLogger(__name__)


@dataclass
class RegisterEntry:
    feature: np.ndarray  # (D,), unit norm
    entropy: float


class KnowledgeBase:
    """Mutable map class index -> register; single-writer (the stream loop)."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity!r}")
        self.capacity = int(capacity)
        self.registers: dict[int, list[RegisterEntry]] = {}

    def update(self, feature: np.ndarray, label: int, entropy: float) -> bool:
        """Offer one (feature, entropy) pair to the register of `label`.

        Returns True when the register changed. Full register + entropy not
        below the stored maximum leaves it unchanged.
        """
        feature = np.asarray(feature, dtype=np.float64)
        if abs(float(np.linalg.norm(feature)) - 1.0) > 1e-6:
            raise ValueError("register features must arrive L2-normalized")
        if not np.isfinite(entropy):
            raise ValueError(f"entropy must be finite, got {entropy!r}")
        entry = RegisterEntry(feature=feature, entropy=float(entropy))
        reg = self.registers.setdefault(int(label), [])
        if len(reg) < self.capacity:
            reg.append(entry)
        elif entry.entropy < reg[-1].entropy:  # reg sorted ascending, [-1] is worst
            reg[-1] = entry
        else:
            return False
        reg.sort(key=lambda e: e.entropy)
        return True

    def entropies(self, label: int) -> list[float]:
        return [e.entropy for e in self.registers.get(int(label), [])]

    def total_entries(self) -> int:
        return sum(len(r) for r in self.registers.values())

    def is_empty(self) -> bool:
        return self.total_entries() == 0

    def occupancy(self) -> dict[int, int]:
        return {c: len(r) for c, r in sorted(self.registers.items()) if r}

    def snapshot(self, json_path, blob_path) -> None:
        """Debug dump: JSON {class: [{entropy, feature_file_offset}]} + f32-LE blob."""
        doc: dict[str, list[dict[str, float | int]]] = {}
        offset = 0
        with open(blob_path, "wb") as blob:
            for cls in sorted(self.registers):
                rows = []
                for e in self.registers[cls]:
                    blob.write(e.feature.astype("<f4").tobytes())
                    rows.append({"entropy": e.entropy, "feature_file_offset": offset})
                    offset += e.feature.size * 4
                if rows:
                    doc[str(cls)] = rows
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)


def kb_update(
    kb: KnowledgeBase, feature: np.ndarray, label: int, entropy: float
) -> KnowledgeBase:
    """Functional-style wrapper over KnowledgeBase.update; returns the same kb."""
    kb.update(feature, label, entropy)
    return kb


@dataclass
class RetrievalTables:
    """Immutable key/value snapshot of the non-empty registers."""

    keys: np.ndarray  # (C_stored, D), unit rows
    values: np.ndarray  # (C_stored, C), one-hot rows
    class_ids: list[int]

    @property
    def num_classes(self) -> int:
        return self.values.shape[1]


def build_tables(kb: KnowledgeBase, num_classes: int) -> RetrievalTables:
    """Key = renormalized mean of each register's features; value = one-hot.

    Registers whose mean collapses to the zero vector are skipped (logged);
    if nothing usable remains the knowledge base counts as empty.
    """
    keys, values, ids = [], [], []
    for cls in sorted(kb.registers):
        reg = kb.registers[cls]
        if not reg:
            continue
        mean = np.mean([e.feature for e in reg], axis=0)
        try:
            key = l2_normalize(mean)
        except DegenerateVector:
            log.warning("register %d has a degenerate mean feature; skipping", cls)
            continue
        one_hot = np.zeros(num_classes)
        one_hot[cls] = 1.0
        keys.append(key)
        values.append(one_hot)
        ids.append(cls)
    if not ids:
        raise EmptyKnowledgeBase("no usable register entries")
    return RetrievalTables(keys=np.stack(keys), values=np.stack(values), class_ids=ids)


def retrieval_logits(
    query: np.ndarray, tables: RetrievalTables, lam: float, gamma: float
) -> np.ndarray:
    """Affinity-weighted one-hot evidence: sum_j lam*exp(-gamma*(1-<q,k_j>)) * v_j.

    Classes with no register row receive exactly 0.
    """
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (tables.keys.shape[1],):
        raise ShapeMismatch(f"query {query.shape} vs keys {tables.keys.shape}")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam!r}")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    affinity = lam * np.exp(-gamma * (1.0 - tables.keys @ query))
    return affinity @ tables.values


def modulate(logits: np.ndarray, l_r: np.ndarray) -> np.ndarray:
    """Add the retrieval vector to every logit row."""
    logits = np.asarray(logits, dtype=np.float64)
    l_r = np.asarray(l_r, dtype=np.float64)
    if logits.ndim != 2 or l_r.shape != (logits.shape[1],):
        raise ShapeMismatch(f"logits {logits.shape} vs retrieval {l_r.shape}")
    return logits + l_r[None, :]
