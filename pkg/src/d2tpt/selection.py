"""Entropy-based confidence selection over view logits and pseudo-labeling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .numerics import logit_entropies


@dataclass
class LogitBlock:
    """An (N, C) logit block with per-row entropies and the selection mask.

    Exactly ceil(rho * N) rows are selected: the lowest-entropy ranks, ties at
    the boundary broken by lower row index. threshold is the entropy value at
    the last selected rank.
    """

    logits: np.ndarray  # (N, C)
    entropies: np.ndarray  # (N,)
    mask: np.ndarray  # (N,) bool
    selected_count: int
    threshold: float

    @property
    def selected_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def selected_logits(self) -> np.ndarray:
        return self.logits[self.mask]


@dataclass
class PseudoLabel:
    """Modal argmax class among the selected rows plus its confidence."""

    label: int
    min_entropy: float  # smallest entropy among selected rows voting for label
    support: int  # number of selected rows voting for label


def select_confident(logits: np.ndarray, rho: float) -> LogitBlock:
    """Keep the ceil(rho * N) lowest-entropy rows of an (N, C) logit block."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[0] < 1:
        raise ShapeMismatch(f"expected (N>=1, C) logits, got {logits.shape}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must be in (0, 1], got {rho!r}")
    n = logits.shape[0]
    ent = logit_entropies(logits)
    m = math.ceil(rho * n)
    order = np.argsort(ent, kind="stable")  # stable: boundary ties by row index
    chosen = order[:m]
    mask = np.zeros(n, dtype=bool)
    mask[chosen] = True
    return LogitBlock(
        logits=logits,
        entropies=ent,
        mask=mask,
        selected_count=m,
        threshold=float(ent[order[m - 1]]),
    )


def pseudo_label(block: LogitBlock) -> PseudoLabel:
    """Most frequent per-row argmax among the selected rows.

    Count ties break toward the class whose best (lowest) supporting entropy
    is smaller, then toward the lower class index.
    """
    idx = block.selected_indices
    preds = np.argmax(block.logits[idx], axis=1)
    ent = block.entropies[idx]
    counts: dict[int, int] = {}
    best_ent: dict[int, float] = {}
    for cls, e in zip(preds, ent):
        c = int(cls)
        counts[c] = counts.get(c, 0) + 1
        best_ent[c] = min(best_ent.get(c, math.inf), float(e))
    top = max(counts.values())
    winner = min(
        (c for c, k in counts.items() if k == top),
        key=lambda c: (best_ent[c], c),
    )
    return PseudoLabel(label=winner, min_entropy=best_ent[winner], support=counts[winner])
