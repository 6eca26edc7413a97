"""Per-sample adaptation loop and the streaming evaluation harness.

Each test sample is processed independently except for the knowledge base,
which persists across the stream: prompts and optimizer state reset to zero,
one gradient step is taken on the frozen-step objective, and the prediction
is the argmax of the mean softmax over the re-selected modulated rows.

The zero-shot baseline prediction (same selection and aggregation applied to
the raw prompt-free logits) is computed for every sample in the same pass,
so a report always carries its own control.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable

import numpy as np

from .bundle import BundleManifest, SampleRecord
from .errors import BundleCorrupt, EmptyKnowledgeBase, EngineError
from .knowledge_base import KnowledgeBase, build_tables, retrieval_logits
from .numerics import l2_normalize, normalize_rows, softmax_rows
from .objectives import (
    LossBreakdown,
    freeze_step,
    frozen_loss,
    grad_total,
)
from .optim import AdamWState, OptimHypers, adamw_step
from .prompts import PromptPair, TextPrototypes, build_text_prototypes
from .selection import PseudoLabel, pseudo_label, select_confident

log = logging.getLogger(__name__)

MODES = ("d2tpt", "tpt-baseline", "zero-shot")
AGGREGATES = ("selected-mean", "first-view")


@dataclass(frozen=True)
class RunConfig:
    rho: float = 0.1
    rho_insert: float | None = None  # selection fraction for pseudo-labeling; None = rho
    capacity: int = 3
    lam: float = 1.0
    gamma: float = 5.0
    alpha: float = 0.1
    beta: float = 0.001
    optim: OptimHypers = field(default_factory=OptimHypers)
    seed: int = 42
    mode: str = "d2tpt"
    aggregate: str = "selected-mean"
    kb_enabled: bool = True
    kb_insert: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.aggregate not in AGGREGATES:
            raise ValueError(
                f"aggregate must be one of {AGGREGATES}, got {self.aggregate!r}"
            )
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity!r}")

    def effective(self) -> "RunConfig":
        """Mode-resolved copy: the baseline mode zeroes every addition."""
        if self.mode == "tpt-baseline":
            return replace(self, lam=0.0, alpha=0.0, beta=0.0, kb_enabled=False)
        return self

    def insert_rho(self) -> float:
        return self.rho if self.rho_insert is None else self.rho_insert


@dataclass
class SampleOutcome:
    prediction: int
    correct: bool
    baseline_prediction: int
    baseline_correct: bool
    losses: LossBreakdown | None
    kb_inserted: bool
    pseudo: PseudoLabel | None
    insert_mask: np.ndarray | None
    loss_mask: np.ndarray | None
    final_mask: np.ndarray | None
    retrieval: np.ndarray | None
    aborted: bool = False
    abort_reason: str | None = None


def _aggregate_prediction(logits: np.ndarray, rho: float, aggregate: str) -> tuple[int, np.ndarray]:
    """Predict from a logit block; returns (argmax class, selection mask)."""
    if aggregate == "first-view":
        return int(np.argmax(logits[0])), np.zeros(logits.shape[0], dtype=bool)
    block = select_confident(logits, rho)
    mean_probs = softmax_rows(block.selected_logits).mean(axis=0)
    return int(np.argmax(mean_probs)), block.mask


@dataclass
class _Trace:
    """Progressively filled diagnostics, so an abort keeps what already ran."""

    prediction: int = 0
    correct: bool = False
    baseline_prediction: int = 0
    baseline_correct: bool = False
    losses: LossBreakdown | None = None
    kb_inserted: bool = False
    pseudo: PseudoLabel | None = None
    insert_mask: np.ndarray | None = None
    loss_mask: np.ndarray | None = None
    final_mask: np.ndarray | None = None
    retrieval: np.ndarray | None = None


def process_sample(
    sample: SampleRecord,
    kb: KnowledgeBase,
    protos: TextPrototypes,
    config: RunConfig,
    logit_scale: float,
) -> SampleOutcome:
    """Run the full adaptation step for one sample; mutates kb in place.

    A numeric error anywhere aborts just this sample: it counts as incorrect,
    the diagnostics gathered so far are kept, and the KB retains whatever
    insertion already happened.
    """
    trace = _Trace()
    try:
        _adapt_sample(sample, kb, protos, config.effective(), logit_scale, trace)
        aborted, reason = False, None
    except EngineError as exc:
        trace.correct = False
        aborted, reason = True, f"{type(exc).__name__}: {exc}"
    return SampleOutcome(
        prediction=trace.prediction,
        correct=trace.correct,
        baseline_prediction=trace.baseline_prediction,
        baseline_correct=trace.baseline_correct,
        losses=trace.losses,
        kb_inserted=trace.kb_inserted,
        pseudo=trace.pseudo,
        insert_mask=trace.insert_mask,
        loss_mask=trace.loss_mask,
        final_mask=trace.final_mask,
        retrieval=trace.retrieval,
        aborted=aborted,
        abort_reason=reason,
    )


def _adapt_sample(
    sample: SampleRecord,
    kb: KnowledgeBase,
    protos: TextPrototypes,
    cfg: RunConfig,
    logit_scale: float,
    trace: _Trace,
) -> None:
    views = sample.view_features
    num_classes = protos.num_classes

    zhat, _ = normalize_rows(views)
    that, _ = normalize_rows(protos.protos)
    raw_logits = logit_scale * (zhat @ that.T)

    baseline_pred, _ = _aggregate_prediction(raw_logits, cfg.rho, cfg.aggregate)
    trace.baseline_prediction = baseline_pred
    trace.baseline_correct = baseline_pred == sample.label
    trace.prediction = baseline_pred
    trace.correct = trace.baseline_correct

    if cfg.mode == "zero-shot":
        return

    query = l2_normalize(views[0])  # row 0 is the original view by contract
    insert_block = select_confident(raw_logits, cfg.insert_rho())
    trace.insert_mask = insert_block.mask
    trace.pseudo = pseudo_label(insert_block)
    if cfg.kb_enabled and cfg.kb_insert:
        trace.kb_inserted = kb.update(query, trace.pseudo.label, trace.pseudo.min_entropy)

    l_r = np.zeros(num_classes)
    if cfg.kb_enabled:
        try:
            tables = build_tables(kb, num_classes)
            l_r = retrieval_logits(query, tables, cfg.lam, cfg.gamma)
        except EmptyKnowledgeBase:
            pass  # first samples of a stream retrieve nothing
    trace.retrieval = l_r

    prompts = PromptPair.zeros(views.shape[1])
    state = AdamWState.zeros(views.shape[1])
    frozen = freeze_step(
        views, protos.protos, prompts, logit_scale, l_r,
        cfg.rho, cfg.alpha, cfg.beta,
    )
    trace.loss_mask = frozen.mask
    trace.losses = frozen_loss(prompts, frozen)
    grads = grad_total(prompts, frozen)
    prompts, state = adamw_step(prompts, grads, state, cfg.optim)

    zhat2, _ = normalize_rows(views + prompts.p_v[None, :])
    that2, _ = normalize_rows(protos.protos + prompts.p_t[None, :])
    modulated2 = logit_scale * (zhat2 @ that2.T) + l_r[None, :]
    trace.prediction, trace.final_mask = _aggregate_prediction(
        modulated2, cfg.rho, cfg.aggregate
    )
    trace.correct = trace.prediction == sample.label


@dataclass
class AdaptationReport:
    accuracy: float  # percent
    baseline_accuracy: float  # percent
    num_samples: int
    per_class: list[dict]
    mean_losses: dict | None
    config_echo: dict
    seed: int
    kb_occupancy: list[int]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _echo_config(config: RunConfig) -> dict:
    doc = asdict(config)
    doc["optim"] = asdict(config.optim)
    return doc


def run_stream(
    manifest: BundleManifest,
    text_pair: tuple[np.ndarray, np.ndarray],
    samples: Iterable[SampleRecord],
    config: RunConfig,
) -> tuple[AdaptationReport, list[SampleOutcome]]:
    """Process samples in order with a persistent KB; returns report + outcomes."""
    protos = build_text_prototypes(text_pair[0], text_pair[1], manifest.class_names)
    kb = KnowledgeBase(capacity=config.capacity)

    outcomes: list[SampleOutcome] = []
    occupancy: list[int] = []
    correct = 0
    baseline_correct = 0
    per_class_n = np.zeros(manifest.num_classes, dtype=int)
    per_class_hit = np.zeros(manifest.num_classes, dtype=int)
    loss_sums = np.zeros(4)
    loss_count = 0

    for sample in samples:
        outcome = process_sample(sample, kb, protos, config, manifest.logit_scale)
        outcomes.append(outcome)
        occupancy.append(kb.total_entries())
        correct += outcome.correct
        baseline_correct += outcome.baseline_correct
        per_class_n[sample.label] += 1
        per_class_hit[sample.label] += outcome.correct
        if outcome.losses is not None:
            lb = outcome.losses
            loss_sums += (lb.l_ram, lb.l_en, lb.l_md, lb.total)
            loss_count += 1
        if outcome.aborted:
            log.warning("sample %d aborted: %s", len(outcomes) - 1, outcome.abort_reason)

    if not outcomes:
        raise BundleCorrupt("bundle produced no samples")

    n = len(outcomes)
    per_class = [
        {
            "class_index": c,
            "class_name": manifest.class_names[c],
            "count": int(per_class_n[c]),
            "correct": int(per_class_hit[c]),
            "accuracy": 100.0 * per_class_hit[c] / per_class_n[c] if per_class_n[c] else None,
        }
        for c in range(manifest.num_classes)
    ]
    mean_losses = None
    if loss_count:
        means = loss_sums / loss_count
        mean_losses = {
            "ram": means[0],
            "en": means[1],
            "md": means[2],
            "total": means[3],
        }
    report = AdaptationReport(
        accuracy=100.0 * correct / n,
        baseline_accuracy=100.0 * baseline_correct / n,
        num_samples=n,
        per_class=per_class,
        mean_losses=mean_losses,
        config_echo=_echo_config(config),
        seed=config.seed,
        kb_occupancy=occupancy,
    )
    return report, outcomes
