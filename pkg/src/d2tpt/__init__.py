"""Test-time prompt adaptation over precomputed embedding bundles."""

import os as _os

# Thread cap must land in the environment before numpy first loads its BLAS,
# so this block runs ahead of every other import in the package.
_threads = _os.environ.get("D2TPT_THREADS")
if _threads:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        _os.environ.setdefault(_var, _threads)

from .bundle import (
    BundleManifest,
    SampleRecord,
    read_bundle,
    samples_bin_size,
    synth_fixture,
    write_bundle,
)
from .errors import (
    BundleCorrupt,
    DegenerateVector,
    EmptyKnowledgeBase,
    EngineError,
    NonFiniteInput,
    NotADistribution,
    ShapeMismatch,
    VersionMismatch,
)
from .knowledge_base import (
    KnowledgeBase,
    RetrievalTables,
    build_tables,
    kb_update,
    modulate,
    retrieval_logits,
)
from .numerics import (
    cosine_matrix,
    entropy,
    l2_normalize,
    log_softmax_rows,
    logit_entropies,
    normalize_rows,
    softmax,
    softmax_rows,
    vjp_l2_normalize,
    vjp_softmax_entropy,
)
from .objectives import (
    EnsembleWeights,
    FrozenStep,
    GradPair,
    LossBreakdown,
    ensemble_weights,
    freeze_step,
    frozen_loss,
    grad_total,
    loss_en,
    loss_md,
    loss_ram,
    term_grads,
    total_loss,
)
from .optim import AdamWState, OptimHypers, adamw_step
from .pipeline import (
    AdaptationReport,
    RunConfig,
    SampleOutcome,
    process_sample,
    run_stream,
)
from .prompts import (
    AdaptedFeatures,
    PromptPair,
    TextPrototypes,
    adapt_features,
    build_text_prototypes,
    compute_logits,
)
from .selection import LogitBlock, PseudoLabel, pseudo_label, select_confident

__version__ = "0.1.0"

__all__ = [
    "AdaptationReport",
    "AdaptedFeatures",
    "AdamWState",
    "BundleCorrupt",
    "BundleManifest",
    "DegenerateVector",
    "EmptyKnowledgeBase",
    "EngineError",
    "EnsembleWeights",
    "FrozenStep",
    "GradPair",
    "KnowledgeBase",
    "LogitBlock",
    "LossBreakdown",
    "NonFiniteInput",
    "NotADistribution",
    "OptimHypers",
    "PromptPair",
    "PseudoLabel",
    "RetrievalTables",
    "RunConfig",
    "SampleOutcome",
    "SampleRecord",
    "ShapeMismatch",
    "TextPrototypes",
    "VersionMismatch",
    "adamw_step",
    "adapt_features",
    "build_tables",
    "build_text_prototypes",
    "compute_logits",
    "cosine_matrix",
    "ensemble_weights",
    "entropy",
    "freeze_step",
    "frozen_loss",
    "grad_total",
    "kb_update",
    "l2_normalize",
    "log_softmax_rows",
    "logit_entropies",
    "loss_en",
    "loss_md",
    "loss_ram",
    "modulate",
    "normalize_rows",
    "process_sample",
    "pseudo_label",
    "read_bundle",
    "retrieval_logits",
    "run_stream",
    "samples_bin_size",
    "select_confident",
    "softmax",
    "softmax_rows",
    "synth_fixture",
    "term_grads",
    "total_loss",
    "vjp_l2_normalize",
    "vjp_softmax_entropy",
    "write_bundle",
]
