"""Text prototypes, additive prompt vectors, and scaled similarity logits.

Prompts are residual vectors added to frozen embeddings: adapted text row c is
prototype_c + p_t and adapted view n is view_n + p_v, so zero prompts reproduce
the unadapted features bit for bit. That additive identity is the per-sample
initialization state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch
from .numerics import EPS_NORM, cosine_matrix


@dataclass
class TextPrototypes:
    """One prototype row per class plus its display name."""

    protos: np.ndarray  # (C, D)
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.protos = np.asarray(self.protos, dtype=np.float64)
        if self.protos.ndim != 2 or self.protos.shape[0] < 2:
            raise ShapeMismatch(f"prototypes must be (C>=2, D), got {self.protos.shape}")
        norms = np.linalg.norm(self.protos, axis=1)
        if not np.all(np.isfinite(self.protos)) or norms.min() <= EPS_NORM:
            raise ShapeMismatch("prototype rows must be finite and non-degenerate")
        if not self.class_names:
            self.class_names = [f"class_{c}" for c in range(self.protos.shape[0])]
        if len(self.class_names) != self.protos.shape[0]:
            raise ShapeMismatch(
                f"{len(self.class_names)} names for {self.protos.shape[0]} classes"
            )

    @property
    def num_classes(self) -> int:
        return self.protos.shape[0]

    @property
    def dim(self) -> int:
        return self.protos.shape[1]


@dataclass
class PromptPair:
    """The learnable residuals: p_t for the text side, p_v for the image side."""

    p_t: np.ndarray  # (D,)
    p_v: np.ndarray  # (D,)

    def __post_init__(self) -> None:
        self.p_t = np.asarray(self.p_t, dtype=np.float64)
        self.p_v = np.asarray(self.p_v, dtype=np.float64)
        if self.p_t.shape != self.p_v.shape or self.p_t.ndim != 1:
            raise ShapeMismatch(f"prompt shapes {self.p_t.shape} vs {self.p_v.shape}")
        if not (np.all(np.isfinite(self.p_t)) and np.all(np.isfinite(self.p_v))):
            raise ShapeMismatch("prompts must be finite")

    @classmethod
    def zeros(cls, dim: int) -> "PromptPair":
        return cls(np.zeros(dim), np.zeros(dim))


@dataclass
class AdaptedFeatures:
    """Prompt-adapted text/image features with the originals kept alongside.

    Invariant: each adapted row equals the original row plus the corresponding
    prompt vector, exactly (same float additions, no renormalization here).
    """

    z_text_adapted: np.ndarray  # (C, D)
    z_img_adapted: np.ndarray  # (N, D)
    z_text_orig: np.ndarray  # (C, D)
    z_img_orig: np.ndarray  # (N, D)


def build_text_prototypes(
    gen_embeds: np.ndarray,
    spe_embeds: np.ndarray,
    class_names: list[str] | None = None,
) -> TextPrototypes:
    """Average the general-template and class-specific-template embeddings per class."""
    gen = np.asarray(gen_embeds, dtype=np.float64)
    spe = np.asarray(spe_embeds, dtype=np.float64)
    if gen.shape != spe.shape or gen.ndim != 2:
        raise ShapeMismatch(f"template shapes {gen.shape} vs {spe.shape}")
    return TextPrototypes(0.5 * (gen + spe), list(class_names or []))


def adapt_features(
    protos: TextPrototypes, views: np.ndarray, prompts: PromptPair
) -> AdaptedFeatures:
    """Broadcast-add p_t to every prototype row and p_v to every view row."""
    views = np.asarray(views, dtype=np.float64)
    if views.ndim != 2 or views.shape[1] != protos.dim:
        raise ShapeMismatch(f"views {views.shape} vs dim {protos.dim}")
    if prompts.p_t.shape[0] != protos.dim:
        raise ShapeMismatch(f"prompt dim {prompts.p_t.shape[0]} vs {protos.dim}")
    return AdaptedFeatures(
        z_text_adapted=protos.protos + prompts.p_t[None, :],
        z_img_adapted=views + prompts.p_v[None, :],
        z_text_orig=protos.protos,
        z_img_orig=views,
    )


def compute_logits(
    feats: AdaptedFeatures,
    logit_scale: float,
    use_adapted_img: bool = True,
    use_adapted_text: bool = True,
) -> np.ndarray:
    """Scaled cosine logits L[i, c] = logit_scale * cos(img_i, text_c).

    The flag pair picks adapted or original rows per modality; the
    cross-modal distillation terms need the mixed combinations.
    """
    if not logit_scale > 0:
        raise ValueError(f"logit_scale must be > 0, got {logit_scale!r}")
    img = feats.z_img_adapted if use_adapted_img else feats.z_img_orig
    text = feats.z_text_adapted if use_adapted_text else feats.z_text_orig
    return float(logit_scale) * cosine_matrix(img, text)
