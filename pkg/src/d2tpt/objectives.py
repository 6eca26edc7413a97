"""Entropy objectives over augmented-view logits and their exact gradients.

Three terms make up the total objective:

  * marginal-entropy term: entropy of the mean softmax over the confident
    rows of the retrieval-modulated logits,
  * agreement term: entropy of the softmax of a similarity-weighted sum of
    those same rows, where each view's weight is the softmax of its summed
    cosine similarity to the other selected views,
  * cross-modal term: entropy of the softmax of three scaled-cosine logit
    rows built from mean-feature prototypes, mixing original and adapted
    features on the image and text sides.

Gradients with respect to the additive prompts are derived by hand in
reverse mode under a frozen step context: the confident-row mask and the
retrieval vector are captured once and treated as constants, while the
similarity-derived view weights are differentiated through in full. That
makes `grad_total` the exact gradient of `frozen_loss`, which is what the
finite-difference checks in gradcheck.py verify.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .numerics import (
    entropy,
    l2_normalize,
    normalize_rows,
    softmax,
    softmax_rows,
    vjp_l2_normalize,
    vjp_softmax_entropy,
)
from .prompts import AdaptedFeatures, PromptPair
from .selection import LogitBlock, select_confident


@dataclass(frozen=True)
class LossBreakdown:
    l_ram: float
    l_en: float
    l_md: float
    total: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class EnsembleWeights:
    weights: np.ndarray  # (M,)
    raw_scores: np.ndarray  # (M,) row sums of the pairwise cosine matrix


@dataclass(frozen=True)
class GradPair:
    g_t: np.ndarray  # (D,)
    g_v: np.ndarray  # (D,)

    def scaled_sum(self, other: "GradPair", factor: float) -> "GradPair":
        return GradPair(self.g_t + factor * other.g_t, self.g_v + factor * other.g_v)


@dataclass(frozen=True)
class FrozenStep:
    """Constant context for one optimization step.

    views/protos are the raw (un-prompted) features; mask is the confident-row
    mask taken on the modulated logits at freeze time; l_r is the retrieval
    vector, constant because its query is the un-prompted image feature.
    """

    views: np.ndarray  # (N, D)
    protos: np.ndarray  # (C, D)
    logit_scale: float
    l_r: np.ndarray  # (C,)
    mask: np.ndarray  # (N,) bool
    alpha: float
    beta: float

    def __post_init__(self):
        if self.views.ndim != 2 or self.protos.ndim != 2:
            raise ShapeMismatch("views and protos must be rank-2")
        if self.views.shape[1] != self.protos.shape[1]:
            raise ShapeMismatch(
                f"feature dims differ: {self.views.shape} vs {self.protos.shape}"
            )
        if self.l_r.shape != (self.protos.shape[0],):
            raise ShapeMismatch(f"retrieval vector shape {self.l_r.shape}")
        if self.mask.shape != (self.views.shape[0],) or self.mask.dtype != np.bool_:
            raise ShapeMismatch("mask must be a boolean vector over the views")
        if not self.mask.any():
            raise ValueError("frozen mask selects no rows")
        if not self.logit_scale > 0:
            raise ValueError(f"logit_scale must be > 0, got {self.logit_scale!r}")


def loss_ram(modulated: np.ndarray, rho: float) -> tuple[float, LogitBlock]:
    """Entropy of the mean softmax over the confident rows of `modulated`.

    Returns the selection block as well so the caller can freeze its mask.
    """
    block = select_confident(modulated, rho)
    probs = softmax_rows(block.selected_logits)
    return float(entropy(probs.mean(axis=0))), block


def ensemble_weights(selected_img: np.ndarray) -> EnsembleWeights:
    """Softmax over each selected view's summed cosine similarity to the rest.

    The similarity matrix keeps its unit diagonal; it shifts every score by
    the same amount and cancels in the softmax.
    """
    hat, _ = normalize_rows(np.asarray(selected_img, dtype=np.float64))
    scores = hat @ hat.sum(axis=0)
    return EnsembleWeights(weights=softmax(scores), raw_scores=scores)


def loss_en(selected_modulated: np.ndarray, weights: EnsembleWeights) -> float:
    rows = np.asarray(selected_modulated, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] != weights.weights.shape[0]:
        raise ShapeMismatch(
            f"rows {rows.shape} vs weights {weights.weights.shape}"
        )
    return float(entropy(softmax(weights.weights @ rows)))


def loss_md(feats: AdaptedFeatures, mask: np.ndarray, logit_scale: float) -> float:
    """Entropy of the softmax of the summed cross-modal prototype logits.

    Prototypes are means of the selected rows' normalized features,
    re-normalized. The three logit rows pair original image with adapted
    text, adapted image with original text, and adapted with adapted.
    """
    if not mask.any():
        raise ValueError("mask selects no rows")
    z_ori = l2_normalize(normalize_rows(feats.z_img_orig)[0][mask].mean(axis=0))
    z_ad = l2_normalize(normalize_rows(feats.z_img_adapted)[0][mask].mean(axis=0))
    t_ori = normalize_rows(feats.z_text_orig)[0]
    t_ad = normalize_rows(feats.z_text_adapted)[0]
    summed = logit_scale * (t_ad @ z_ori + t_ori @ z_ad + t_ad @ z_ad)
    return float(entropy(softmax(summed)))


def total_loss(l_ram_: float, l_en_: float, l_md_: float, alpha: float, beta: float) -> LossBreakdown:
    for name, val in (("l_ram", l_ram_), ("l_en", l_en_), ("l_md", l_md_)):
        if not np.isfinite(val):
            raise ValueError(f"{name} is not finite: {val!r}")
    return LossBreakdown(
        l_ram=float(l_ram_),
        l_en=float(l_en_),
        l_md=float(l_md_),
        total=float(l_ram_ + alpha * l_en_ + beta * l_md_),
        alpha=float(alpha),
        beta=float(beta),
    )


def freeze_step(
    views: np.ndarray,
    protos: np.ndarray,
    prompts: PromptPair,
    logit_scale: float,
    l_r: np.ndarray,
    rho: float,
    alpha: float,
    beta: float,
) -> FrozenStep:
    """Run the forward pass at `prompts` and capture the step constants."""
    views = np.asarray(views, dtype=np.float64)
    protos = np.asarray(protos, dtype=np.float64)
    l_r = np.asarray(l_r, dtype=np.float64)
    zhat, _ = normalize_rows(views + prompts.p_v[None, :])
    that, _ = normalize_rows(protos + prompts.p_t[None, :])
    modulated = logit_scale * (zhat @ that.T) + l_r[None, :]
    block = select_confident(modulated, rho)
    return FrozenStep(
        views=views,
        protos=protos,
        logit_scale=float(logit_scale),
        l_r=l_r,
        mask=block.mask.copy(),
        alpha=float(alpha),
        beta=float(beta),
    )


def frozen_loss(prompts: PromptPair, frozen: FrozenStep) -> LossBreakdown:
    """Total objective at `prompts` with the step's mask and retrieval frozen."""
    zi = frozen.views + prompts.p_v[None, :]
    ti = frozen.protos + prompts.p_t[None, :]
    zhat, _ = normalize_rows(zi)
    that, _ = normalize_rows(ti)
    modulated = frozen.logit_scale * (zhat @ that.T) + frozen.l_r[None, :]
    rows = modulated[frozen.mask]

    l_ram_ = float(entropy(softmax_rows(rows).mean(axis=0)))
    l_en_ = loss_en(rows, ensemble_weights(zhat[frozen.mask]))
    feats = AdaptedFeatures(
        z_text_adapted=ti,
        z_img_adapted=zi,
        z_text_orig=frozen.protos,
        z_img_orig=frozen.views,
    )
    l_md_ = loss_md(feats, frozen.mask, frozen.logit_scale)
    return total_loss(l_ram_, l_en_, l_md_, frozen.alpha, frozen.beta)


def _rows_norm_vjp(hat: np.ndarray, norms: np.ndarray, g_hat: np.ndarray) -> np.ndarray:
    """Row-wise normalization VJP given the normalized rows and their norms."""
    dots = np.sum(g_hat * hat, axis=1, keepdims=True)
    return (g_hat - dots * hat) / norms[:, None]


def term_grads(prompts: PromptPair, frozen: FrozenStep) -> tuple[GradPair, GradPair, GradPair]:
    """Exact per-term gradients of frozen_loss w.r.t. (p_t, p_v).

    The three pairs are the unweighted term gradients; grad_total combines
    them with the alpha/beta coefficients stored in the frozen context.
    """
    scale = frozen.logit_scale
    mask = frozen.mask
    zi = frozen.views + prompts.p_v[None, :]
    ti = frozen.protos + prompts.p_t[None, :]
    zhat, z_norms = normalize_rows(zi)
    that, t_norms = normalize_rows(ti)
    rows = scale * (zhat[mask] @ that.T) + frozen.l_r[None, :]
    m = rows.shape[0]

    # marginal-entropy term: d/drows of H(mean softmax(rows))
    probs = softmax_rows(rows)
    p_bar = probs.mean(axis=0)
    with np.errstate(divide="ignore"):
        log_pbar = np.log(p_bar)
    u_bar = np.where(p_bar > 0.0, -(log_pbar + 1.0) / m, 0.0)
    g_rows_1 = probs * (u_bar[None, :] - (probs @ u_bar)[:, None])

    # agreement term: weights differentiated through the similarity scores
    zsel = zhat[mask]
    tsum = zsel.sum(axis=0)
    scores = zsel @ tsum
    w = softmax(scores)
    g_e = vjp_softmax_entropy(rows.T @ w, 1.0)
    g_rows_2 = np.outer(w, g_e)
    g_w = rows @ g_e
    g_scores = w * (g_w - np.dot(w, g_w))
    g_zsel_2 = np.outer(g_scores, tsum) + np.tile(g_scores @ zsel, (m, 1))

    # cross-modal term: no dependence on the modulated rows
    z0hat_sel = normalize_rows(frozen.views)[0][mask]
    t0hat = normalize_rows(frozen.protos)[0]
    mean_ori = z0hat_sel.mean(axis=0)
    mean_ad = zsel.mean(axis=0)
    zbar_ori = l2_normalize(mean_ori)
    zbar_ad = l2_normalize(mean_ad)
    summed = scale * (that @ zbar_ori + t0hat @ zbar_ad + that @ zbar_ad)
    g_u = vjp_softmax_entropy(summed, 1.0)
    g_that_3 = scale * np.outer(g_u, zbar_ori + zbar_ad)
    g_zbar_ad = scale * ((t0hat + that).T @ g_u)
    g_zsel_3 = np.tile(vjp_l2_normalize(mean_ad, g_zbar_ad) / m, (m, 1))

    def back(g_rows, g_zsel_extra, g_that_extra) -> GradPair:
        g_zhat = np.zeros_like(zhat)
        g_that = np.zeros_like(that)
        if g_rows is not None:
            g_zhat[mask] = scale * (g_rows @ that)
            g_that += scale * (g_rows.T @ zhat[mask])
        if g_zsel_extra is not None:
            g_zhat[mask] += g_zsel_extra
        if g_that_extra is not None:
            g_that += g_that_extra
        g_zi = _rows_norm_vjp(zhat, z_norms, g_zhat)
        g_ti = _rows_norm_vjp(that, t_norms, g_that)
        return GradPair(g_t=g_ti.sum(axis=0), g_v=g_zi.sum(axis=0))

    return (
        back(g_rows_1, None, None),
        back(g_rows_2, g_zsel_2, None),
        back(None, g_zsel_3, g_that_3),
    )


def grad_total(prompts: PromptPair, frozen: FrozenStep) -> GradPair:
    """Gradient of the total frozen objective: term sums weighted by alpha/beta."""
    g1, g2, g3 = term_grads(prompts, frozen)
    return g1.scaled_sum(g2, frozen.alpha).scaled_sum(g3, frozen.beta)
