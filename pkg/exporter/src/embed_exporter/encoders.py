"""Encoder backends: a deterministic palette encoder and optional CLIP.

An encoder maps PIL images and prompt strings into one shared unit-norm
feature space and reports the dimensionality and logit scale that belong in
the bundle manifest. The palette backend is self-contained (color, layout,
and gradient statistics; prompts are rasterized through the class-descriptor
grammar) so the full export pipeline runs without model weights. The clip
backend wraps a pretrained vision-language checkpoint when one is available
locally.
"""

from __future__ import annotations

import hashlib
from typing import Protocol

import numpy as np
from PIL import Image

from .errors import EncoderUnavailable, TemplateError
from .palette import find_descriptor, render_canonical

# Pinned once against the standard procedural dataset, like any model's
# temperature: large enough that confident views separate under softmax.
PALETTE_LOGIT_SCALE = 12.0
PALETTE_DIM = 64
PALETTE_NATIVE = 32

# Template wording perturbs the rasterized class feature by this fraction so
# distinct templates stay distinct without breaking class alignment.
TEMPLATE_JITTER = 0.01


class Encoder(Protocol):
    name: str
    dim: int
    logit_scale: float
    native_size: int

    def encode_image(self, img: Image.Image) -> np.ndarray: ...

    def encode_text(self, prompt: str) -> np.ndarray: ...


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize a zero or non-finite feature")
    return v / n


def _grid_means(channel: np.ndarray, cells: int) -> np.ndarray:
    h, w = channel.shape
    return channel.reshape(cells, h // cells, cells, w // cells).mean(axis=(1, 3))


class PaletteEncoder:
    """Hand-rolled color/layout features over a 32x32 RGB raster.

    Feature blocks (64 dims total): saturation-weighted soft hue histogram
    (24), saturation histogram (4), 2x2 RGB grid means (12), 4x4 luma grid
    (16), band-averaged horizontal and vertical gradient energy (8). Each
    block is centered to zero mean within the image before scaling, so
    cosines between features span the full range instead of sitting on the
    all-positive floor raw histograms would give; chromatic blocks get the
    largest scale.
    """

    name = "palette"
    dim = PALETTE_DIM
    logit_scale = PALETTE_LOGIT_SCALE
    native_size = PALETTE_NATIVE

    def encode_image(self, img: Image.Image) -> np.ndarray:
        raster = img.convert("RGB").resize(
            (self.native_size, self.native_size), Image.BILINEAR
        )
        rgb = np.asarray(raster, dtype=np.float64) / 255.0
        r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]

        mx = rgb.max(axis=2)
        mn = rgb.min(axis=2)
        delta = mx - mn
        sat = np.where(mx > 0.0, delta / np.maximum(mx, 1e-12), 0.0)

        hue = np.zeros_like(mx)
        safe = delta > 1e-12
        d = np.where(safe, delta, 1.0)
        is_r = safe & (mx == r)
        is_g = safe & ~is_r & (mx == g)
        is_b = safe & ~is_r & ~is_g
        hue[is_r] = np.mod((g - b)[is_r] / d[is_r], 6.0)
        hue[is_g] = (b - r)[is_g] / d[is_g] + 2.0
        hue[is_b] = (r - g)[is_b] / d[is_b] + 4.0
        hue *= 60.0

        # soft assignment across 24 hue bins, weighted by saturation
        bins = 24
        pos = hue / (360.0 / bins)
        lo = np.floor(pos).astype(int) % bins
        frac = pos - np.floor(pos)
        hue_hist = np.zeros(bins)
        np.add.at(hue_hist, lo.ravel(), (sat * (1.0 - frac)).ravel())
        np.add.at(hue_hist, ((lo + 1) % bins).ravel(), (sat * frac).ravel())
        total = hue_hist.sum()
        if total > 0.0:
            hue_hist /= total

        sat_hist, _ = np.histogram(sat, bins=4, range=(0.0, 1.0))
        sat_hist = sat_hist / sat.size

        luma = 0.299 * r + 0.587 * g + 0.114 * b
        rgb_grid = np.stack([_grid_means(c, 2) for c in (r, g, b)]).ravel()
        luma_grid = _grid_means(luma, 4).ravel()

        gx = np.abs(np.diff(luma, axis=1)).mean(axis=1)
        gy = np.abs(np.diff(luma, axis=0)).mean(axis=0)
        grad = np.concatenate([
            gx.reshape(4, -1).mean(axis=1),
            gy.reshape(4, -1).mean(axis=1),
        ])

        def centered(block):
            return block - block.mean()

        feat = np.concatenate([
            2.0 * centered(hue_hist),
            1.0 * centered(sat_hist),
            0.5 * centered(rgb_grid),
            0.5 * centered(luma_grid),
            2.0 * centered(grad),
        ])
        assert feat.shape == (self.dim,)
        return _unit(feat)

    def encode_text(self, prompt: str) -> np.ndarray:
        desc = find_descriptor(prompt)
        if desc is None:
            raise TemplateError(
                f"no class descriptor found in prompt {prompt!r}; expected a "
                "token like flora-h210-p5"
            )
        hue, petals = desc
        feat = self.encode_image(render_canonical(hue, petals))
        digest = hashlib.blake2b(prompt.encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        feat = feat + TEMPLATE_JITTER * rng.standard_normal(self.dim)
        return _unit(feat)


class ClipEncoder:
    """Contrastive vision-language checkpoint via transformers, if present.

    Construction fails with EncoderUnavailable when torch, transformers, or
    the local weights are missing; callers treat that as "use another
    backend", tests skip.
    """

    name = "clip"
    native_size = 224

    def __init__(self, model_id: str = "openai/clip-vit-base-patch16"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor

            self._torch = torch
            self._model = CLIPModel.from_pretrained(model_id, local_files_only=True)
            self._model.eval()
            self._processor = CLIPProcessor.from_pretrained(
                model_id, local_files_only=True
            )
        except Exception as exc:  # any missing piece means the same thing here
            raise EncoderUnavailable(
                f"clip backend unavailable ({type(exc).__name__}: {exc})"
            ) from exc
        self.name = f"clip:{model_id}"
        self.dim = int(self._model.config.projection_dim)
        self.logit_scale = float(self._model.logit_scale.exp().item())

    def encode_image(self, img: Image.Image) -> np.ndarray:
        with self._torch.no_grad():
            inputs = self._processor(images=img.convert("RGB"), return_tensors="pt")
            feat = self._model.get_image_features(**inputs)[0]
        return _unit(feat.double().cpu().numpy())

    def encode_text(self, prompt: str) -> np.ndarray:
        with self._torch.no_grad():
            inputs = self._processor(
                text=[prompt], return_tensors="pt", padding=True, truncation=True
            )
            feat = self._model.get_text_features(**inputs)[0]
        return _unit(feat.double().cpu().numpy())


def get_encoder(spec: str) -> Encoder:
    """Build an encoder from its id: "palette", "clip", or "clip:<model>"."""
    if spec == "palette":
        return PaletteEncoder()
    if spec == "clip":
        return ClipEncoder()
    if spec.startswith("clip:"):
        return ClipEncoder(spec.split(":", 1)[1])
    raise EncoderUnavailable(f"unknown encoder {spec!r}")
