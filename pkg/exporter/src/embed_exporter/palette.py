"""Procedural flower images with a parseable class-name grammar.

Class names follow ``flora-h<HHH>-p<P>`` where HHH is a base hue in degrees
and P a petal count. The canonical renderer draws the noise-free prototype
for a descriptor; the variant renderer adds seeded jitter (hue, geometry,
pixel noise, and an optional global warmth shift) to make dataset images.
The palette text encoder rasterizes the descriptor it finds in a prompt with
the same canonical renderer, which is what ties the two modalities together
without any learned weights.
"""

from __future__ import annotations

import colorsys
import re
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

DESCRIPTOR_RE = re.compile(r"flora-h(\d{3})-p(\d+)")

CANVAS = 64  # rendered image side in pixels


def class_name(hue_deg: int, petals: int) -> str:
    return f"flora-h{hue_deg % 360:03d}-p{petals}"


def parse_descriptor(token: str) -> tuple[int, int] | None:
    m = DESCRIPTOR_RE.fullmatch(token)
    if m is None:
        return None
    return int(m.group(1)) % 360, int(m.group(2))


def find_descriptor(text: str) -> tuple[int, int] | None:
    """First descriptor occurring anywhere in a prompt string."""
    m = DESCRIPTOR_RE.search(text)
    if m is None:
        return None
    return int(m.group(1)) % 360, int(m.group(2))


def _hsv255(h_deg: float, s: float, v: float) -> tuple[int, int, int]:
    r, g, b = colorsys.hsv_to_rgb((h_deg % 360.0) / 360.0, s, v)
    return int(round(255 * r)), int(round(255 * g)), int(round(255 * b))


def _petal_polygon(cx, cy, angle, radius, width, length, steps=24):
    pts = []
    px = cx + radius * np.cos(angle)
    py = cy + radius * np.sin(angle)
    for t in np.linspace(0.0, 2.0 * np.pi, steps, endpoint=False):
        x = length * np.cos(t)
        y = width * np.sin(t)
        rx = x * np.cos(angle) - y * np.sin(angle)
        ry = x * np.sin(angle) + y * np.cos(angle)
        pts.append((px + rx, py + ry))
    return pts


def render_flower(
    hue_deg: float,
    petals: int,
    size: int = CANVAS,
    rotation: float = 0.0,
    geom: float = 1.0,
    center_shift: tuple[float, float] = (0.0, 0.0),
    background_v: float = 0.18,
) -> Image.Image:
    """Shared drawing routine; canonical images use the default jitters."""
    img = Image.new("RGB", (size, size), _hsv255(hue_deg + 180.0, 0.35, background_v))
    draw = ImageDraw.Draw(img)
    cx = size / 2.0 + center_shift[0]
    cy = size / 2.0 + center_shift[1]
    radius = 0.24 * size * geom
    length = 0.30 * size * geom
    width = 0.13 * size * geom
    for k in range(petals):
        angle = rotation + 2.0 * np.pi * k / petals
        draw.polygon(
            _petal_polygon(cx, cy, angle, radius, width, length),
            fill=_hsv255(hue_deg, 0.85, 0.92),
        )
    r0 = 0.11 * size * geom
    draw.ellipse(
        (cx - r0, cy - r0, cx + r0, cy + r0),
        fill=_hsv255(hue_deg + 35.0, 0.70, 0.98),
    )
    return img


def render_canonical(hue_deg: int, petals: int, size: int = CANVAS) -> Image.Image:
    return render_flower(float(hue_deg), petals, size=size)


def render_variant(
    hue_deg: int,
    petals: int,
    rng: np.random.Generator,
    size: int = CANVAS,
    hue_jitter: float = 2.0,
    geom_jitter: float = 0.10,
    noise: float = 6.0,
    warmth: float = 0.0,
) -> Image.Image:
    """One dataset image: jittered render plus pixel noise and warmth shift.

    warmth moves every pixel toward red and away from blue by the same
    amount, a global color-temperature change that is class-consistent.
    hue_jitter stays small relative to the hue spacing between classes so
    that per-image variation is mostly orthogonal to class identity.
    """
    img = render_flower(
        float(hue_deg) + float(rng.normal(0.0, hue_jitter)),
        petals,
        size=size,
        rotation=float(rng.uniform(0.0, 2.0 * np.pi / max(petals, 1))),
        geom=float(1.0 + rng.uniform(-geom_jitter, geom_jitter)),
        center_shift=(float(rng.uniform(-2.5, 2.5)), float(rng.uniform(-2.5, 2.5))),
        background_v=float(np.clip(0.18 + rng.normal(0.0, 0.03), 0.05, 0.5)),
    )
    arr = np.asarray(img, dtype=np.float64)
    arr = arr + rng.normal(0.0, noise, size=arr.shape)
    arr[..., 0] += warmth
    arr[..., 2] -= warmth
    return Image.fromarray(np.clip(arr, 0.0, 255.0).astype(np.uint8))


def standard_classes(num_classes: int = 30) -> list[str]:
    """Evenly spaced hues with cycling petal counts; sorted name order."""
    hues = [round(i * 360.0 / num_classes) % 360 for i in range(num_classes)]
    return sorted(class_name(h, 4 + i % 5) for i, h in enumerate(hues))


def make_image_folder(
    root: str | Path,
    num_classes: int = 30,
    per_class: int = 17,
    seed: int = 0,
    warmth: float = 0.0,
    hue_jitter: float = 2.0,
    noise: float = 6.0,
) -> list[str]:
    """Render a deterministic image-folder dataset; returns the class names."""
    root = Path(root)
    names = standard_classes(num_classes)
    for ci, name in enumerate(names):
        hue, petals = parse_descriptor(name)
        class_dir = root / name
        class_dir.mkdir(parents=True, exist_ok=True)
        for j in range(per_class):
            rng = np.random.default_rng([seed, ci, j])
            img = render_variant(hue, petals, rng, hue_jitter=hue_jitter,
                                 noise=noise, warmth=warmth)
            img.save(class_dir / f"img_{j:03d}.png")
    return names
