"""Seeded random-resized-crop augmentation."""

from __future__ import annotations

import math

import numpy as np
from PIL import Image

SCALE_RANGE = (0.5, 1.0)
RATIO_RANGE = (3.0 / 4.0, 4.0 / 3.0)


def random_resized_crop(
    img: Image.Image,
    rng: np.random.Generator,
    out_size: int,
    scale: tuple[float, float] = SCALE_RANGE,
    ratio: tuple[float, float] = RATIO_RANGE,
) -> Image.Image:
    """Crop a random area/aspect window and resize it to out_size square.

    Ten rejection-sampling attempts over area in ``scale`` times the image
    area and log-uniform aspect in ``ratio``; falls back to the largest
    centered window with an in-range aspect when none fits. All randomness
    comes from the caller's generator, so a seeded generator makes the crop
    sequence reproducible.
    """
    width, height = img.size
    area = float(width * height)
    log_lo, log_hi = math.log(ratio[0]), math.log(ratio[1])

    for _ in range(10):
        target = area * float(rng.uniform(scale[0], scale[1]))
        aspect = math.exp(float(rng.uniform(log_lo, log_hi)))
        w = int(round(math.sqrt(target * aspect)))
        h = int(round(math.sqrt(target / aspect)))
        if 0 < w <= width and 0 < h <= height:
            left = int(rng.integers(0, width - w + 1))
            top = int(rng.integers(0, height - h + 1))
            box = (left, top, left + w, top + h)
            return img.crop(box).resize((out_size, out_size), Image.BILINEAR)

    # center fallback, aspect clamped into range
    in_ratio = width / height
    if in_ratio < ratio[0]:
        w, h = width, int(round(width / ratio[0]))
    elif in_ratio > ratio[1]:
        w, h = int(round(height * ratio[1])), height
    else:
        w, h = width, height
    left = (width - w) // 2
    top = (height - h) // 2
    box = (left, top, left + w, top + h)
    return img.crop(box).resize((out_size, out_size), Image.BILINEAR)
