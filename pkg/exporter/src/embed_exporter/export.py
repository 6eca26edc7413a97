"""Export orchestration: templates to text rows, images to sample records.

The exporter walks an image folder in deterministic order, embeds each
original image plus N-1 seeded random-resized-crop views, averages
per-template normalized text embeddings within each template kind, writes
the bundle byte layout, re-reads its own bytes as a self check, and reports
the zero-shot accuracy it computes in-process over the written (float32)
values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .augment import SCALE_RANGE, random_resized_crop
from .datasets import ImageItem, scan_image_folder
from .encoders import Encoder, get_encoder
from .errors import DatasetLayoutError, MissingTemplate, TemplateError
from .writer import BundleMeta, read_export, write_export

log = logging.getLogger(__name__)

__version__ = "0.1.0"


@dataclass(frozen=True)
class ExportJob:
    dataset: str | Path
    out: str | Path
    templates_general: list[str]
    templates_specific: dict[str, list[str]]
    split: str | None = None
    encoder: str = "palette"
    views: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.views < 1:
            raise ValueError(f"views must be >= 1, got {self.views}")
        if not self.templates_general:
            raise ValueError("at least one general template is required")


@dataclass
class ExportSummary:
    out_dir: Path
    num_samples: int
    num_views: int
    num_classes: int
    dim: int
    logit_scale: float
    skipped: list[str] = field(default_factory=list)
    zero_shot_accuracy: float = 0.0


def load_templates_general(path: str | Path) -> list[str]:
    """One template per line, each with a {} slot for the class name."""
    lines = [
        ln.strip()
        for ln in Path(path).read_text(encoding="utf-8").splitlines()
        if ln.strip() and not ln.strip().startswith("#")
    ]
    for ln in lines:
        if "{}" not in ln:
            raise TemplateError(f"general template missing {{}} slot: {ln!r}")
    if not lines:
        raise TemplateError(f"no templates in {path}")
    return lines


def load_templates_specific(path: str | Path) -> dict[str, list[str]]:
    """JSON object mapping class name to its template list."""
    import json

    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or not all(
        isinstance(v, list) and all(isinstance(t, str) for t in v)
        for v in doc.values()
    ):
        raise TemplateError(f"{path} must map class names to lists of strings")
    return doc


def check_coverage(class_names: list[str], specific: dict[str, list[str]]) -> None:
    for name in class_names:
        if not specific.get(name):
            raise MissingTemplate(f"class {name!r} has no class-specific template")


def _text_rows(
    encoder: Encoder, class_names: list[str], templates_for
) -> np.ndarray:
    """Per class: L2-normalize each template embedding, then average them."""
    rows = np.zeros((len(class_names), encoder.dim))
    for c, name in enumerate(class_names):
        embs = [encoder.encode_text(t.format(name)) for t in templates_for(name)]
        rows[c] = np.mean(embs, axis=0)
    return rows


def export_text(
    job: ExportJob, encoder: Encoder, class_names: list[str]
) -> tuple[np.ndarray, np.ndarray]:
    check_coverage(class_names, job.templates_specific)
    gen = _text_rows(encoder, class_names, lambda name: job.templates_general)
    spe = _text_rows(encoder, class_names, lambda name: job.templates_specific[name])
    return gen, spe


def export_images(
    job: ExportJob, encoder: Encoder, items: list[ImageItem]
) -> tuple[list[tuple[int, np.ndarray]], list[str]]:
    """Embed every readable image: row 0 original, rows 1..N-1 seeded crops.

    Decode failures are logged and skipped; each item's crop stream is seeded
    by (job.seed, scan index), so skips do not shift later samples.
    """
    samples: list[tuple[int, np.ndarray]] = []
    skipped: list[str] = []
    for idx, item in enumerate(items):
        try:
            with Image.open(item.path) as img:
                img = img.convert("RGB")
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            log.warning("skipping %s: %s", item.path, exc)
            skipped.append(item.path.name)
            continue
        rng = np.random.default_rng([job.seed, idx])
        views = np.zeros((job.views, encoder.dim))
        views[0] = encoder.encode_image(img)
        for v in range(1, job.views):
            crop = random_resized_crop(img, rng, encoder.native_size)
            views[v] = encoder.encode_image(crop)
        samples.append((item.label, views))
    return samples, skipped


def zero_shot_accuracy(
    text_gen: np.ndarray,
    text_spe: np.ndarray,
    samples: list[tuple[int, np.ndarray]],
) -> float:
    """Original-view argmax accuracy (percent) over averaged text prototypes.

    Computed with the same normalize-then-cosine arithmetic the engine
    applies to the same stored float32 values, so the number is comparable
    down to the last bit.
    """
    protos = 0.5 * (text_gen + text_spe)
    phat = protos / np.linalg.norm(protos, axis=1, keepdims=True)
    correct = 0
    for label, views in samples:
        zhat = views / np.linalg.norm(views, axis=1, keepdims=True)
        logits = zhat @ phat.T
        correct += int(np.argmax(logits[0])) == label
    return 100.0 * correct / len(samples)


def export_bundle(job: ExportJob) -> ExportSummary:
    """Run the full export and verify the written bytes before returning."""
    class_names, items = scan_image_folder(job.dataset, job.split)
    encoder = get_encoder(job.encoder)
    text_gen, text_spe = export_text(job, encoder, class_names)
    samples, skipped = export_images(job, encoder, items)
    if not samples:
        raise DatasetLayoutError("every image failed to decode; nothing to export")

    note = ""
    if skipped:
        shown = ",".join(skipped[:5]) + ("..." if len(skipped) > 5 else "")
        note = f" skipped={len(skipped)}:{shown}"
    provenance = (
        f"embed-exporter {__version__} encoder={encoder.name} dataset={job.dataset}"
        f" split={job.split or '-'} views={job.views} seed={job.seed}"
        f" crop_scale={SCALE_RANGE[0]}-{SCALE_RANGE[1]}"
        f" text=per-template-normalized-then-averaged{note}"
    )
    meta = BundleMeta(
        version=1,
        num_samples=len(samples),
        num_views=job.views,
        num_classes=len(class_names),
        dim=encoder.dim,
        logit_scale=encoder.logit_scale,
        class_names=class_names,
        provenance=provenance,
    )
    write_export(job.out, meta, text_gen, text_spe, samples)

    # self check: the bytes on disk, not the arrays in memory, are the product
    meta_rt, gen_rt, spe_rt, samples_rt = read_export(job.out)
    acc = zero_shot_accuracy(gen_rt, spe_rt, samples_rt)
    return ExportSummary(
        out_dir=Path(job.out),
        num_samples=meta_rt.num_samples,
        num_views=meta_rt.num_views,
        num_classes=meta_rt.num_classes,
        dim=meta_rt.dim,
        logit_scale=meta_rt.logit_scale,
        skipped=skipped,
        zero_shot_accuracy=acc,
    )
