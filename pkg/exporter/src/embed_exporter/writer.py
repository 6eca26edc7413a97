"""Bundle byte layout: independent writer and self-check reader.

This module implements the on-disk contract the adaptation engine consumes,
on purpose without importing the engine: the two packages meet only at the
bytes. A bundle directory holds

  manifest.json   version, counts, logit_scale, class names, provenance
  text_gen.f32    C x D float32 little-endian row-major
  text_spe.f32    C x D float32 little-endian row-major
  samples.bin     magic "D2TB" + u32 version + u32 num_samples + u32 N
                  + u32 D, then per sample: u32 label + N*D float32 LE

so samples.bin is exactly 20 + S * (4 + 4 * N * D) bytes. The manifest is
serialized with sorted keys and two-space indentation, matching the engine's
own writer byte for byte on equal content.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import LayoutViolation

MAGIC = b"D2TB"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")

MANIFEST_NAME = "manifest.json"
TEXT_GEN_NAME = "text_gen.f32"
TEXT_SPE_NAME = "text_spe.f32"
SAMPLES_NAME = "samples.bin"


@dataclass(frozen=True)
class BundleMeta:
    version: int
    num_samples: int
    num_views: int
    num_classes: int
    dim: int
    logit_scale: float
    class_names: list[str]
    provenance: str

    def __post_init__(self):
        for name in ("num_samples", "num_views", "num_classes", "dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)!r}")
        if not self.logit_scale > 0:
            raise ValueError(f"logit_scale must be > 0, got {self.logit_scale!r}")
        if len(self.class_names) != self.num_classes:
            raise ValueError(
                f"{len(self.class_names)} class names for {self.num_classes} classes"
            )


def samples_bin_size(num_samples: int, num_views: int, dim: int) -> int:
    return _HEADER.size + num_samples * (4 + 4 * num_views * dim)


def write_export(
    out_dir: str | Path,
    meta: BundleMeta,
    text_gen: np.ndarray,
    text_spe: np.ndarray,
    samples: list[tuple[int, np.ndarray]],
) -> None:
    """Write the four bundle files; samples are (label, N x D views) pairs."""
    c, d, n = meta.num_classes, meta.dim, meta.num_views
    for name, arr in (("text_gen", text_gen), ("text_spe", text_spe)):
        if arr.shape != (c, d):
            raise ValueError(f"{name} shape {arr.shape}, expected {(c, d)}")
    if len(samples) != meta.num_samples:
        raise ValueError(
            f"{len(samples)} samples for manifest num_samples={meta.num_samples}"
        )
    for i, (label, views) in enumerate(samples):
        if views.shape != (n, d):
            raise ValueError(f"sample {i} views shape {views.shape}, expected {(n, d)}")
        if not 0 <= label < c:
            raise ValueError(f"sample {i} label {label} outside [0, {c})")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / MANIFEST_NAME, "w", encoding="utf-8") as f:
        json.dump(asdict(meta), f, indent=2, sort_keys=True)
        f.write("\n")
    for name, arr in ((TEXT_GEN_NAME, text_gen), (TEXT_SPE_NAME, text_spe)):
        with open(out / name, "wb") as f:
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    with open(out / SAMPLES_NAME, "wb") as f:
        f.write(_HEADER.pack(MAGIC, meta.version, meta.num_samples, n, d))
        for label, views in samples:
            f.write(struct.pack("<I", label))
            f.write(np.ascontiguousarray(views, dtype="<f4").tobytes())


def read_export(out_dir: str | Path):
    """Re-read a written bundle for the post-export self check.

    Returns (meta, text_gen, text_spe, samples) with float64 arrays widened
    from the stored float32, exactly as the consuming engine sees them.
    """
    out = Path(out_dir)
    manifest_path = out / MANIFEST_NAME
    if not manifest_path.is_file():
        raise LayoutViolation(f"missing {manifest_path}")
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
        meta = BundleMeta(**doc)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise LayoutViolation(f"bad manifest: {exc}") from exc

    c, d, n, s = meta.num_classes, meta.dim, meta.num_views, meta.num_samples

    def read_text(name):
        blob = (out / name).read_bytes()
        if len(blob) != 4 * c * d:
            raise LayoutViolation(
                f"{name}: expected {4 * c * d} bytes for {c}x{d} float32, "
                f"found {len(blob)}"
            )
        return np.frombuffer(blob, dtype="<f4").reshape(c, d).astype(np.float64)

    text_gen = read_text(TEXT_GEN_NAME)
    text_spe = read_text(TEXT_SPE_NAME)

    blob = (out / SAMPLES_NAME).read_bytes()
    want = samples_bin_size(s, n, d)
    if len(blob) != want:
        raise LayoutViolation(
            f"{SAMPLES_NAME}: expected {want} bytes, found {len(blob)}"
        )
    magic, version, s2, n2, d2 = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise LayoutViolation(f"bad magic {magic!r} at offset 0")
    if version != meta.version:
        raise LayoutViolation(f"header version {version} != manifest {meta.version}")
    if (s2, n2, d2) != (s, n, d):
        raise LayoutViolation(
            f"header counts {(s2, n2, d2)} disagree with manifest {(s, n, d)}"
        )

    samples = []
    offset = _HEADER.size
    record = 4 + 4 * n * d
    for i in range(s):
        (label,) = struct.unpack_from("<I", blob, offset)
        if label >= c:
            raise LayoutViolation(f"sample {i}: label {label} at offset {offset}")
        views = (
            np.frombuffer(blob, dtype="<f4", count=n * d, offset=offset + 4)
            .reshape(n, d)
            .astype(np.float64)
        )
        samples.append((int(label), views))
        offset += record
    return meta, text_gen, text_spe, samples
