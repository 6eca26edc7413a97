"""Embedding-bundle disk format and deterministic synthetic fixtures.

A bundle is a directory of four files:

  manifest.json   version, counts, logit_scale, class names, provenance
  text_gen.f32    C x D float32 little-endian row-major (general templates)
  text_spe.f32    C x D float32 little-endian row-major (specific templates)
  samples.bin     magic "D2TB" + u32 version + u32 num_samples + u32 N
                  + u32 D, then per sample: u32 label + N*D float32 LE
                  (row 0 = the original un-augmented view)

All integers and floats are little-endian. Storage is single precision;
everything read is widened to float64 exactly, never normalized.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import asdict, dataclass
from typing import Iterator

import numpy as np

from .errors import BundleCorrupt, VersionMismatch
from .numerics import normalize_rows

MAGIC = b"D2TB"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")

MANIFEST_NAME = "manifest.json"
TEXT_GEN_NAME = "text_gen.f32"
TEXT_SPE_NAME = "text_spe.f32"
SAMPLES_NAME = "samples.bin"

# Fixture recipe constants, calibrated once on the standard fixture
# (seed 42, C=10, D=32, N=16, 200 samples, shift 0.6, noise 0.3) and pinned.
ANCHOR_MIX = 0.10  # ring mixing, adjacent-class anchor correlation ~0.2
TEXT_JITTER = 0.05
FIXTURE_LOGIT_SCALE = 12.0


@dataclass(frozen=True)
class SampleRecord:
    view_features: np.ndarray  # (N, D), row 0 = original view
    label: int


@dataclass(frozen=True)
class BundleManifest:
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
    """Exact byte size of samples.bin: header + per-sample label and floats."""
    return _HEADER.size + num_samples * (4 + 4 * num_views * dim)


def write_bundle(
    manifest: BundleManifest,
    text_gen: np.ndarray,
    text_spe: np.ndarray,
    samples: list[SampleRecord],
    out_dir,
) -> None:
    c, d, n = manifest.num_classes, manifest.dim, manifest.num_views
    for name, arr in (("text_gen", text_gen), ("text_spe", text_spe)):
        if arr.shape != (c, d):
            raise ValueError(f"{name} shape {arr.shape}, expected {(c, d)}")
    if len(samples) != manifest.num_samples:
        raise ValueError(
            f"{len(samples)} samples for manifest num_samples={manifest.num_samples}"
        )
    if not samples:
        raise ValueError("a bundle must hold at least one sample")
    for i, rec in enumerate(samples):
        if rec.view_features.shape != (n, d):
            raise ValueError(
                f"sample {i} views shape {rec.view_features.shape}, expected {(n, d)}"
            )
        if not 0 <= rec.label < c:
            raise ValueError(f"sample {i} label {rec.label} outside [0, {c})")

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="utf-8") as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
        f.write("\n")
    for name, arr in ((TEXT_GEN_NAME, text_gen), (TEXT_SPE_NAME, text_spe)):
        with open(os.path.join(out_dir, name), "wb") as f:
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    with open(os.path.join(out_dir, SAMPLES_NAME), "wb") as f:
        f.write(_HEADER.pack(MAGIC, manifest.version, manifest.num_samples, n, d))
        for rec in samples:
            f.write(struct.pack("<I", rec.label))
            f.write(np.ascontiguousarray(rec.view_features, dtype="<f4").tobytes())


def _read_text_matrix(path, c: int, d: int) -> np.ndarray:
    expected = c * d * 4
    actual = os.path.getsize(path)
    if actual != expected:
        raise BundleCorrupt(
            f"{path}: expected {expected} bytes for {c}x{d} float32, found {actual}"
        )
    with open(path, "rb") as f:
        data = f.read()
    return np.frombuffer(data, dtype="<f4").reshape(c, d).astype(np.float64)


def read_bundle(
    bundle_dir,
) -> tuple[BundleManifest, tuple[np.ndarray, np.ndarray], Iterator[SampleRecord]]:
    """Open a bundle directory; the third element streams SampleRecords lazily."""
    man_path = os.path.join(bundle_dir, MANIFEST_NAME)
    try:
        with open(man_path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise BundleCorrupt(f"missing {man_path}") from None
    except json.JSONDecodeError as exc:
        raise BundleCorrupt(f"{man_path}: invalid JSON ({exc})") from None
    try:
        manifest = BundleManifest(**doc)
    except (TypeError, ValueError) as exc:
        raise BundleCorrupt(f"{man_path}: {exc}") from None
    if manifest.version != VERSION:
        raise VersionMismatch(
            f"bundle version {manifest.version}, reader supports {VERSION}"
        )

    c, d, n, s = manifest.num_classes, manifest.dim, manifest.num_views, manifest.num_samples
    text_gen = _read_text_matrix(os.path.join(bundle_dir, TEXT_GEN_NAME), c, d)
    text_spe = _read_text_matrix(os.path.join(bundle_dir, TEXT_SPE_NAME), c, d)

    samples_path = os.path.join(bundle_dir, SAMPLES_NAME)
    expected = samples_bin_size(s, n, d)
    actual = os.path.getsize(samples_path)
    if actual != expected:
        raise BundleCorrupt(
            f"{samples_path}: expected {expected} bytes, found {actual}"
        )
    with open(samples_path, "rb") as f:
        header = f.read(_HEADER.size)
    magic, version, hs, hn, hd = _HEADER.unpack(header)
    if magic != MAGIC:
        raise BundleCorrupt(f"{samples_path}: bad magic {magic!r} at offset 0")
    if version != VERSION:
        raise VersionMismatch(
            f"{samples_path}: version {version}, reader supports {VERSION}"
        )
    if (hs, hn, hd) != (s, n, d):
        raise BundleCorrupt(
            f"{samples_path}: header (samples={hs}, views={hn}, dim={hd}) "
            f"does not match manifest (samples={s}, views={n}, dim={d})"
        )

    def stream() -> Iterator[SampleRecord]:
        record_floats = n * d * 4
        with open(samples_path, "rb") as f:
            f.seek(_HEADER.size)
            offset = _HEADER.size
            for i in range(s):
                raw = f.read(4 + record_floats)
                if len(raw) != 4 + record_floats:
                    raise BundleCorrupt(
                        f"{samples_path}: sample {i} truncated at offset {offset}"
                    )
                (label,) = struct.unpack_from("<I", raw, 0)
                if label >= c:
                    raise BundleCorrupt(
                        f"{samples_path}: sample {i} label {label} >= {c} "
                        f"at offset {offset}"
                    )
                views = (
                    np.frombuffer(raw, dtype="<f4", count=n * d, offset=4)
                    .reshape(n, d)
                    .astype(np.float64)
                )
                offset += 4 + record_floats
                yield SampleRecord(view_features=views, label=int(label))

    return manifest, (text_gen, text_spe), stream()


def synth_fixture(
    seed: int,
    classes: int = 10,
    dim: int = 32,
    views: int = 16,
    samples: int = 200,
    shift: float = 0.6,
    noise: float = 0.3,
) -> tuple[BundleManifest, np.ndarray, np.ndarray, list[SampleRecord]]:
    """Deterministic synthetic bundle with a recoverable per-class drift.

    Class anchors sit on a lightly correlated ring; every view of class c
    drifts by `shift` toward the next class's anchor plus isotropic noise of
    norm `noise`, then is renormalized. The drift misleads text-side cosine
    scores but is class-consistent, so visual-evidence retrieval can undo it.
    """
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    if dim < classes:
        raise ValueError(f"dim {dim} < classes {classes}: anchors would collide")
    rng = np.random.default_rng(seed)

    basis, _ = np.linalg.qr(rng.standard_normal((dim, classes)))
    basis = basis.T  # (C, D) orthonormal rows
    anchors = basis + ANCHOR_MIX * (np.roll(basis, -1, axis=0) + np.roll(basis, 1, axis=0))
    anchors, _ = normalize_rows(anchors)

    text_gen = anchors + TEXT_JITTER * rng.standard_normal((classes, dim))
    text_spe = anchors + TEXT_JITTER * rng.standard_normal((classes, dim))

    bias, _ = normalize_rows(np.roll(anchors, -1, axis=0) - anchors)

    records = []
    for i in range(samples):
        label = i % classes
        eps, _ = normalize_rows(rng.standard_normal((views, dim)))
        raw = anchors[label][None, :] + shift * bias[label][None, :] + noise * eps
        feats, _ = normalize_rows(raw)
        records.append(SampleRecord(view_features=feats, label=label))

    manifest = BundleManifest(
        version=VERSION,
        num_samples=samples,
        num_views=views,
        num_classes=classes,
        dim=dim,
        logit_scale=FIXTURE_LOGIT_SCALE,
        class_names=[f"class_{i:02d}" for i in range(classes)],
        provenance=(
            f"synthetic seed={seed} classes={classes} dim={dim} views={views} "
            f"samples={samples} shift={shift} noise={noise}"
        ),
    )
    return manifest, text_gen, text_spe, records
