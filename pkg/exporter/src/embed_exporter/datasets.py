"""Image-folder dataset scanning: one subdirectory per class."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetLayoutError

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


@dataclass(frozen=True)
class ImageItem:
    path: Path
    label: int
    class_name: str


def scan_image_folder(
    root: str | Path, split: str | None = None
) -> tuple[list[str], list[ImageItem]]:
    """Enumerate class subdirectories and their images in sorted order.

    Labels are indices into the sorted class-name list, which is the same
    ordering the bundle manifest records.
    """
    base = Path(root)
    if split:
        base = base / split
    if not base.is_dir():
        raise DatasetLayoutError(f"dataset directory not found: {base}")

    class_names = sorted(p.name for p in base.iterdir() if p.is_dir())
    if not class_names:
        raise DatasetLayoutError(f"no class subdirectories under {base}")

    items: list[ImageItem] = []
    for label, name in enumerate(class_names):
        files = sorted(
            p for p in (base / name).iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
        )
        items.extend(ImageItem(path=p, label=label, class_name=name) for p in files)
    if not items:
        raise DatasetLayoutError(f"no images with known extensions under {base}")
    return class_names, items
