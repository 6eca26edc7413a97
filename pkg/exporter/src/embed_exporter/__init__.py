"""Image and text embedding export in the adaptation engine's bundle layout."""

from .augment import random_resized_crop
from .datasets import ImageItem, scan_image_folder
from .encoders import ClipEncoder, Encoder, PaletteEncoder, get_encoder
from .errors import (
    DatasetLayoutError,
    EncoderUnavailable,
    ExportError,
    LayoutViolation,
    MissingTemplate,
    TemplateError,
)
from .export import (
    ExportJob,
    ExportSummary,
    export_bundle,
    export_images,
    export_text,
    load_templates_general,
    load_templates_specific,
    zero_shot_accuracy,
)
from .writer import (
    BundleMeta,
    read_export,
    samples_bin_size,
    write_export,
)

__version__ = "0.1.0"

__all__ = [
    "BundleMeta",
    "ClipEncoder",
    "DatasetLayoutError",
    "Encoder",
    "EncoderUnavailable",
    "ExportError",
    "ExportJob",
    "ExportSummary",
    "ImageItem",
    "LayoutViolation",
    "MissingTemplate",
    "PaletteEncoder",
    "TemplateError",
    "export_bundle",
    "export_images",
    "export_text",
    "get_encoder",
    "load_templates_general",
    "load_templates_specific",
    "random_resized_crop",
    "read_export",
    "samples_bin_size",
    "scan_image_folder",
    "write_export",
    "zero_shot_accuracy",
]
