"""Typed failures for the export pipeline."""


class ExportError(Exception):
    """Base class for everything this package raises on purpose."""


class MissingTemplate(ExportError):
    """A class has no template of the required kind."""


class TemplateError(ExportError):
    """A template line is malformed or cannot be encoded."""


class DatasetLayoutError(ExportError):
    """The dataset directory does not look like an image folder."""


class EncoderUnavailable(ExportError):
    """The requested encoder backend cannot be constructed here."""


class LayoutViolation(ExportError):
    """Written bytes failed the post-export self check."""
