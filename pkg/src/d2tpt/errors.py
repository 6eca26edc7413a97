"""Typed failure modes raised by the engine instead of propagating NaNs."""


class EngineError(Exception):
    """Base class for every error the engine raises on purpose."""


class NonFiniteInput(EngineError):
    """NaN or Inf reached an operation that only accepts finite values."""


class DegenerateVector(EngineError):
    """A vector with (near-)zero norm reached a normalization step."""


class NotADistribution(EngineError):
    """A vector expected to be a probability distribution is not one."""


class ShapeMismatch(EngineError):
    """Operand shapes are inconsistent with each other."""


class EmptyKnowledgeBase(EngineError):
    """No usable register entries are available for retrieval."""


class BundleCorrupt(EngineError):
    """An embedding bundle failed a structural or size check."""


class VersionMismatch(BundleCorrupt):
    """Bundle version differs from the version this build supports."""
