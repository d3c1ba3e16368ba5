"""Exception types shared across the package."""


class PdlqrError(Exception):
    """Base class for all library-specific failures."""


class DimensionError(PdlqrError, ValueError):
    """Operands have incompatible or malformed shapes."""


class SymmetryError(PdlqrError, ValueError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class DomainError(PdlqrError, ValueError):
    """A scalar argument lies outside its admissible range."""


class StabilityError(PdlqrError):
    """The feedback gain does not stabilize the closed loop."""


class ConvergenceError(PdlqrError):
    """An iterative solver exhausted its budget without converging."""


class StabilizabilityError(ConvergenceError):
    """The Riccati iteration diverged; the pair (A, B) looks unstabilizable."""


class InformativityError(PdlqrError):
    """The regression data do not pin down the unknown parameters."""


class AccuracyError(PdlqrError):
    """An estimate is too inaccurate for the requested update to be safe."""


class DatasetFormatError(PdlqrError, ValueError):
    """A dataset file is malformed or inconsistent with its metadata."""


class ConfigError(PdlqrError, ValueError):
    """An experiment configuration is missing, malformed, or inconsistent."""
