"""Exception hierarchy shared across the package."""


class QntkError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(QntkError, ValueError):
    """A dimension argument is zero, negative, or otherwise unusable."""


class ShapeMismatchError(QntkError, ValueError):
    """Operands have incompatible shapes."""


class UnsupportedRepresentationError(QntkError, ValueError):
    """An observable lacks the representation an operation requires."""


class DegenerateSpectrumError(QntkError, ValueError):
    """A spectrum with repeated eigenvalues where distinct ones are required."""


class BoundaryError(QntkError, ValueError):
    """Evaluation requested exactly at an eigenvalue of the spectrum."""


class ContractViolationError(QntkError, RuntimeError):
    """A numerical contract (symmetry, positive semidefiniteness, ...) failed."""


class DivergenceError(ContractViolationError):
    """Gradient descent diverged; the step size is too large."""


class ConfigError(QntkError, ValueError):
    """An experiment configuration is malformed."""
