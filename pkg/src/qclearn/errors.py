"""Exception types raised across the package."""


class QCLearnError(Exception):
    """Base class for all package errors."""


class NonFiniteError(QCLearnError, ValueError):
    """Input contains NaN or infinite entries."""


class NotPSDError(QCLearnError, ValueError):
    """A matrix expected to be positive semidefinite has a significantly negative eigenvalue."""


class DegenerateGramError(QCLearnError, ValueError):
    """A Gram (or denominator) matrix is singular or too close to singular to invert."""


class InvalidDensityError(QCLearnError, ValueError):
    """A matrix fails density-matrix validation (symmetry, unit trace, positivity)."""


class BadRankError(QCLearnError, ValueError):
    pass


class BadShapeError(QCLearnError, ValueError):
    pass


class BadSpecError(QCLearnError, ValueError):
    pass


class BadLevelError(QCLearnError, ValueError):
    """A hierarchy level has non-positive fidelity or is otherwise unusable."""


class ZeroWeightsError(QCLearnError, ValueError):
    pass


class SingularSystemError(QCLearnError, ValueError):
    """The least-squares system for Lagrange multipliers is rank deficient."""


class NotConvergedError(QCLearnError, RuntimeError):
    """Iterative procedure did not converge.

    The best available partial result is attached as ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
