"""Exception types shared across the package.

Every error carries a stable ``code`` string so the CLI can report machine
readable failures without string-matching Python messages.
"""

from __future__ import annotations


class RiemdefError(Exception):
    """Base class for all mathematical and usage errors raised here."""

    code = "Error"


class NonlinearParameterProduct(RiemdefError):
    """Product of two parameter-carrying expressions; only affine data is supported."""

    code = "NonlinearParameterProduct"


class UDegreeOverflow(RiemdefError):
    """A strict-mode operation produced total u-degree above the cap."""

    code = "UDegreeOverflow"


class DegreeMismatch(RiemdefError):
    """Input fails a homogeneity or differential-degree requirement."""

    code = "DegreeMismatch"


class NoSolution(RiemdefError):
    """An exact linear system required by a reconstruction is inconsistent."""

    code = "NoSolution"


class NotPoissonInput(RiemdefError):
    """Operator fails the skew/Jacobi guard of a Poisson-only routine."""

    code = "NotPoissonInput"


class NoDxFactor(RiemdefError):
    """Operator has a nonzero zeroth column, so it does not factor through d/dx."""

    code = "NoDxFactor"


class NotConstantCoefficients(RiemdefError):
    """Density coefficients depend on u where constants are required."""

    code = "NotConstantCoefficients"


class MissingStructure(RiemdefError):
    """Hierarchy lacks the component (operator, hamiltonians) a check needs."""

    code = "MissingStructure"


class OutOfRange(RiemdefError):
    """Index outside the valid range of a closed-form table."""

    code = "OutOfRange"


class UnknownParameter(RiemdefError):
    """Expression uses a parameter name that was never declared."""

    code = "UnknownParameter"


class ExprSyntaxError(RiemdefError):
    """Input expression failed to parse; ``position`` is a 0-based offset."""

    code = "SyntaxError"

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message if position is None else f"{message} (at position {position})")
        self.position = position
