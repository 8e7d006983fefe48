"""Exception types raised by spec-preserve."""

from __future__ import annotations


class SpecPreserveError(Exception):
    """Base class for errors raised by this package."""


class EigenConvergenceError(SpecPreserveError, RuntimeError):
    """Jacobi sweeps hit the iteration cap before the off-diagonal mass vanished."""

    def __init__(self, residual: float, sweeps: int):
        super().__init__(
            f"Jacobi eigensolver did not converge after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )
        self.residual = residual
        self.sweeps = sweeps


class DomainError(SpecPreserveError, ValueError):
    """Input lies outside the domain an operation is defined on."""


class HermitianError(DomainError):
    """Matrix is too far from Hermitian to be symmetrized silently."""


class QuadratureError(SpecPreserveError, RuntimeError):
    """Mollifier quadrature failed its unit-mass check."""


class SchemaError(SpecPreserveError, ValueError):
    """JSON payload does not match the expected schema."""


class RankDeficiencyError(SpecPreserveError, ArithmeticError):
    """Moment vectors of a node family are not linearly independent."""


class PrecisionError(SpecPreserveError, ArithmeticError):
    """Result lies outside the range binary64 can represent."""
