"""Exception types raised by the library.

Each class marks one failure mode that callers may want to catch
separately; everything derives from QbeError.
"""


class QbeError(Exception):
    """Base class for all library errors."""


class BasisMismatchError(QbeError):
    """Operands live on different bases or have incompatible shapes."""


class RepresentationError(QbeError):
    """Operation requires a basis kind (Fock/grid) it did not receive."""


class BasisSizeError(QbeError):
    """Basis too small for the requested construction."""


class HermiticityError(QbeError):
    """Matrix fails the Hermiticity tolerance where Hermiticity is required."""


class DomainError(QbeError):
    """Scalar function undefined at an eigenvalue of its operator argument."""


class ResolutionError(QbeError):
    """Grid cannot resolve the requested Fock subspace (round-trip check failed)."""


class ConditioningError(QbeError):
    """Thermal sandwich e^{H/2kT} too ill-conditioned on this truncation."""


class SizeCapError(QbeError):
    """Dense superoperator would exceed the configured size cap."""


class IllPosedError(QbeError):
    """Inverse coherence map amplification exceeds the allowed cap."""


class PositivityError(QbeError):
    """State violates a positivity precondition."""


class DomainViolationError(QbeError):
    """Initial state lies outside the restricted domain of the evolution."""


class NormalizationError(QbeError):
    """Trace too small to normalize."""


class StiffnessError(QbeError):
    """Adaptive step size underflowed; problem is stiff for explicit stepping."""


class ConfigError(QbeError):
    """Invalid or incomplete run configuration."""
