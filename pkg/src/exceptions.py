"""Custom exceptions for the RealityLab project."""


class RealityLabError(Exception):
    """Base exception for RealityLab project."""
    pass


class DimensionError(RealityLabError):
    """Raised when operand shapes do not fit together."""
    pass


class ObservableError(RealityLabError):
    """Raised when an observable is malformed or used outside its spectrum."""
    pass


class CommutationError(RealityLabError):
    """Raised when an operation needs a commuting pair and did not get one."""
    pass


class ZeroProbabilityError(RealityLabError):
    """Raised when conditioning on an event of vanishing probability."""
    pass


class SeparationError(RealityLabError):
    """Raised when site tags and operator algebra disagree."""
    pass


class CertificationError(RealityLabError):
    """Raised when a correlation cannot be certified in a state."""
    pass


class MeasurementError(RealityLabError):
    """Raised when a measurement request violates the bookkeeping rules."""
    pass


class ExtensionConflictError(RealityLabError):
    """Raised when an extension would overwrite a contradictory objective value."""
    pass


class PolicyError(RealityLabError):
    """Raised when a measurement policy is malformed."""
    pass


class SetupError(RealityLabError):
    """Raised when an experiment cannot be built from the given parameters."""
    pass


class HistoryError(RealityLabError):
    """Raised when a history or family of histories is malformed."""
    pass


class InconsistentFamilyError(HistoryError):
    """Raised when a family is not weakly decohering."""
    pass


class ConfigurationError(RealityLabError):
    """Raised when configuration is invalid."""
    pass
