"""Exception types shared across the package.

Everything raised on purpose derives from CoarselikError so callers can
catch package failures without trapping programming errors.
"""


class CoarselikError(Exception):
    """Base class for all package-level errors."""


class InvalidInputError(CoarselikError):
    """Malformed or out-of-contract input (bad shapes, bounds, counts)."""


class UnsupportedModelError(CoarselikError):
    """A model/state layout the package deliberately does not handle."""


class InconsistentObservationError(CoarselikError):
    """Observed data that no sample path of the model could produce."""


class InvalidStartError(CoarselikError):
    """Optimizer starting point with minus-infinity log likelihood.

    Carries the index of the first offending subject so the caller can
    inspect the record.
    """

    def __init__(self, message: str, subject_index: int | None = None):
        super().__init__(message)
        self.subject_index = subject_index


class ToleranceError(CoarselikError):
    """Requested accuracy not reached within the evaluation budget.

    The best available estimate and its error bound ride along so that a
    caller who can live with less accuracy is not left empty-handed.
    """

    def __init__(self, message: str, value: float, error_estimate: float):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class DomainError(CoarselikError):
    """Integrand returned a non-finite value; reports where it happened."""

    def __init__(self, message: str, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class HazardInversionError(CoarselikError):
    """Simulator could not solve the cumulative-hazard equation."""


class StiffnessError(CoarselikError):
    """ODE transition-probability solve failed to converge."""
