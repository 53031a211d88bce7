"""Exception hierarchy.

The CLI maps the three families below onto distinct exit codes.
"""


class NVBerryError(Exception):
    """Base class for all package errors."""


class PhysicsPreconditionError(NVBerryError):
    """A physical assumption of the model does not hold for the inputs."""


class NumericalError(NVBerryError):
    """A numerical routine failed to reach its stated accuracy."""


class BasisMismatch(NVBerryError, ValueError):
    pass


class ApproximationInvalid(PhysicsPreconditionError):
    pass


class NotAdiabatic(PhysicsPreconditionError):
    pass


class SignalDead(PhysicsPreconditionError):
    pass


class NoDrive(PhysicsPreconditionError):
    pass


class DegenerateTilt(PhysicsPreconditionError):
    pass


class NotClosed(PhysicsPreconditionError):
    pass


class RawGaugeSingularity(PhysicsPreconditionError):
    pass


class QuadratureFailure(NumericalError):
    pass


class NormDrift(NumericalError):
    pass


class NonHermitian(NumericalError):
    pass


class PhaseUnwrapFailure(NumericalError):
    pass


class DegenerateTiltWarning(UserWarning):
    pass
