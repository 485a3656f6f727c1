"""Exception types shared by the analysis modules."""


class TetraError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TetraError, ValueError):
    """An input is outside the domain where the model is defined."""


class ResourceLimitError(TetraError):
    """A request would exceed a configured size limit."""


class SingularityError(TetraError, ArithmeticError):
    """Euler-angle kinematics evaluated too close to gimbal lock."""


class UnsupportedCaseError(TetraError, NotImplementedError):
    """The requested configuration is deliberately not implemented."""


class MechanismError(TetraError):
    """The constrained truss stiffness matrix is singular.

    ``mode`` holds the offending nodal displacement pattern (n_nodes x 3).
    """

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode
