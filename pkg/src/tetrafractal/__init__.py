"""Analysis toolkit for fractal assemblies of tetrahedral rotorcraft."""

from .errors import (DomainError, MechanismError, ResourceLimitError, SingularityError,
                     TetraError, UnsupportedCaseError)

__version__ = "0.1.0"

__all__ = [
    "DomainError", "MechanismError", "ResourceLimitError", "SingularityError",
    "TetraError", "UnsupportedCaseError", "__version__",
]
