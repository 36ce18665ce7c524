"""Exception types raised across the package."""

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix expected to have full row rank is numerically singular."""


class DegenerateUpdateError(np.linalg.LinAlgError):
    """A rank-one downdate would make the maintained Gram matrix singular."""


class NullEventError(ValueError):
    """Conditioning on an event of probability zero."""


class InfeasibleError(RuntimeError):
    """No admissible selection could be produced."""


class EnumerationCapError(ValueError):
    """Exhaustive enumeration would exceed the configured subset cap."""
