"""Exception hierarchy shared across the package.

Every structured failure raised by the library derives from
:class:`RkbsnetError`, so callers (and the command line driver) can separate
analysis-domain failures from plain programming errors.
"""

from __future__ import annotations


class RkbsnetError(Exception):
    """Base class for all structured failures raised by this package."""


class DomainError(RkbsnetError, ValueError):
    """An evaluation left the region where a quantity is mathematically defined.

    Raised, for example, when a power-series argument leaves its guarded
    convergence region, when a geometric-series argument reaches one, or when
    a truncated series cannot meet the requested tail tolerance.

    Attributes:
        layer: Layer index of the first offending coordinate, when applicable.
        index: Neuron index or index pair of the offending coordinate.
        quantity: Short name of the quantity whose domain was breached.
    """

    def __init__(self, message: str, *, layer: int | None = None,
                 index: object | None = None, quantity: str | None = None):
        super().__init__(message)
        self.layer = layer
        self.index = index
        self.quantity = quantity


class BudgetError(RkbsnetError, ValueError):
    """Materialising a truncated feature vector would exceed the coefficient budget."""

    def __init__(self, message: str, *, required: int | None = None,
                 budget: int | None = None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class CapError(RkbsnetError, ValueError):
    """A step-magnitude cap required by a bound is violated, making it vacuous.

    Attributes:
        layer: Layer whose cap failed.
        value: The offending magnitude.
        cap: The cap it had to stay below.
    """

    def __init__(self, message: str, *, layer: int | None = None,
                 value: float | None = None, cap: float | None = None):
        super().__init__(message)
        self.layer = layer
        self.value = value
        self.cap = cap


class FeasibilityError(RkbsnetError, ValueError):
    """A scale-factor construction or root-finding problem has no solution.

    Attributes:
        kind: Machine-readable tag for the failure mode.
        layer: Layer at which the construction failed, when applicable.
        details: Optional mapping with diagnostic values (brackets, residuals).
    """

    def __init__(self, message: str, *, kind: str | None = None,
                 layer: int | None = None, details: dict | None = None):
        super().__init__(message)
        self.kind = kind
        self.layer = layer
        self.details = dict(details) if details else {}


class ConfigError(RkbsnetError, ValueError):
    """A configuration file or command line is malformed."""
