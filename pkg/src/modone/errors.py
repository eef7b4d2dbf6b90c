"""Exception hierarchy shared by all modules.

Each class carries the CLI exit code it maps to.
"""


class ModOneError(Exception):
    exit_code = 1


class DomainError(ModOneError, ValueError):
    """An argument lies outside the operation's domain."""

    exit_code = 2


class WidthError(DomainError):
    """A window is too wide for the point count (would wrap more than once)."""


class DegenerateError(DomainError):
    pass


class PrecisionInfeasible(ModOneError):
    """The working precision cannot certify the requested accuracy."""

    exit_code = 3


class BudgetExceeded(ModOneError):
    """Adaptive work (panels, tuples) exceeded its configured limit."""

    exit_code = 4


class SingularityError(DomainError):
    pass


class IsolationError(ModOneError):
    """A sign change was found but the root could not be pinned to tolerance."""


class DecayUnknown(DomainError):
    """No certified Fourier decay constant is available for this window."""


class SlowDecayWarning(UserWarning):
    """Box windows on the Fourier side: |f^(xi)| only decays like 1/xi."""
