"""Exception hierarchy shared by all bchlab modules."""


class BchLabError(Exception):
    """Base class for every error raised by the library."""


class ParameterDomainError(BchLabError, ValueError):
    """Wave parameters outside the smooth-solitary-wave range."""


class KernelDomainError(BchLabError, ValueError):
    """Kernel evaluated outside its domain (z must lie in (0, 1))."""


class SingularLineError(KernelDomainError):
    """Evaluation on the singular line x = 1 (or z = 1)."""


class BracketError(BchLabError, RuntimeError):
    """A root bracket failed, or the bracketed function is not monotone."""


class QuadratureError(BchLabError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class DegeneratePolynomialError(BchLabError, ValueError):
    """Resultant requested for an identically zero polynomial."""


class ZeroPolynomialError(BchLabError, ValueError):
    """Sturm chain requested for the zero polynomial."""


class IntegrationError(BchLabError, RuntimeError):
    """ODE integration failed or never reached its cutoff."""


class InsufficientTailError(BchLabError, RuntimeError):
    """Profile tail too short for a decay-rate fit."""


class SimulationError(BchLabError, RuntimeError):
    """Base class for aborted PDE runs; ``reason`` is a short tag."""

    reason = "aborted"


class PositivityViolation(SimulationError):
    reason = "positivity"


class BlowUpError(SimulationError):
    reason = "blow-up"


class ResolutionError(SimulationError):
    reason = "resolution"
