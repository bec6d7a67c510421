"""Exception types raised by pdbuck."""


class PdbuckError(Exception):
    """Base class for all pdbuck errors."""


class ConfigError(PdbuckError, ValueError):
    """Invalid converter parameters or configuration file contents."""


class PoleHit(PdbuckError, ZeroDivisionError):
    """A rational function was evaluated exactly at a pole."""


class ModeMismatch(PdbuckError):
    """Operation requested for the wrong control mode."""


class DomainError(PdbuckError, ValueError):
    """Argument outside the admissible domain (e.g. switching phase d)."""


class DegenerateDelta(PdbuckError, ValueError):
    """Period-two relation evaluated at zero perturbation."""


class SingularParameter(PdbuckError, ValueError):
    """Closed-form estimate is singular for the given parameters."""


class DegenerateDenominator(PdbuckError, ZeroDivisionError):
    """A closed-form relation has a vanishing denominator."""


class NonFinite(PdbuckError, ArithmeticError):
    """Simulated state diverged to inf/nan."""


class InsufficientSamples(PdbuckError, ValueError):
    """Too few stroboscopic samples to classify periodicity."""
