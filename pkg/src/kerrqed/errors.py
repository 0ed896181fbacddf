"""Exception and warning types shared across the package."""


class KerrQEDError(Exception):
    """Base class for all package errors."""


class ConfigError(KerrQEDError):
    """Invalid or malformed scenario configuration (CLI exit code 2)."""


class ResonanceError(KerrQEDError):
    """A drive or dressed frequency sits on a qubit transition."""


class SolverError(KerrQEDError):
    """A numerical routine failed to produce a valid result (CLI exit code 3)."""


class AmbiguousBranchError(SolverError):
    """Several stable field branches exist under branch policy 'strict'."""


class CutoffError(KerrQEDError):
    """A basis truncation did not converge."""


class ModelBreakdownWarning(UserWarning):
    """Reduced model outside its validity window (pointer separation too large)."""


class StraddlingWarning(UserWarning):
    """Resonator frequency lies between qubit transition frequencies."""


class CutoffWarning(UserWarning):
    """Fock-space truncation was escalated because of leakage."""


class SteadinessWarning(UserWarning):
    """Time evolution hit its horizon before the steadiness criterion."""


class WeakProbeWarning(UserWarning):
    """Spectroscopy field is not small compared to the pump field."""
