"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """A kernel or Green function was evaluated outside its domain."""


class ConfigError(ValueError):
    """A configuration value violates a documented constraint."""

    def __init__(self, message, line=None, key=None):
        self.reason = message
        self.line = line
        self.key = key
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)


class CFLError(RuntimeError):
    """Time step too large for the advection accuracy bound."""


class PicardConvergenceError(RuntimeError):
    """Per-step fixed-point iteration failed to converge."""

    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = list(residuals)


class QuadratureResolutionWarning(UserWarning):
    """Regularization radius is not resolved by the quadrature grid."""


class TruncationWarning(UserWarning):
    """An integral truncation or oracle window is too small to be trusted."""
