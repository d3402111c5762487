"""Exception hierarchy shared across the package.

Two broad families matter for the CLI exit-code contract: validation
problems (bad inputs, bad configs, malformed files) and numerical
failures discovered mid-computation.
"""


class ValidationError(ValueError):
    """Invalid user input: bad domain, bad dimensions, bad config, bad file."""


class DomainError(ValidationError):
    """Argument outside its mathematical domain (e.g. x not in [0, 1])."""


class DimensionError(ValidationError):
    """Mismatched resolution levels or vector/matrix shapes."""


class ConfigurationError(ValidationError):
    """Inconsistent or infeasible configuration values."""


class DataFormatError(ValidationError):
    """Malformed data file (missing header, bad row, out-of-range value)."""


class UnsupportedPriorError(ValidationError):
    """Operation requires a prior family it does not support."""


class PriorSupportError(ValidationError):
    """Prior density vanishes where a positive density is required."""


class NumericalError(RuntimeError):
    """Numerical failure: ill-conditioning, stuck chains, overflow."""


class IllConditionedError(NumericalError):
    """Matrix too ill-conditioned to invert; carries the offending tau_hat."""

    def __init__(self, message: str, tau_hat: float | None = None):
        super().__init__(message)
        self.tau_hat = tau_hat


class StuckChainError(NumericalError):
    """MCMC chain accepted no proposals during adaptation."""
