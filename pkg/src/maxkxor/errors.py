"""Exception types shared across the package."""


class MaxKXorError(Exception):
    """Base class for all errors raised by maxkxor."""


class InstanceError(MaxKXorError, ValueError):
    """Invalid instance parameters or a malformed instance file."""


class CapExceededError(MaxKXorError):
    """Requested system size is above the configured enumeration cap."""


class DegenerateSpectrumError(MaxKXorError):
    """E_max == E_min, so the approximation ratio is undefined."""


class IntegrationError(MaxKXorError):
    """The adaptive integrator could not reach the final time."""

    def __init__(self, msg, t_fail=None):
        super().__init__(msg)
        self.t_fail = t_fail
