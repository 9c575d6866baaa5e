"""Exception types shared across the toolkit."""


class OutOfWindowError(ValueError):
    """Wavelength or temperature outside the declared validity window of the
    dispersion data."""


class LosslessCavityError(ValueError):
    """Cavity round trip has no loss; finesse and escape probability diverge."""


class UnstableCavityError(ValueError):
    """Resonator geometry does not support a confined Gaussian mode."""


class ResourceCapError(RuntimeError):
    """A simulation would exceed the configured event cap."""


class FitError(RuntimeError):
    """A histogram does not contain enough information for the requested fit."""


class ConfigError(ValueError):
    """Invalid run configuration.  Carries the offending line number when the
    error can be attributed to a single line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
