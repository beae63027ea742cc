"""Exception hierarchy shared by all modules."""


class NlkppError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(NlkppError, ValueError):
    """Invalid parameters for a driver, kernel, grid or run configuration."""


class DomainError(NlkppError, ValueError):
    """An argument lies outside the support or admissible range of an object."""


class DivergenceError(DomainError):
    """Exponential moment requested at or beyond the abscissa of convergence."""

    def __init__(self, mu, sigma):
        self.mu = mu
        self.sigma = sigma
        super().__init__(
            f"exponential moment diverges: mu={mu!r} >= abscissa sigma={sigma!r}"
        )


class EstimationError(NlkppError):
    """A finite-horizon estimate could not be formed (horizon too short...)."""

    def __init__(self, message, attained=None):
        self.attained = attained
        super().__init__(message)


class TruncationError(NlkppError, ValueError):
    """The sampled window does not contain an integer number of blocks."""


class StepSizeError(ConfigurationError):
    """Time step violates the explicit stability or CFL budget."""

    def __init__(self, message, suggested_dt):
        self.suggested_dt = suggested_dt
        super().__init__(f"{message}; suggested dt <= {suggested_dt:.6g}")


class NonUnimodalError(NlkppError):
    """The sampled least-mean speed curve is not unimodal."""

    def __init__(self, message, mus, values):
        self.mus = mus
        self.values = values
        super().__init__(message)


class NonConvergenceError(NlkppError):
    """The pullback wave construction did not converge along its schedule."""

    def __init__(self, message, distances):
        self.distances = distances
        super().__init__(message)


class TailConditionError(NlkppError, ValueError):
    """Initial data does not match the front tail, so stability does not apply."""

    def __init__(self, message, window=None):
        self.window = window
        super().__init__(message)


class CheckFailure(NlkppError):
    """A numerical check (ordering, contraction, ...) failed."""

    def __init__(self, message, detail=None):
        self.detail = detail
        super().__init__(message)


class ArityError(ConfigurationError):
    """Too few snapshots for a finite-difference evaluation."""
