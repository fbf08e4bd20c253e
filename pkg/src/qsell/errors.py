"""Exception types shared across the package."""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EngineError, ValueError):
    """Malformed or out-of-contract input (grids, densities, configs)."""


class UndefinedPaymentError(EngineError):
    """Payment requested at a type whose interim win probability is zero."""


class UndefinedPosteriorError(EngineError):
    """Posterior requested for a type that is never asked to buy."""


class AssumptionViolationError(EngineError):
    """A valuation form fails the convexity/monotonicity checks it needs."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = violations or []


class EnumerationSizeError(EngineError):
    """Brute-force search would exceed the enumeration guard."""

    def __init__(self, count, limit):
        super().__init__(
            f"enumeration size {count} exceeds the guard of {limit}"
        )
        self.count = count
        self.limit = limit
