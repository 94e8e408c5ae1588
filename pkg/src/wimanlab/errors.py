"""Exception types raised across the package."""


class WimanError(Exception):
    """Base class for package errors."""


class DimensionError(WimanError, ValueError):
    """Multi-index or radius dimension does not match the coefficient rule."""


class NonConvergenceError(WimanError, RuntimeError):
    """A series scan hit the hard term cap before a certified stop."""


class BudgetExceededError(WimanError, MemoryError):
    """A padded transform array would exceed the configured entry budget."""

    def __init__(self, required: int, allowed: int, what: str = "padded array"):
        self.required = int(required)
        self.allowed = int(allowed)
        super().__init__(
            f"{what} needs {self.required} complex entries, budget allows {self.allowed}"
        )


class BracketError(WimanError, ValueError):
    """Target value lies outside the range covered by a monotone inversion."""
