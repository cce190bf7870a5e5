"""Exception types raised by the library."""


class CollatzError(Exception):
    """Base class for all library errors."""


class InvalidParams(CollatzError, ValueError):
    pass


class ZeroInput(CollatzError, ValueError):
    pass


class DivisibleInput(CollatzError, ValueError):
    pass


class EmptyCycle(CollatzError, ValueError):
    pass


class NotClosed(CollatzError, ValueError):
    """A value list is not a cycle of the map."""


class NonConvergent(CollatzError):
    """The trajectory entered a cycle that does not contain 1."""

    def __init__(self, cycle):
        self.cycle = cycle
        super().__init__(
            f"trajectory enters a cycle with minimum {cycle.min_element} "
            f"(length {cycle.length}); 1 is never reached"
        )


class BudgetExceeded(CollatzError):
    """Raised by operations that return a plain value and cannot report a budget outcome."""

    def __init__(self, steps_consumed, peak_bits):
        self.steps_consumed = steps_consumed
        self.peak_bits = peak_bits
        super().__init__(
            f"budget exhausted after {steps_consumed} steps (peak {peak_bits} bits)"
        )


class TooLarge(CollatzError, ValueError):
    pass


class SpecMismatch(CollatzError, ValueError):
    pass


class SchemaMismatch(CollatzError, ValueError):
    pass
