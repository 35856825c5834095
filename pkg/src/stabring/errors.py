"""Exception types shared across the package."""


class CapacityError(Exception):
    """Requested size exceeds a documented exhaustive-check or qubit bound."""


class NotPrivilegedError(ValueError):
    """A move was requested for a node whose rule guard is false."""


class AncillaReuseError(ValueError):
    """A rule fragment was asked to write onto an already-used ancilla slot."""


class CircuitParseError(ValueError):
    """Malformed circuit text. Carries the 1-based line number of the offense."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason
