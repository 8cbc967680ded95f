"""Exception types shared across the package."""


class SiAmpError(Exception):
    """Base class for all library errors."""


class InvalidConfig(SiAmpError):
    """A parameter or derived quantity violates its admissible range."""


class DimensionMismatch(SiAmpError):
    """Array arguments do not agree on N, L or M."""


class NonFiniteState(SiAmpError):
    """An iterate produced NaN or Inf entries (algorithm divergence)."""


class ParseError(SiAmpError):
    """A config file could not be parsed; carries line/field context."""


class ValidationError(SiAmpError):
    """A parsed config violates invariants; lists every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations)
        )
