"""Exception hierarchy shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class PsaFairError(Exception):
    """Base class for every error raised by psafair."""


class ConfigError(PsaFairError, ValueError):
    """A configuration object or file violates its schema."""


class ShapeMismatch(PsaFairError, ValueError):
    pass


class NonBinaryColumn(PsaFairError, ValueError):
    pass


class EmptyGroup(PsaFairError, ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str  # "EmptyGroup" | "ShapeMismatch" | "NonBinaryColumn"
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


class InvalidDataset(PsaFairError, ValueError):
    """Raised by :func:`psafair.data.validate_dataset` with every violated invariant."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


class TooFewSamples(PsaFairError, ValueError):
    pass


class DimensionMismatch(PsaFairError, ValueError):
    pass


class DegenerateDenominator(PsaFairError, ArithmeticError):
    """A metric is undefined because one of its denominators is zero."""


class DegenerateClass(DegenerateDenominator):
    """Balanced accuracy needs both an actual positive and an actual negative."""


class DegenerateObjective(PsaFairError):
    """The objectives of a solution cannot be evaluated on the training data."""


class EmptyArchive(PsaFairError, ValueError):
    pass


class Divergence(PsaFairError, RuntimeError):
    pass


class MissingColumn(PsaFairError, KeyError):
    def __str__(self) -> str:  # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class UnmappableValue(PsaFairError, ValueError):
    pass


class EmptyAfterFiltering(PsaFairError, ValueError):
    pass


class NotAPsaReport(PsaFairError, ValueError):
    pass


class SplitMismatch(PsaFairError, ValueError):
    pass


class ReportError(PsaFairError, ValueError):
    """A run report file is malformed."""
