"""Exception hierarchy shared by the numerical modules and the CLI."""

from __future__ import annotations


class CKVLabError(Exception):
    """Base class for all errors raised by ckvlab."""


class ValidationError(CKVLabError, ValueError):
    """A configuration or argument violates a documented precondition."""


class OutOfPatch(ValidationError):
    def __init__(self, point, box):
        self.point = tuple(float(v) for v in point)
        self.box = box
        super().__init__(f"point {self.point} lies outside patch box {box}")


class NumericalError(CKVLabError, ArithmeticError):
    """Raised when a metric cannot be used numerically at some point."""


class SingularMetric(NumericalError):
    def __init__(self, point, condition):
        self.point = tuple(float(v) for v in point)
        self.condition = float(condition)
        super().__init__(
            f"metric is singular or indefinite at {self.point} "
            f"(condition estimate {self.condition:.3e})"
        )


class NotPositiveDefinite(NumericalError):
    def __init__(self, point, smallest, required):
        self.point = tuple(float(v) for v in point)
        self.smallest = float(smallest)
        self.required = float(required)
        super().__init__(
            f"perturbed metric fails positive-definiteness margin at {self.point}: "
            f"smallest eigenvalue {self.smallest:.6g} < required {self.required:.6g}"
        )


class RowDeficient(ValidationError):
    def __init__(self, rows, cols):
        self.rows = rows
        self.cols = cols
        super().__init__(f"collocation system has {rows} rows for {cols} unknowns")
