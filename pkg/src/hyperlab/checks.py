"""Shared result type for inequality checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class CheckReport:
    """Outcome of checking ``lhs <= rhs`` numerically.

    Every check is normalized so that the side expected to be smaller is
    ``lhs``; lower bounds therefore appear with the bound as ``lhs`` and
    the measured quantity as ``rhs``.
    """

    lhs: float
    rhs: float
    tolerance: float
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.tolerance

    def as_dict(self) -> dict[str, Any]:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "holds": self.holds,
            **self.extra,
        }


def leq(lhs: float, rhs: float, tolerance: float, **extra: Any) -> CheckReport:
    return CheckReport(float(lhs), float(rhs), float(tolerance), dict(extra))
