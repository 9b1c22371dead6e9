"""Lightweight result records for numerical verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["CheckReport", "CheckResult"]


@dataclass(frozen=True)
class CheckResult:
    """A single named assertion with its residual.

    ``residual`` is the measured defect (0 for a clean pass); ``passed``
    records whether it stayed within the check's tolerance.
    """

    name: str
    passed: bool
    residual: float
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "residual": self.residual}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a sampled or gridded inequality check.

    ``worst_margin`` is the minimum of (bound - observed) over everything
    checked; nonnegative means no violation. ``worst_point`` identifies
    where the minimum was attained.
    """

    name: str
    passed: bool
    checked: int
    worst_margin: float
    worst_point: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "worst_margin": self.worst_margin,
            "worst_point": self.worst_point,
        }
