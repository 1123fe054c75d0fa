"""Verification report records shared by the symbolic checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List, Optional


@dataclass
class Check:
    check: str
    indices: tuple
    residual_zero: bool
    residual_sample: Optional[Any] = None
    note: str = ""

    def to_json(self) -> dict:
        out = {"check": self.check, "indices": list(self.indices), "residual_zero": self.residual_zero}
        if self.residual_sample is not None:
            out["residual_sample"] = self.residual_sample
        if self.note:
            out["note"] = self.note
        return out


def residual_check(name: str, indices, residual, note: str = "", sample_terms: int = 3) -> Check:
    """Wrap a residual (DiffPoly, LoopMatrix or anything with ``is_zero``)."""
    zero = residual.is_zero() if hasattr(residual, "is_zero") else not residual
    sample = None
    if not zero:
        if hasattr(residual, "to_json"):
            js = residual.to_json()
            sample = js[:sample_terms] if isinstance(js, list) else js
        else:
            sample = repr(residual)
    return Check(name, tuple(indices), zero, sample, note)


@dataclass
class Report:
    checks: List[Check] = field(default_factory=list)

    def add(self, c: Check) -> Check:
        self.checks.append(c)
        return c

    def extend(self, other: "Report") -> "Report":
        self.checks.extend(other.checks)
        return self

    @property
    def ok(self) -> bool:
        return all(c.residual_zero for c in self.checks)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.residual_zero]

    def to_json(self) -> list:
        return [c.to_json() for c in self.checks]

    def __len__(self):
        return len(self.checks)
