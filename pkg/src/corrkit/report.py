"""Verification reports shared by every checker."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

DEFAULT_TOL = 1e-9


@dataclass
class Report:
    """Outcome of a verification run.

    ``residuals`` maps an identity name to the largest violation seen,
    ``conditions`` maps a named yes/no property to its truth value, and
    ``witnesses`` records the first few offending inputs per identity.
    """

    name: str
    tolerance: float = DEFAULT_TOL
    residuals: dict[str, float] = field(default_factory=dict)
    conditions: dict[str, bool] = field(default_factory=dict)
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)

    max_witnesses: int = 8

    def residual(self, key: str, value: float, witness: Any = None) -> None:
        value = float(value)
        if value != value:  # NaN counts as a failure
            value = float("inf")
        self.residuals[key] = max(self.residuals.get(key, 0.0), value)
        if value > self.tolerance and len(self.witnesses) < self.max_witnesses:
            self.witnesses.append({"identity": key, "residual": value, "at": witness})

    def condition(self, key: str, ok: bool, witness: Any = None) -> None:
        ok = bool(ok)
        self.conditions[key] = self.conditions.get(key, True) and ok
        if not ok and len(self.witnesses) < self.max_witnesses:
            self.witnesses.append({"identity": key, "at": witness})

    def merge(self, other: "Report", prefix: str | None = None) -> None:
        pre = f"{prefix or other.name}."
        for k, v in other.residuals.items():
            self.residuals[pre + k] = max(self.residuals.get(pre + k, 0.0), v)
        for k, v in other.conditions.items():
            self.conditions[pre + k] = self.conditions.get(pre + k, True) and v
        for w in other.witnesses:
            if len(self.witnesses) < self.max_witnesses:
                self.witnesses.append({**w, "identity": pre + str(w.get("identity"))})

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def failures(self) -> list[str]:
        bad = [k for k, v in self.residuals.items() if not v <= self.tolerance]
        bad += [k for k, v in self.conditions.items() if not v]
        return bad

    @property
    def passed(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.passed

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"{status} {self.name} max_residual={self.max_residual:.3e}"
        if not self.passed:
            line += " failed=" + ",".join(self.failures)
        return line
