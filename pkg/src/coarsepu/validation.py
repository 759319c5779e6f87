from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Violation:
    condition: str
    message: str
    witness: tuple = ()

    def to_json(self) -> dict:
        return {"condition": self.condition, "message": self.message, "witness": list(self.witness)}


@dataclass
class ValidationReport:
    """Collected violations; truthy iff there are none."""

    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def add(self, condition: str, message: str, *witness) -> None:
        self.violations.append(Violation(condition, message, tuple(witness)))

    def conditions(self) -> set[str]:
        return {v.condition for v in self.violations}

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}
