from dataclasses import dataclass, field
from typing import List, Optional


@dataclass(frozen=True)
class Violation:
    """One failed check: a stable code, the offending field and a message"""
    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} [{self.field}]: {self.message}"


@dataclass
class ValidationReport:
    """Violations found by a validator; empty means everything holds"""
    violations: List[Violation] = field(default_factory=list)

    def add(self, code: str, field_name: str, message: str) -> None:
        self.violations.append(Violation(code, field_name, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]

    def lines(self) -> List[str]:
        return [str(v) for v in self.violations]

    def __len__(self) -> int:
        return len(self.violations)
