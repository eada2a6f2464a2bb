#!/usr/bin/env python3
"""
Validation reports for system models.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional


@dataclass(frozen=True)
class CheckResult:
    """A single named check with its numeric margin"""
    name: str
    passed: bool
    margin: float
    message: str = ''


@dataclass
class ValidationReport:
    """Ordered list of checks; deterministic for given inputs and tolerances"""
    checks: List[CheckResult] = field(default_factory=list)

    def add(self, name: str, passed: bool, margin: float, message: str = '') -> None:
        self.checks.append(CheckResult(name, bool(passed), float(margin), message))

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> Optional[CheckResult]:
        for check in self.checks:
            if check.name == name:
                return check
        return None

    def to_dict(self) -> Dict:
        return {
            'passed': self.passed,
            'checks': [
                {'name': c.name, 'passed': c.passed, 'margin': c.margin, 'message': c.message}
                for c in self.checks
            ],
        }
