from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

from django.dispatch import Signal

# A gated comparison was evaluated: sent with gate=<GateResult>
gate_checked = Signal()

PASSED = 'passed'
FAILED = 'failed'
SKIPPED = 'skipped'


class SuiteSkipped(Exception):
    """A suite's preconditions do not hold for this graph or mesh."""
    pass


class GateFailure(Exception):
    def __init__(self, report):
        self.report = report
        names = ', '.join("%s.%s" % (gate.suite, gate.name) for gate in report.failed_gates)
        super().__init__("gated invariant failed: %s" % names)


@dataclass
class GateResult:
    suite: str
    name: str
    value: float
    limit: float
    passed: bool

    def as_dict(self):
        return {'suite': self.suite, 'name': self.name, 'value': self.value, 'limit': self.limit,
                'passed': self.passed}


@dataclass
class SuiteResult:
    name: str
    status: str
    gates: List[GateResult] = field(default_factory=list)
    reason: str = ''
    info: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self):
        return {
            'name': self.name,
            'status': self.status,
            'reason': self.reason,
            'gates': [gate.as_dict() for gate in self.gates],
            'info': dict(self.info),
        }


@dataclass
class VerificationReport:
    suites: List[SuiteResult] = field(default_factory=list)

    @property
    def gates(self):
        return [gate for suite in self.suites for gate in suite.gates]

    @property
    def failed_gates(self):
        return [gate for gate in self.gates if not gate.passed]

    @property
    def passed(self):
        return all(suite.status != FAILED for suite in self.suites)

    def suite(self, name):
        for suite in self.suites:
            if suite.name == name:
                return suite
        raise KeyError(name)

    def as_dict(self):
        return {
            'passed': self.passed,
            'suites': [suite.as_dict() for suite in self.suites],
            'failed_gates': [gate.as_dict() for gate in self.failed_gates],
        }
