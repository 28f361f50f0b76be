from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from .trace import ExecutionTrace


@dataclass
class EvidenceSummary:
    """Per-node evidence folded out of a trace's signals"""
    node: str
    confidence: Optional[float] = None
    tests_passed: int = 0
    tests_failed: int = 0
    tool_errors: int = 0
    budget_ratio: float = 0.0
    interface_violations: int = 0
    test_fail_streak: int = 0

    @property
    def fail_ratio(self) -> float:
        total = self.tests_passed + self.tests_failed
        return self.tests_failed / total if total else 0.0

    def value_of(self, field_name: str) -> Any:
        """Field lookup used by policy patterns; a missing confidence reads as 1.0"""
        if field_name == 'confidence':
            return 1.0 if self.confidence is None else self.confidence
        if field_name == 'fail_ratio':
            return self.fail_ratio
        return getattr(self, field_name)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['fail_ratio'] = self.fail_ratio
        return data


def aggregate_signals(trace: ExecutionTrace) -> Dict[str, EvidenceSummary]:
    summaries: Dict[str, EvidenceSummary] = {}

    for signal in trace.signals:
        summary = summaries.setdefault(signal.node, EvidenceSummary(node=signal.node))
        payload = signal.payload

        if signal.kind == 'output':
            summary.confidence = float(payload['confidence'])
        elif signal.kind == 'test':
            summary.tests_passed += int(payload.get('pass', 0))
            summary.tests_failed += int(payload.get('fail', 0))
        elif signal.kind == 'tool':
            if signal.severity in ('warn', 'fail'):
                summary.tool_errors += int(payload.get('errors', 1))
        elif signal.kind == 'budget':
            budget = payload.get('budget') or 0
            summary.budget_ratio = payload['spent'] / budget if budget else 0.0
        elif signal.kind == 'interface':
            if signal.severity == 'fail':
                summary.interface_violations += 1

    return summaries
