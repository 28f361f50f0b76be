import operator
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from config import config
from errors import InvalidConstraints, MalformedDocument
from runtime.evidence import EvidenceSummary
from utils.file_utils import dump_canonical, parse_json_text, read_json, write_canonical

COMPARATORS: Dict[str, Callable[[Any, Any], bool]] = {
    'lt': operator.lt,
    'le': operator.le,
    'gt': operator.gt,
    'ge': operator.ge,
    'eq': operator.eq,
    'ne': operator.ne,
}
SUMMARY_FIELDS = ('confidence', 'fail_ratio', 'tests_passed', 'tests_failed', 'tool_errors',
                  'budget_ratio', 'interface_violations', 'test_fail_streak')
THRESHOLD_KEYS = ('min_output_confidence', 'max_test_fail_ratio', 'max_tool_errors', 'budget_warn_ratio')


class RepairActionKind(str, Enum):
    RETRY_WITH_UPDATED_INSTRUCTION = 'retry_with_updated_instruction'
    ADD_PARALLEL_SOLVER = 'add_parallel_solver'
    SWAP_TOOL_BACKEND = 'swap_tool_backend'
    REFORMAT_UPSTREAM_OUTPUT = 'reformat_upstream_output'
    ESCALATE_NO_ACTION = 'escalate_no_action'


@dataclass(frozen=True)
class Thresholds:
    min_output_confidence: float = 0.5
    max_test_fail_ratio: float = 0.4
    max_tool_errors: int = 2
    budget_warn_ratio: float = 0.9

    def __post_init__(self):
        if not 0 <= self.min_output_confidence <= 1:
            raise InvalidConstraints("min_output_confidence must lie in [0, 1]")
        if not 0 <= self.max_test_fail_ratio <= 1:
            raise InvalidConstraints("max_test_fail_ratio must lie in [0, 1]")
        if isinstance(self.max_tool_errors, bool) or not isinstance(self.max_tool_errors, int) \
                or self.max_tool_errors < 0:
            raise InvalidConstraints("max_tool_errors must be a non-negative integer")
        if not 0 < self.budget_warn_ratio <= 1:
            raise InvalidConstraints("budget_warn_ratio must lie in (0, 1]")

    @classmethod
    def from_config(cls) -> 'Thresholds':
        return cls(**{key: config.get(f'review.{key}', getattr(cls, key)) for key in THRESHOLD_KEYS})

    @classmethod
    def from_dict(cls, data: Any) -> 'Thresholds':
        if not isinstance(data, dict):
            raise MalformedDocument("thresholds must be a JSON object")
        unknown = sorted(set(data) - set(THRESHOLD_KEYS))
        if unknown:
            raise MalformedDocument(f"unknown threshold keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in THRESHOLD_KEYS}


def load_thresholds(filename: Optional[str]) -> Thresholds:
    if not filename:
        return Thresholds.from_config()
    return Thresholds.from_dict(read_json(filename, 'thresholds'))


Comparison = Tuple[str, str, Any]


@dataclass(frozen=True)
class RepairPolicy:
    """Declarative pattern over one node's evidence summary; every comparison must hold"""
    id: str
    priority: int
    pattern: Tuple[Comparison, ...]
    action: RepairActionKind

    @property
    def order_key(self) -> Tuple[int, str]:
        return (self.priority, self.id)

    def matches(self, summary: EvidenceSummary) -> bool:
        for field_name, comparator, value in self.pattern:
            if not COMPARATORS[comparator](summary.value_of(field_name), value):
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'priority': self.priority,
            'pattern': [list(c) for c in self.pattern],
            'action': self.action.value,
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'RepairPolicy':
        if not isinstance(data, dict) or not isinstance(data.get('id'), str):
            raise MalformedDocument("repair policy needs an id")
        unknown = sorted(set(data) - {'id', 'priority', 'pattern', 'action'})
        if unknown:
            raise MalformedDocument(f"unknown repair policy keys: {', '.join(unknown)}")
        priority = data.get('priority')
        if isinstance(priority, bool) or not isinstance(priority, int):
            raise MalformedDocument(f"policy '{data['id']}' needs an integer priority")
        try:
            action = RepairActionKind(data.get('action'))
        except ValueError:
            raise MalformedDocument(f"policy '{data['id']}' has unknown action '{data.get('action')}'")

        raw = data.get('pattern') or []
        # a single triple is accepted as a one-comparison pattern
        if len(raw) == 3 and isinstance(raw[0], str):
            raw = [raw]
        pattern = []
        for comparison in raw:
            if not isinstance(comparison, (list, tuple)) or len(comparison) != 3:
                raise MalformedDocument(f"policy '{data['id']}' pattern items must be [field, comparator, value]")
            field_name, comparator, value = comparison
            if field_name not in SUMMARY_FIELDS:
                raise MalformedDocument(f"policy '{data['id']}' compares unknown field '{field_name}'")
            if comparator not in COMPARATORS:
                raise MalformedDocument(f"policy '{data['id']}' uses unknown comparator '{comparator}'")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise MalformedDocument(f"policy '{data['id']}' compares '{field_name}' against a non-number")
            pattern.append((field_name, comparator, value))
        return cls(id=data['id'], priority=priority, pattern=tuple(pattern), action=action)


def sort_policies(policies: Sequence[RepairPolicy]) -> List[RepairPolicy]:
    return sorted(policies, key=lambda p: p.order_key)


def default_policies(thresholds: Optional[Thresholds] = None) -> List[RepairPolicy]:
    t = thresholds or Thresholds()
    return [
        RepairPolicy('reformat_on_interface_violation', 10, (('interface_violations', 'ge', 1),),
                     RepairActionKind.REFORMAT_UPSTREAM_OUTPUT),
        RepairPolicy('parallel_solver_on_persistent_test_failures', 30, (('test_fail_streak', 'ge', 2),),
                     RepairActionKind.ADD_PARALLEL_SOLVER),
        RepairPolicy('swap_backend_on_tool_errors', 40, (('tool_errors', 'gt', t.max_tool_errors),),
                     RepairActionKind.SWAP_TOOL_BACKEND),
        RepairPolicy('retry_on_low_confidence', 50, (('confidence', 'lt', t.min_output_confidence),),
                     RepairActionKind.RETRY_WITH_UPDATED_INSTRUCTION),
        RepairPolicy('retry_on_test_failures', 60, (('fail_ratio', 'gt', t.max_test_fail_ratio),),
                     RepairActionKind.RETRY_WITH_UPDATED_INSTRUCTION),
    ]


def policies_from_list(data: Any) -> List[RepairPolicy]:
    if not isinstance(data, list):
        raise MalformedDocument("policy file must hold a JSON list")
    policies = [RepairPolicy.from_dict(p) for p in data]
    ids = [p.id for p in policies]
    if len(set(ids)) != len(ids):
        raise MalformedDocument("policy ids must be unique")
    return policies


def parse_policies(document: str) -> List[RepairPolicy]:
    return policies_from_list(parse_json_text(document, 'policy file'))


def serialize_policies(policies: Sequence[RepairPolicy]) -> str:
    return dump_canonical([p.to_dict() for p in policies])


def load_policies(filename: Optional[str], thresholds: Optional[Thresholds] = None) -> List[RepairPolicy]:
    if not filename:
        return default_policies(thresholds)
    return policies_from_list(read_json(filename, 'policy file'))


def save_policies(policies: Sequence[RepairPolicy], filename: str) -> str:
    return write_canonical([p.to_dict() for p in policies], filename)
