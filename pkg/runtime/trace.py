from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from errors import MalformedDocument
from utils.file_utils import dump_canonical, parse_json_text, read_json, write_canonical
from .ledger import CostLedger
from .messages import EvidenceSignal, Message

OUTCOMES = ('success', 'failure', 'budget_exhausted')
RESULT_STATUSES = ('success', 'failure', 'skipped')


@dataclass(frozen=True)
class NodeResult:
    """The artifact a node produced, or why it has none"""
    status: str
    artifact: Any = None
    error: str = ''
    artifact_ref: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.status == 'success'

    def to_dict(self) -> Dict[str, Any]:
        return {'status': self.status, 'artifact': self.artifact, 'error': self.error,
                'artifact_ref': self.artifact_ref}

    @classmethod
    def from_dict(cls, data: Any) -> 'NodeResult':
        if not isinstance(data, dict) or data.get('status') not in RESULT_STATUSES:
            raise MalformedDocument("node result needs a status of success, failure or skipped")
        return cls(status=data['status'], artifact=data.get('artifact'), error=data.get('error', ''),
                   artifact_ref=data.get('artifact_ref'))


@dataclass
class ExecutionTrace:
    messages: List[Message] = field(default_factory=list)
    signals: List[EvidenceSignal] = field(default_factory=list)
    ledger: CostLedger = field(default_factory=CostLedger)
    node_results: Dict[str, NodeResult] = field(default_factory=dict)
    outcome: str = 'success'
    # wall-clock seconds per stage; not part of the trace file
    stage_timings: List[float] = field(default_factory=list, compare=False)

    def signals_for(self, node: str) -> List[EvidenceSignal]:
        return [s for s in self.signals if s.node == node]

    def succeeded(self, node: str) -> bool:
        result = self.node_results.get(node)
        return result is not None and result.succeeded

    def to_dict(self) -> Dict[str, Any]:
        return {
            'messages': [m.to_dict() for m in self.messages],
            'signals': [s.to_dict() for s in self.signals],
            'ledger': self.ledger.to_dict(),
            'node_results': {k: self.node_results[k].to_dict() for k in sorted(self.node_results)},
            'outcome': self.outcome,
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'ExecutionTrace':
        if not isinstance(data, dict):
            raise MalformedDocument("trace must be a JSON object")
        if data.get('outcome') not in OUTCOMES:
            raise MalformedDocument(f"trace outcome must be one of {', '.join(OUTCOMES)}")
        return cls(
            messages=[Message.from_dict(m) for m in data.get('messages', [])],
            signals=[EvidenceSignal.from_dict(s) for s in data.get('signals', [])],
            ledger=CostLedger.from_dict(data.get('ledger', {})),
            node_results={k: NodeResult.from_dict(v) for k, v in data.get('node_results', {}).items()},
            outcome=data['outcome'],
        )


def serialize_trace(trace: ExecutionTrace) -> str:
    return dump_canonical(trace.to_dict())


def deserialize_trace(text: str) -> ExecutionTrace:
    return ExecutionTrace.from_dict(parse_json_text(text, 'trace'))


def save_trace(trace: ExecutionTrace, filename: str) -> str:
    return write_canonical(trace.to_dict(), filename)


def load_trace(filename: str) -> ExecutionTrace:
    return ExecutionTrace.from_dict(read_json(filename, 'trace'))
