from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from errors import MalformedDocument, ProtocolViolation

SIGNAL_KINDS = ('output', 'test', 'tool', 'budget', 'interface')
SEVERITIES = ('info', 'warn', 'fail')

# Keys every payload of a given signal kind carries
PAYLOAD_KEYS = {
    'output': ('confidence',),
    'test': ('pass', 'fail'),
    'tool': ('errors',),
    'budget': ('spent', 'budget'),
    'interface': ('field', 'schema'),
}


@dataclass(frozen=True)
class Message:
    """One recorded handoff along a graph edge"""
    sender: str
    receiver: str
    summary: str = ''
    body: str = ''
    artifact_ref: Optional[str] = None

    def __post_init__(self):
        if self.sender == self.receiver:
            raise ProtocolViolation(f"message from '{self.sender}' to itself")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sender': self.sender,
            'receiver': self.receiver,
            'summary': self.summary,
            'body': self.body,
            'artifact_ref': self.artifact_ref,
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'Message':
        if not isinstance(data, dict) or 'sender' not in data or 'receiver' not in data:
            raise MalformedDocument("message needs sender and receiver")
        return cls(sender=data['sender'], receiver=data['receiver'], summary=data.get('summary', ''),
                   body=data.get('body', ''), artifact_ref=data.get('artifact_ref'))


@dataclass(frozen=True)
class EvidenceSignal:
    kind: str
    node: str
    severity: str = 'info'
    payload: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise MalformedDocument(f"unknown signal kind '{self.kind}'")
        if self.severity not in SEVERITIES:
            raise MalformedDocument(f"unknown signal severity '{self.severity}'")
        missing = [k for k in PAYLOAD_KEYS[self.kind] if k not in self.payload]
        if missing:
            raise MalformedDocument(f"{self.kind} signal payload lacks {', '.join(missing)}")

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'node': self.node, 'severity': self.severity, 'payload': dict(self.payload)}

    @classmethod
    def from_dict(cls, data: Any) -> 'EvidenceSignal':
        if not isinstance(data, dict):
            raise MalformedDocument("signal must be an object")
        return cls(kind=data.get('kind'), node=data.get('node', ''), severity=data.get('severity', 'info'),
                   payload=dict(data.get('payload') or {}))


def output_signal(node: str, confidence: float, severity: Optional[str] = None, **extra) -> EvidenceSignal:
    if severity is None:
        severity = 'info' if confidence > 0 else 'fail'
    return EvidenceSignal('output', node, severity, {'confidence': confidence, **extra})


def suite_signal(node: str, passed: int, failed: int, note: str = '') -> EvidenceSignal:
    payload: Dict[str, Any] = {'pass': passed, 'fail': failed}
    if note:
        payload['note'] = note
    return EvidenceSignal('test', node, 'fail' if failed else 'info', payload)


def tool_signal(node: str, errors: int, message: str = '', severity: Optional[str] = None) -> EvidenceSignal:
    if severity is None:
        severity = 'fail' if errors else 'info'
    payload: Dict[str, Any] = {'errors': errors}
    if message:
        payload['message'] = message
    return EvidenceSignal('tool', node, severity, payload)


def budget_signal(node: str, spent: int, budget: int, warn_ratio: float) -> EvidenceSignal:
    ratio = spent / budget if budget else 0.0
    if spent > budget:
        severity = 'fail'
    elif ratio >= warn_ratio:
        severity = 'warn'
    else:
        severity = 'info'
    return EvidenceSignal('budget', node, severity, {'spent': spent, 'budget': budget})


def interface_signal(node: str, field_name: str, schema: str, reason: str,
                     upstream: Optional[str] = None) -> EvidenceSignal:
    payload: Dict[str, Any] = {'field': field_name, 'schema': schema, 'reason': reason}
    if upstream:
        payload['upstream'] = upstream
    return EvidenceSignal('interface', node, 'fail', payload)
