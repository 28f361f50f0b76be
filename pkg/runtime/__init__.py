"""Stage-ordered execution with typed handoffs, evidence signals and cost accounting"""

from graph.protocol import ArtifactSchema, SchemaField

from .broker import broker_transform
from .engine import WorkflowEngine, execute
from .evidence import EvidenceSummary, aggregate_signals
from .executors import BaseExecutor, ExecutorRegistry, RemoteExecutor, ScriptedExecutor
from .ledger import CostLedger, record_cost
from .messages import (SEVERITIES, SIGNAL_KINDS, EvidenceSignal, Message, budget_signal,
                       interface_signal, output_signal, suite_signal, tool_signal)
from .metrics import MarkerEvaluation, compute_set_metrics, macro_marker_metrics
from .schemas import validate_artifact, value_matches_kind
from .trace import (ExecutionTrace, NodeResult, deserialize_trace, load_trace, save_trace,
                    serialize_trace)

__all__ = [
    'ArtifactSchema', 'SchemaField', 'broker_transform', 'WorkflowEngine', 'execute',
    'EvidenceSummary', 'aggregate_signals', 'BaseExecutor', 'ExecutorRegistry', 'RemoteExecutor',
    'ScriptedExecutor', 'CostLedger', 'record_cost', 'SEVERITIES', 'SIGNAL_KINDS', 'EvidenceSignal',
    'Message', 'budget_signal', 'interface_signal', 'output_signal', 'suite_signal', 'tool_signal',
    'MarkerEvaluation', 'compute_set_metrics', 'macro_marker_metrics', 'validate_artifact',
    'value_matches_kind', 'ExecutionTrace', 'NodeResult', 'deserialize_trace', 'load_trace',
    'save_trace', 'serialize_trace',
]
