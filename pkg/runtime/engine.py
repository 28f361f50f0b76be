import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

from config import config
from errors import ProtocolViolation, UnmappableSchemas, WorkflowError
from graph.model import Edge, Node, WorkflowGraph
from graph.validation import topological_stages, validate_graph
from utils.file_utils import dump_canonical, write_canonical
from utils.logger import setup_logger
from .broker import broker_transform
from .executors import BaseExecutor, ExecutorRegistry
from .ledger import CostLedger
from .messages import EvidenceSignal, Message, budget_signal, interface_signal, output_signal, tool_signal
from .schemas import validate_artifact
from .trace import ExecutionTrace, NodeResult


@dataclass
class NodeRun:
    """Outcome of dispatching one node, before it is committed to the trace"""
    node: Node
    artifact: Any = None
    signals: List[EvidenceSignal] = field(default_factory=list)
    cost: int = 0
    error: str = ''


class WorkflowEngine:
    """Runs a validated graph stage by stage.

    Nodes of one stage run on a thread pool; their results are committed by
    the calling thread in node-id order, which keeps traces deterministic.
    """

    def __init__(self, registry: ExecutorRegistry, max_workers: Optional[int] = None,
                 warn_ratio: Optional[float] = None):
        self.registry = registry
        self.max_workers = max_workers or config.get('runtime.max_workers', 4)
        self.warn_ratio = warn_ratio if warn_ratio is not None else config.get('review.budget_warn_ratio', 0.9)
        self.logger = setup_logger('WorkflowEngine')

    def execute(self, graph: WorkflowGraph, spec, prior: Optional[ExecutionTrace] = None,
                reuse: Iterable[str] = (), ledger: Optional[CostLedger] = None,
                run_dir: Optional[str] = None) -> ExecutionTrace:
        """Execute the graph; nodes listed in `reuse` take their result and
        signals from `prior` by value instead of running again"""
        report = validate_graph(graph)
        if not report.ok:
            raise ProtocolViolation(f"graph does not validate: {report.first()}")

        reuse = {n for n in reuse if n in prior.node_results} if prior is not None else set()
        executors: Dict[str, BaseExecutor] = {}
        for node in graph.nodes:
            if node.kind != 'broker' and node.id not in reuse:
                executors[node.id] = self.registry.resolve(node)

        budget = spec.constraints.budget
        trace = ExecutionTrace(ledger=ledger if ledger is not None else CostLedger())
        blocked = set()
        overflowed = False

        self.logger.info(f"Executing {len(graph.nodes)} nodes under budget {budget}")

        for stage in topological_stages(graph):
            started = time.perf_counter()
            dispatched: List[Tuple[Node, Dict[str, Any]]] = []

            for node_id in stage:
                node = graph.node(node_id)

                if node_id in reuse:
                    self._reuse(trace, prior, node_id)
                    if not trace.succeeded(node_id):
                        blocked.add(node_id)
                    continue

                failed_upstream = [p for p in graph.predecessors(node_id) if p in blocked]
                if failed_upstream and not self._alternates_cover(graph, node_id, blocked):
                    trace.node_results[node_id] = NodeResult(
                        'skipped', error=f"upstream '{failed_upstream[0]}' did not succeed")
                    blocked.add(node_id)
                    continue

                inputs, messages, violation = self._collect_inputs(graph, node, trace, run_dir)
                if violation is not None:
                    trace.signals.append(violation)
                    trace.node_results[node_id] = NodeResult(
                        'failure', error=f"input violates '{violation.payload['schema']}' "
                                         f"at field '{violation.payload['field']}'")
                    blocked.add(node_id)
                    continue

                for message in messages:
                    if not graph.has_edge(message.sender, message.receiver):
                        raise ProtocolViolation(f"handoff {message.sender}->{message.receiver} has no edge")
                    trace.messages.append(message)
                dispatched.append((node, inputs))

            runs = self._run_stage(graph, dispatched, executors)

            # Single writer: commit in node-id order
            for run in runs:
                self._commit(trace, run, budget, run_dir)
                if not trace.succeeded(run.node.id):
                    blocked.add(run.node.id)
                if trace.ledger.total > budget and not overflowed:
                    overflowed = True
                    self.logger.warning(f"Budget {budget} exceeded at node '{run.node.id}' "
                                        f"(spent {trace.ledger.total})")

            trace.stage_timings.append(time.perf_counter() - started)
            if overflowed:
                break

        if overflowed:
            trace.outcome = 'budget_exhausted'
        elif all(trace.succeeded(n) for n in graph.node_ids()):
            trace.outcome = 'success'
        else:
            trace.outcome = 'failure'

        self.logger.info(f"Execution finished: {trace.outcome}, cost {trace.ledger.total}")
        return trace

    def _reuse(self, trace: ExecutionTrace, prior: ExecutionTrace, node_id: str) -> None:
        trace.messages.extend(m for m in prior.messages if m.receiver == node_id)
        trace.signals.extend(prior.signals_for(node_id))
        trace.node_results[node_id] = prior.node_results[node_id]

    @staticmethod
    def _group_of(graph: WorkflowGraph, producer: str) -> str:
        node = graph.node(producer)
        return node.alternate_of or producer

    def _alternates_cover(self, graph: WorkflowGraph, node_id: str, blocked: set) -> bool:
        """True when every blocked producer has a sibling in the same
        parallel-solver group that is not blocked"""
        groups: Dict[str, List[str]] = {}
        for producer in graph.predecessors(node_id):
            groups.setdefault(self._group_of(graph, producer), []).append(producer)
        return all(any(p not in blocked for p in members) for members in groups.values())

    def _collect_inputs(self, graph: WorkflowGraph, node: Node, trace: ExecutionTrace,
                        run_dir: Optional[str]) -> Tuple[Dict[str, Any], List[Message], Optional[EvidenceSignal]]:
        """Pick one artifact per in-edge group, checked against the edge schema.

        Parallel-solver siblings share a group; the first valid artifact in
        node-id order is delivered under the group's id.
        """
        groups: Dict[str, List[Edge]] = {}
        for edge in sorted(graph.in_edges(node.id), key=lambda e: (e.source, e.target)):
            groups.setdefault(self._group_of(graph, edge.source), []).append(edge)

        inputs: Dict[str, Any] = {}
        messages: List[Message] = []
        for group, edges in sorted(groups.items()):
            chosen = None
            violation = None
            for edge in edges:
                result = trace.node_results.get(edge.source)
                if result is None or not result.succeeded:
                    continue
                schema = graph.protocol.schema(edge.schema)
                problem = validate_artifact(result.artifact, schema, node.id, upstream=group) if schema else None
                if problem is None:
                    chosen = (edge, result)
                    break
                violation = violation or problem

            if chosen is None:
                if violation is None:
                    violation = interface_signal(node.id, '<artifact>', edges[0].schema, 'missing', group)
                return inputs, messages, violation

            edge, result = chosen
            inputs[group] = result.artifact
            messages.append(Message(
                sender=edge.source,
                receiver=node.id,
                summary=f"{edge.schema} artifact from {edge.source}",
                body=dump_canonical(result.artifact)[:500],
                artifact_ref=result.artifact_ref,
            ))
        return inputs, messages, None

    def _run_node(self, graph: WorkflowGraph, node: Node, inputs: Dict[str, Any],
                  executor: Optional[BaseExecutor]) -> NodeRun:
        run = NodeRun(node=node)
        try:
            if node.kind == 'broker':
                mapping = graph.protocol.mappings[node.id]
                target = graph.protocol.schema(mapping.target_schema)
                if target is None:
                    raise UnmappableSchemas(f"broker target schema '{mapping.target_schema}' is not registered")
                (source_artifact,) = inputs.values()
                run.artifact, run.signals = broker_transform(source_artifact, mapping, target, node.id)
            else:
                attachments = sorted(graph.attached(node.id))
                artifact, signals, cost = executor.run(node.instruction, attachments, inputs)
                run.artifact = artifact
                run.signals = [EvidenceSignal(s.kind, node.id, s.severity, dict(s.payload)) for s in signals]
                run.cost = cost
        except Exception as e:
            self.logger.error(f"Node '{node.id}' failed: {e}")
            run.error = str(e) or e.__class__.__name__
            run.signals = [tool_signal(node.id, 1, run.error, severity='fail'), output_signal(node.id, 0.0)]
            run.cost = 0
        return run

    def _run_stage(self, graph: WorkflowGraph, dispatched: List[Tuple[Node, Dict[str, Any]]],
                   executors: Dict[str, BaseExecutor]) -> List[NodeRun]:
        if not dispatched:
            return []
        if len(dispatched) == 1 or self.max_workers <= 1:
            return [self._run_node(graph, node, inputs, executors.get(node.id)) for node, inputs in dispatched]

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            futures = [pool.submit(self._run_node, graph, node, inputs, executors.get(node.id))
                       for node, inputs in dispatched]
            runs = [f.result() for f in futures]
        return sorted(runs, key=lambda r: r.node.id)

    def _commit(self, trace: ExecutionTrace, run: NodeRun, budget: int, run_dir: Optional[str]) -> None:
        node_id = run.node.id
        try:
            trace.ledger.record(node_id, run.cost)
        except WorkflowError as e:
            run.signals.append(tool_signal(node_id, 1, str(e), severity='fail'))
            run.error = run.error or str(e)

        trace.signals.extend(run.signals)
        trace.signals.append(budget_signal(node_id, trace.ledger.total, budget, self.warn_ratio))

        if run.error:
            trace.node_results[node_id] = NodeResult('failure', error=run.error)
            return

        artifact_ref = None
        if run_dir:
            artifact_ref = write_canonical(run.artifact, os.path.join(run_dir, 'artifacts', f"{node_id}.json"))
        trace.node_results[node_id] = NodeResult('success', artifact=run.artifact, artifact_ref=artifact_ref)


def execute(graph: WorkflowGraph, spec, registry: ExecutorRegistry, prior: Optional[ExecutionTrace] = None,
            reuse: Iterable[str] = (), ledger: Optional[CostLedger] = None, run_dir: Optional[str] = None,
            max_workers: Optional[int] = None) -> ExecutionTrace:
    return WorkflowEngine(registry, max_workers=max_workers).execute(
        graph, spec, prior=prior, reuse=reuse, ledger=ledger, run_dir=run_dir)
