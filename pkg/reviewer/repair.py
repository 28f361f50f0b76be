"""Local repair actions, each expressed as a graph patch"""

from typing import List, Optional

from errors import PatchYieldsInvalidGraph
from graph.model import AttachmentChange, Edge, EdgeChange, GraphPatch, NodeChange, WorkflowGraph
from graph.patching import apply_patch
from library import Library, rank_entries
from runtime.evidence import EvidenceSummary, aggregate_signals
from runtime.trace import ExecutionTrace
from utils.logger import setup_logger
from .policies import RepairActionKind

logger = setup_logger('Repair')


def failure_digest(node_id: str, summary: Optional[EvidenceSummary], round_no: int) -> str:
    """Structured digest of the evidence that flagged a node"""
    if summary is None:
        return f"[repair round {round_no}] {node_id}: previous attempt failed; try again."
    confidence = 'n/a' if summary.confidence is None else f"{summary.confidence:.2f}"
    return (f"[repair round {round_no}] {node_id}: confidence={confidence}; "
            f"tests passed={summary.tests_passed} failed={summary.tests_failed}; "
            f"tool_errors={summary.tool_errors}; interface_violations={summary.interface_violations}. "
            f"Address these failures.")


def _summary(trace: Optional[ExecutionTrace], node_id: str) -> Optional[EvidenceSummary]:
    if trace is None:
        return None
    return aggregate_signals(trace).get(node_id)


def retry_patch(graph: WorkflowGraph, node_id: str, trace: Optional[ExecutionTrace], round_no: int) -> GraphPatch:
    node = graph.node(node_id)
    digest = failure_digest(node_id, _summary(trace, node_id), round_no)
    updated = node.with_changes(instruction=f"{node.instruction}\n\n{digest}")
    return GraphPatch(target_nodes=frozenset({node_id}), node_changes=(NodeChange('modify', updated),))


def parallel_solver_patch(graph: WorkflowGraph, node_id: str) -> GraphPatch:
    """One sibling solver wired to the node's predecessors and successors"""
    node = graph.node(node_id)
    for neighbour in graph.predecessors(node_id) + graph.successors(node_id):
        if graph.node(neighbour).kind == 'broker':
            raise PatchYieldsInvalidGraph(
                f"cannot add a solver beside '{node_id}': neighbour '{neighbour}' is a broker")

    k = 1
    while f"{node_id}_solver{k}" in graph:
        k += 1
    sibling_id = f"{node_id}_solver{k}"
    group = node.alternate_of or node_id

    sibling = node.with_changes(
        id=sibling_id,
        instruction=f"{node.instruction}\n\nSolve this independently as an alternative to {node_id}.",
        alternate_of=group,
    )
    edges: List[EdgeChange] = []
    for edge in graph.in_edges(node_id):
        edges.append(EdgeChange('add', Edge(edge.source, sibling_id, edge.schema)))
    for edge in graph.out_edges(node_id):
        edges.append(EdgeChange('add', Edge(sibling_id, edge.target, edge.schema)))
    attachments = tuple(AttachmentChange('add', sibling_id, e) for e in sorted(graph.attached(node_id)))

    return GraphPatch(
        target_nodes=frozenset({node_id, sibling_id}),
        node_changes=(NodeChange('add', sibling, role=graph.roles.get(node_id, '')),),
        edge_changes=tuple(edges),
        attachment_changes=attachments,
    )


def swap_tool_patch(graph: WorkflowGraph, node_id: str, library: Optional[Library]) -> GraphPatch:
    """Drop the active tool (smallest id) and attach the best unattached alternative"""
    attached = sorted(graph.attached(node_id))
    if library is not None:
        tools = [e for e in attached if library.get(e) is not None and library.get(e).kind == 'tool']
    else:
        tools = attached
    if not tools:
        raise PatchYieldsInvalidGraph(f"'{node_id}' has no tool attachment to swap")

    active = tools[0]
    changes = [AttachmentChange('remove', node_id, active)]
    if library is not None:
        role = graph.roles.get(node_id, graph.node(node_id).instruction)
        candidates = [e for e in library.entries_of_kind('tool') if e.id not in attached]
        for entry_id, score in rank_entries(role, candidates, 1):
            if score > 0:
                changes.append(AttachmentChange('add', node_id, entry_id))
    return GraphPatch(target_nodes=frozenset({node_id}), attachment_changes=tuple(changes))


def upstream_of(graph: WorkflowGraph, node_id: str, trace: Optional[ExecutionTrace]) -> str:
    """Producer behind the node's latest interface violation"""
    if trace is not None:
        for signal in reversed(trace.signals_for(node_id)):
            upstream = signal.payload.get('upstream') if signal.kind == 'interface' else None
            if upstream and upstream in graph:
                return upstream
    predecessors = graph.predecessors(node_id)
    return predecessors[0] if predecessors else node_id


def reformat_patch(graph: WorkflowGraph, node_id: str, trace: Optional[ExecutionTrace], round_no: int) -> GraphPatch:
    upstream = upstream_of(graph, node_id, trace)
    detail = 'its input'
    if trace is not None:
        for signal in reversed(trace.signals_for(node_id)):
            if signal.kind == 'interface':
                detail = f"the {signal.payload['schema']} artifact at field '{signal.payload['field']}'"
                break
    producer = graph.node(upstream)
    note = (f"[repair round {round_no}] downstream {node_id} rejected {detail}; "
            f"emit every required field with its declared kind.")
    updated = producer.with_changes(instruction=f"{producer.instruction}\n\n{note}")
    return GraphPatch(target_nodes=frozenset({upstream}), node_changes=(NodeChange('modify', updated),))


def repair(graph: WorkflowGraph, node_id: str, action: RepairActionKind, trace: Optional[ExecutionTrace] = None,
           library: Optional[Library] = None, round_no: int = 1) -> GraphPatch:
    """Build the patch for an action and check that it applies cleanly"""
    if node_id not in graph:
        raise PatchYieldsInvalidGraph(f"cannot repair unknown node '{node_id}'")

    action = RepairActionKind(action)
    if action == RepairActionKind.RETRY_WITH_UPDATED_INSTRUCTION:
        patch = retry_patch(graph, node_id, trace, round_no)
    elif action == RepairActionKind.ADD_PARALLEL_SOLVER:
        patch = parallel_solver_patch(graph, node_id)
    elif action == RepairActionKind.SWAP_TOOL_BACKEND:
        patch = swap_tool_patch(graph, node_id, library)
    elif action == RepairActionKind.REFORMAT_UPSTREAM_OUTPUT:
        patch = reformat_patch(graph, node_id, trace, round_no)
    else:
        raise ValueError("escalate_no_action produces no patch")

    apply_patch(graph, patch)
    logger.info(f"{action.value} on '{node_id}' targets {sorted(patch.target_nodes)}")
    return patch
