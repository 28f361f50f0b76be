"""Locality-checked graph patches and graph diffs"""

from typing import Dict, List, Set

from errors import PatchOutOfLocality, PatchYieldsInvalidGraph
from utils.logger import setup_logger
from .model import AttachmentChange, Edge, EdgeChange, GraphPatch, NodeChange, SchemaChange, WorkflowGraph
from .protocol import InterfaceProtocol
from .validation import validate_graph

logger = setup_logger('GraphPatching')


def check_locality(graph: WorkflowGraph, patch: GraphPatch) -> None:
    """Every change must touch a target node or an edge incident to one"""
    targets = patch.target_nodes
    added = {c.node.id for c in patch.node_changes if c.op == 'add'}
    unknown = sorted(set(targets) - set(graph.node_ids()) - added)
    if unknown:
        raise PatchOutOfLocality(f"target nodes do not exist: {', '.join(unknown)}")

    for change in patch.node_changes:
        if change.node.id not in targets:
            raise PatchOutOfLocality(f"node change on '{change.node.id}' outside the implicated set")
    for change in patch.edge_changes:
        if change.edge.source not in targets and change.edge.target not in targets:
            raise PatchOutOfLocality(
                f"edge change {change.edge.source}->{change.edge.target} touches no implicated node")
    for change in patch.attachment_changes:
        if change.node_id not in targets:
            raise PatchOutOfLocality(f"attachment change on '{change.node_id}' outside the implicated set")


def apply_patch(graph: WorkflowGraph, patch: GraphPatch, known_entries=None) -> WorkflowGraph:
    """Return a new graph with the patch applied; the input graph is left untouched.

    Changes apply in a fixed order: edge removals, attachment removals, node
    removals, node adds and modifies, edge adds, attachment adds. Schema
    changes land in the protocol table before the result is validated.
    """
    check_locality(graph, patch)

    nodes = {n.id: n for n in graph.nodes}
    edges: Dict[tuple, Edge] = {e.key: e for e in graph.edges}
    attachments: Dict[str, Set[str]] = {k: set(v) for k, v in graph.attachments.items()}
    roles = dict(graph.roles)
    mappings = dict(graph.protocol.mappings)
    schemas = dict(graph.protocol.schemas)

    for change in patch.edge_changes:
        if change.op == 'remove':
            if change.edge.key not in edges:
                raise PatchYieldsInvalidGraph(
                    f"cannot remove missing edge {change.edge.source}->{change.edge.target}")
            del edges[change.edge.key]

    for change in patch.attachment_changes:
        if change.op == 'remove':
            held = attachments.get(change.node_id, set())
            if change.entry_id not in held:
                raise PatchYieldsInvalidGraph(
                    f"'{change.node_id}' has no attachment '{change.entry_id}' to remove")
            held.discard(change.entry_id)

    for change in patch.node_changes:
        if change.op != 'remove':
            continue
        node_id = change.node.id
        if node_id not in nodes:
            raise PatchYieldsInvalidGraph(f"cannot remove missing node '{node_id}'")
        del nodes[node_id]
        edges = {k: e for k, e in edges.items() if node_id not in (e.source, e.target)}
        attachments.pop(node_id, None)
        roles.pop(node_id, None)
        mappings.pop(node_id, None)

    for change in patch.node_changes:
        if change.op == 'remove':
            continue
        node_id = change.node.id
        if change.op == 'add' and node_id in nodes:
            raise PatchYieldsInvalidGraph(f"node '{node_id}' already exists")
        if change.op == 'modify' and node_id not in nodes:
            raise PatchYieldsInvalidGraph(f"cannot modify missing node '{node_id}'")
        nodes[node_id] = change.node
        if change.role is not None:
            roles[node_id] = change.role
        if change.node.kind != 'broker':
            mappings.pop(node_id, None)
        elif change.mapping is not None:
            mappings[node_id] = change.mapping

    for change in patch.edge_changes:
        if change.op == 'add':
            if change.edge.key in edges:
                raise PatchYieldsInvalidGraph(
                    f"edge {change.edge.source}->{change.edge.target} already exists")
            edges[change.edge.key] = change.edge

    for change in patch.attachment_changes:
        if change.op == 'add':
            attachments.setdefault(change.node_id, set()).add(change.entry_id)

    for change in patch.schema_changes:
        if change.op == 'set':
            schemas[change.schema.id] = change.schema
        elif schemas.pop(change.schema.id, None) is None:
            raise PatchYieldsInvalidGraph(f"cannot remove unregistered schema '{change.schema.id}'")

    patched = WorkflowGraph.build(
        nodes=nodes.values(),
        edges=edges.values(),
        attachments=attachments,
        protocol=InterfaceProtocol(schemas=schemas, mappings=mappings),
        roles=roles,
    )

    report = validate_graph(patched, known_entries)
    if not report.ok:
        raise PatchYieldsInvalidGraph(f"patched graph does not validate: {report.first()}",
                                      violations=report.lines())

    logger.debug(f"Applied patch on {sorted(patch.target_nodes)}")
    return patched


def _mapping_of(graph: WorkflowGraph, node_id: str):
    return graph.protocol.mappings.get(node_id)


def diff_graphs(before: WorkflowGraph, after: WorkflowGraph) -> GraphPatch:
    """Minimal patch taking `before` to `after`, protocol schema table included"""
    old_nodes = {n.id: n for n in before.nodes}
    new_nodes = {n.id: n for n in after.nodes}
    removed_ids = set(old_nodes) - set(new_nodes)

    node_changes: List[NodeChange] = []
    for node_id in sorted(removed_ids):
        node_changes.append(NodeChange('remove', old_nodes[node_id]))
    for node_id in sorted(new_nodes):
        node = new_nodes[node_id]
        role = after.roles.get(node_id, '')
        mapping = _mapping_of(after, node_id)
        if node_id not in old_nodes:
            node_changes.append(NodeChange('add', node, role=role, mapping=mapping))
        elif (node != old_nodes[node_id] or role != before.roles.get(node_id, '')
              or mapping != _mapping_of(before, node_id)):
            node_changes.append(NodeChange('modify', node, role=role, mapping=mapping))

    old_edges = {e.key: e for e in before.edges}
    new_edges = {e.key: e for e in after.edges}
    edge_changes: List[EdgeChange] = []
    for key in sorted(set(old_edges) - set(new_edges)):
        edge = old_edges[key]
        # removing a node drops its incident edges
        if edge.source in removed_ids or edge.target in removed_ids:
            continue
        edge_changes.append(EdgeChange('remove', edge))
    for key in sorted(set(new_edges) - set(old_edges)):
        edge_changes.append(EdgeChange('add', new_edges[key]))

    attachment_changes: List[AttachmentChange] = []
    for node_id in sorted(set(before.attachments) | set(after.attachments)):
        old = before.attached(node_id)
        new = after.attached(node_id)
        if node_id not in removed_ids:
            for entry_id in sorted(old - new):
                attachment_changes.append(AttachmentChange('remove', node_id, entry_id))
        for entry_id in sorted(new - old):
            attachment_changes.append(AttachmentChange('add', node_id, entry_id))

    old_schemas = before.protocol.schemas
    new_schemas = after.protocol.schemas
    schema_changes: List[SchemaChange] = []
    for schema_id in sorted(set(old_schemas) - set(new_schemas)):
        schema_changes.append(SchemaChange('remove', old_schemas[schema_id]))
    for schema_id in sorted(new_schemas):
        if old_schemas.get(schema_id) != new_schemas[schema_id]:
            schema_changes.append(SchemaChange('set', new_schemas[schema_id]))

    targets = {c.node.id for c in node_changes}
    for change in edge_changes:
        targets.update((change.edge.source, change.edge.target))
    targets.update(c.node_id for c in attachment_changes)

    return GraphPatch(
        target_nodes=frozenset(targets),
        node_changes=tuple(node_changes),
        edge_changes=tuple(edge_changes),
        attachment_changes=tuple(attachment_changes),
        schema_changes=tuple(schema_changes),
    )


def patch_closure(graph: WorkflowGraph, patch: GraphPatch) -> Set[str]:
    """Node ids a patch may affect: its targets plus their incident neighbours"""
    closure = set(patch.target_nodes)
    for edge in graph.edges:
        if edge.source in patch.target_nodes or edge.target in patch.target_nodes:
            closure.update((edge.source, edge.target))
    return closure
