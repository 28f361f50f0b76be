"""Graph files and reference-graph import"""

from typing import Any, Dict, List, Union

import networkx as nx

from errors import CyclicReference, EmptyGraph, MalformedDocument
from utils.file_utils import dump_canonical, parse_json_text, read_json, write_canonical
from utils.logger import setup_logger
from .model import Edge, GraphSkeleton, Node, WorkflowGraph
from .protocol import InterfaceProtocol

GRAPH_KEYS = ('nodes', 'edges', 'attachments', 'protocol', 'roles')
ROLE_LABEL_KEYS = ('role', 'operator', 'label', 'name')

logger = setup_logger('GraphIO')


def graph_from_dict(data: Any) -> WorkflowGraph:
    if not isinstance(data, dict):
        raise MalformedDocument("graph document must be a JSON object")
    unknown = sorted(set(data) - set(GRAPH_KEYS))
    if unknown:
        raise MalformedDocument(f"unknown graph keys: {', '.join(unknown)}")

    nodes = data.get('nodes', [])
    edges = data.get('edges', [])
    attachments = data.get('attachments', {})
    roles = data.get('roles', {})
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise MalformedDocument("graph nodes and edges must be lists")
    if not isinstance(attachments, dict) or not all(isinstance(v, list) for v in attachments.values()):
        raise MalformedDocument("graph attachments must map node ids to lists of entry ids")
    if not isinstance(roles, dict):
        raise MalformedDocument("graph roles must be an object")

    return WorkflowGraph.build(
        nodes=[Node.from_dict(n) for n in nodes],
        edges=[Edge.from_dict(e) for e in edges],
        attachments=attachments,
        protocol=InterfaceProtocol.from_dict(data.get('protocol')),
        roles=roles,
    )


def serialize_graph(graph: WorkflowGraph) -> str:
    """Canonical, key-sorted JSON text"""
    return dump_canonical(graph.to_dict())


def deserialize_graph(text: str) -> WorkflowGraph:
    return graph_from_dict(parse_json_text(text, 'graph'))


def load_graph(filename: str) -> WorkflowGraph:
    return graph_from_dict(read_json(filename, 'graph'))


def save_graph(graph: WorkflowGraph, filename: str) -> None:
    write_canonical(graph.to_dict(), filename)


def _role_text(raw: Dict[str, Any]) -> str:
    for key in ROLE_LABEL_KEYS:
        if isinstance(raw.get(key), str) and raw[key].strip():
            return raw[key].strip()
    return str(raw.get('id', ''))


def import_reference_graph(document: Union[str, Dict[str, Any]]) -> GraphSkeleton:
    """Map an external node/edge list onto a skeleton of role nodes.

    Each external node becomes one agent node carrying its role or operator
    label; edges are kept with the `any` schema. No attachments, no protocol.
    """
    data = parse_json_text(document, 'reference graph') if isinstance(document, str) else document
    if not isinstance(data, dict):
        raise MalformedDocument("reference graph must be a JSON object")

    raw_nodes = data.get('nodes') or []
    raw_edges = data.get('edges') or []
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise MalformedDocument("reference graph nodes and edges must be lists")
    if not raw_nodes:
        raise EmptyGraph("reference graph has no nodes")

    nodes: List[Node] = []
    roles: Dict[str, str] = {}
    for raw in raw_nodes:
        if isinstance(raw, str):
            raw = {'id': raw}
        if not isinstance(raw, dict) or not raw.get('id'):
            raise MalformedDocument("reference graph nodes need an id")
        node_id = str(raw['id'])
        if node_id in roles:
            raise MalformedDocument(f"reference graph repeats node '{node_id}'")
        role = _role_text(raw)
        roles[node_id] = role
        nodes.append(Node(id=node_id, kind='agent', instruction=role))

    edges = [Edge.from_dict(raw) for raw in raw_edges]
    edges = [Edge(source=e.source, target=e.target) for e in edges]
    for edge in edges:
        if edge.source not in roles or edge.target not in roles:
            raise MalformedDocument(f"reference edge {edge.source}->{edge.target} names an unknown node")
        if edge.source == edge.target:
            raise CyclicReference(f"reference graph has a self-loop on '{edge.source}'")

    digraph = nx.DiGraph()
    digraph.add_nodes_from(roles)
    digraph.add_edges_from((e.source, e.target) for e in edges)
    if not nx.is_directed_acyclic_graph(digraph):
        cycle = nx.find_cycle(digraph)
        raise CyclicReference(f"reference graph contains a loop through '{cycle[0][0]}'")

    skeleton = WorkflowGraph.build(nodes=nodes, edges=edges, roles=roles)
    logger.info(f"Imported reference graph with {len(nodes)} nodes and {len(edges)} edges")
    return skeleton


def load_reference_graph(filename: str) -> GraphSkeleton:
    return import_reference_graph(read_json(filename, 'reference graph'))
