from typing import Dict, Iterable, List, Optional

import networkx as nx

from errors import CyclicGraph
from utils.report import ValidationReport
from .model import WorkflowGraph
from .protocol import ANY_SCHEMA_ID


def validate_graph(graph: WorkflowGraph, known_entries: Optional[Iterable[str]] = None) -> ValidationReport:
    """Report every reason the graph is not executable; empty means executable"""
    report = ValidationReport()
    node_ids = graph.node_ids()
    known = set(node_ids)

    if len(known) != len(node_ids):
        duplicates = sorted({n for n in node_ids if node_ids.count(n) > 1})
        report.add('duplicate_node', 'nodes', f"node ids appear more than once: {', '.join(duplicates)}")

    # Dangling edges
    for edge in graph.edges:
        for endpoint in (edge.source, edge.target):
            if endpoint not in known:
                report.add('dangling_edge', f"{edge.source}->{edge.target}",
                           f"edge endpoint '{endpoint}' is not a node")

    # Cycles
    digraph = graph.to_networkx()
    if not nx.is_directed_acyclic_graph(digraph):
        cycle = nx.find_cycle(digraph)
        path = ' -> '.join([u for u, _ in cycle] + [cycle[0][0]])
        report.add('cycle', 'edges', f"edges form a cycle: {path}")

    # Schemas carried on edges
    for edge in graph.edges:
        if edge.source not in known or edge.target not in known:
            continue
        where = f"{edge.source}->{edge.target}"
        if not graph.protocol.knows(edge.schema):
            report.add('unknown_schema', where, f"edge schema '{edge.schema}' is not registered")
        producer = graph.node(edge.source)
        if edge.schema != ANY_SCHEMA_ID and producer.output_schema and producer.output_schema != edge.schema:
            report.add('edge_schema', where,
                       f"edge carries '{edge.schema}' but '{producer.id}' produces '{producer.output_schema}'")

        consumer = graph.node(edge.target)
        if producer.kind == 'broker' or consumer.kind == 'broker':
            continue
        if producer.output_schema and consumer.input_schema and consumer.input_schema != ANY_SCHEMA_ID \
                and producer.output_schema != consumer.input_schema:
            report.add('interface', where,
                       f"'{producer.id}' produces '{producer.output_schema}' but '{consumer.id}' "
                       f"expects '{consumer.input_schema}' and no broker sits between them")

    # Brokers sit on exactly one handoff
    for node in graph.nodes:
        if node.kind != 'broker':
            continue
        inbound = len(graph.in_edges(node.id))
        outbound = len(graph.out_edges(node.id))
        if inbound != 1 or outbound != 1:
            report.add('broker_degree', node.id,
                       f"broker has {inbound} inbound and {outbound} outbound edges, expected 1 and 1")
        if node.id not in graph.protocol.mappings:
            report.add('broker_mapping', node.id, "broker has no field mapping in the protocol")

    # Attachments and roles
    entries = set(known_entries) if known_entries is not None else None
    for node_id, attached in graph.attachments.items():
        if node_id not in known:
            report.add('dangling_attachment', node_id, "attachments name a node that does not exist")
        if entries is not None:
            for entry_id in sorted(set(attached) - entries):
                report.add('unknown_attachment', node_id, f"attached entry '{entry_id}' is not in the library")
    for node_id in graph.roles:
        if node_id not in known:
            report.add('dangling_role', node_id, "role names a node that does not exist")

    return report


def topological_stages(graph: WorkflowGraph) -> List[List[str]]:
    """Stage i holds the nodes whose longest path from any source has length i"""
    digraph = graph.to_networkx()
    try:
        generations = list(nx.topological_generations(digraph))
    except nx.NetworkXUnfeasible as e:
        raise CyclicGraph("graph has a cycle; stages are undefined") from e
    return [sorted(stage) for stage in generations]


def stage_index(graph: WorkflowGraph) -> Dict[str, int]:
    return {node_id: i for i, stage in enumerate(topological_stages(graph)) for node_id in stage}


def stage_labels(graph: WorkflowGraph) -> List[List[str]]:
    """Per stage, the sorted set of node phases"""
    labels = []
    for stage in topological_stages(graph):
        labels.append(sorted({graph.node(node_id).phase for node_id in stage}))
    return labels
