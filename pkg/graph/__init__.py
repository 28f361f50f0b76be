"""Workflow graph model, validation, stages, patches and serialization"""

from .io import (deserialize_graph, graph_from_dict, import_reference_graph, load_graph,
                 load_reference_graph, save_graph, serialize_graph)
from .model import (NODE_KINDS, PHASES, AttachmentChange, Edge, EdgeChange, GraphPatch, SchemaChange,
                    GraphSkeleton, Node, NodeChange, WorkflowGraph)
from .patching import apply_patch, check_locality, diff_graphs, patch_closure
from .protocol import (ANY_SCHEMA, ANY_SCHEMA_ID, ArtifactSchema, BrokerMapping, InterfaceProtocol,
                       RenameRule, SchemaField, SchemaRegistry)
from .validation import stage_index, stage_labels, topological_stages, validate_graph

__all__ = [
    'deserialize_graph', 'graph_from_dict', 'import_reference_graph', 'load_graph',
    'load_reference_graph', 'save_graph', 'serialize_graph',
    'NODE_KINDS', 'PHASES', 'AttachmentChange', 'Edge', 'EdgeChange', 'GraphPatch',
    'GraphSkeleton', 'Node', 'NodeChange', 'SchemaChange', 'WorkflowGraph',
    'apply_patch', 'check_locality', 'diff_graphs', 'patch_closure',
    'ANY_SCHEMA', 'ANY_SCHEMA_ID', 'ArtifactSchema', 'BrokerMapping', 'InterfaceProtocol',
    'RenameRule', 'SchemaField', 'SchemaRegistry',
    'stage_index', 'stage_labels', 'topological_stages', 'validate_graph',
]
