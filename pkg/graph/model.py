from dataclasses import dataclass, field, replace
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from errors import MalformedDocument
from .protocol import ANY_SCHEMA_ID, ArtifactSchema, BrokerMapping, InterfaceProtocol

NODE_KINDS = ('agent', 'broker', 'tool', 'external', 'evaluator', 'integrator')
PHASES = ('profiling', 'sandbox', 'registration', 'execution', 'broker',
          'evaluation', 'integration', 'reporting')
NODE_KEYS = ('id', 'kind', 'instruction', 'executor_binding', 'input_schema',
             'output_schema', 'phase', 'alternate_of')


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    instruction: str = ''
    executor_binding: str = ''
    input_schema: Optional[str] = None
    output_schema: Optional[str] = None
    phase: str = 'execution'
    alternate_of: Optional[str] = None

    def with_changes(self, **changes) -> 'Node':
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in NODE_KEYS}

    @classmethod
    def from_dict(cls, data: Any) -> 'Node':
        if not isinstance(data, dict):
            raise MalformedDocument("graph node must be an object")
        unknown = sorted(set(data) - set(NODE_KEYS))
        if unknown:
            raise MalformedDocument(f"unknown node keys: {', '.join(unknown)}")
        if not isinstance(data.get('id'), str) or not data['id']:
            raise MalformedDocument("graph node needs a non-empty id")
        if data.get('kind') not in NODE_KINDS:
            raise MalformedDocument(f"node '{data['id']}' has unknown kind '{data.get('kind')}'")
        phase = data.get('phase') or 'execution'
        if phase not in PHASES:
            raise MalformedDocument(f"node '{data['id']}' has unknown phase '{phase}'")
        return cls(
            id=data['id'],
            kind=data['kind'],
            instruction=data.get('instruction') or '',
            executor_binding=data.get('executor_binding') or '',
            input_schema=data.get('input_schema'),
            output_schema=data.get('output_schema'),
            phase=phase,
            alternate_of=data.get('alternate_of'),
        )


@dataclass(frozen=True)
class Edge:
    """A typed handoff source -> target (serialized as from/to)"""
    source: str
    target: str
    schema: str = ANY_SCHEMA_ID

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.source, self.target, self.schema)

    def to_dict(self) -> Dict[str, str]:
        return {'from': self.source, 'to': self.target, 'schema': self.schema}

    @classmethod
    def from_dict(cls, data: Any) -> 'Edge':
        if isinstance(data, (list, tuple)) and len(data) in (2, 3):
            return cls(*[str(v) for v in data])
        if not isinstance(data, dict) or 'from' not in data or 'to' not in data:
            raise MalformedDocument("graph edge needs 'from' and 'to'")
        unknown = sorted(set(data) - {'from', 'to', 'schema'})
        if unknown:
            raise MalformedDocument(f"unknown edge keys: {', '.join(unknown)}")
        return cls(source=data['from'], target=data['to'], schema=data.get('schema') or ANY_SCHEMA_ID)


@dataclass(frozen=True)
class WorkflowGraph:
    """Roles, nodes, edges, attachment map and interface protocol.

    Build instances through WorkflowGraph.build so nodes, edges and
    attachments are held in canonical order; equality is then structural.
    """
    nodes: Tuple[Node, ...] = ()
    edges: Tuple[Edge, ...] = ()
    attachments: Mapping[str, FrozenSet[str]] = field(default_factory=dict)
    protocol: InterfaceProtocol = field(default_factory=InterfaceProtocol)
    roles: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def build(cls, nodes: Iterable[Node] = (), edges: Iterable[Edge] = (),
              attachments: Optional[Mapping[str, Iterable[str]]] = None,
              protocol: Optional[InterfaceProtocol] = None,
              roles: Optional[Mapping[str, str]] = None) -> 'WorkflowGraph':
        attached = {k: frozenset(v) for k, v in sorted((attachments or {}).items()) if v}
        return cls(
            nodes=tuple(sorted(nodes, key=lambda n: n.id)),
            edges=tuple(sorted(set(edges), key=lambda e: e.key)),
            attachments=attached,
            protocol=protocol or InterfaceProtocol(),
            roles={k: v for k, v in sorted((roles or {}).items()) if v},
        )

    def evolve(self, **changes) -> 'WorkflowGraph':
        values = {
            'nodes': self.nodes,
            'edges': self.edges,
            'attachments': self.attachments,
            'protocol': self.protocol,
            'roles': self.roles,
        }
        values.update(changes)
        return WorkflowGraph.build(**values)

    def node_ids(self) -> List[str]:
        return [n.id for n in self.nodes]

    def node(self, node_id: str) -> Optional[Node]:
        for n in self.nodes:
            if n.id == node_id:
                return n
        return None

    def __contains__(self, node_id: str) -> bool:
        return self.node(node_id) is not None

    def in_edges(self, node_id: str) -> List[Edge]:
        return [e for e in self.edges if e.target == node_id]

    def out_edges(self, node_id: str) -> List[Edge]:
        return [e for e in self.edges if e.source == node_id]

    def predecessors(self, node_id: str) -> List[str]:
        return sorted({e.source for e in self.in_edges(node_id)})

    def successors(self, node_id: str) -> List[str]:
        return sorted({e.target for e in self.out_edges(node_id)})

    def attached(self, node_id: str) -> FrozenSet[str]:
        return self.attachments.get(node_id, frozenset())

    def has_edge(self, source: str, target: str) -> bool:
        return any(e.source == source and e.target == target for e in self.edges)

    def to_networkx(self) -> nx.DiGraph:
        """Directed view over nodes and edges whose endpoints exist"""
        digraph = nx.DiGraph()
        digraph.add_nodes_from(self.node_ids())
        known = set(self.node_ids())
        digraph.add_edges_from((e.source, e.target) for e in self.edges
                               if e.source in known and e.target in known)
        return digraph

    def descendants(self, node_id: str) -> List[str]:
        if node_id not in self:
            return []
        return sorted(nx.descendants(self.to_networkx(), node_id))

    def ancestors(self, node_id: str) -> List[str]:
        if node_id not in self:
            return []
        return sorted(nx.ancestors(self.to_networkx(), node_id))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'nodes': [n.to_dict() for n in self.nodes],
            'edges': [e.to_dict() for e in self.edges],
            'attachments': {k: sorted(v) for k, v in self.attachments.items()},
            'protocol': self.protocol.to_dict(),
            'roles': dict(self.roles),
        }


GraphSkeleton = WorkflowGraph


@dataclass(frozen=True)
class NodeChange:
    """op add/remove/modify; role None keeps the current role, '' clears it"""
    op: str
    node: Node
    role: Optional[str] = None
    mapping: Optional[BrokerMapping] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'op': self.op,
            'node': self.node.to_dict(),
            'role': self.role,
            'mapping': self.mapping.to_dict() if self.mapping else None,
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'NodeChange':
        if not isinstance(data, dict) or data.get('op') not in ('add', 'remove', 'modify'):
            raise MalformedDocument("node change needs op add, remove or modify")
        mapping = data.get('mapping')
        return cls(op=data['op'], node=Node.from_dict(data.get('node')), role=data.get('role'),
                   mapping=BrokerMapping.from_dict(mapping) if mapping else None)


@dataclass(frozen=True)
class EdgeChange:
    op: str
    edge: Edge

    def to_dict(self) -> Dict[str, Any]:
        return {'op': self.op, 'edge': self.edge.to_dict()}

    @classmethod
    def from_dict(cls, data: Any) -> 'EdgeChange':
        if not isinstance(data, dict) or data.get('op') not in ('add', 'remove'):
            raise MalformedDocument("edge change needs op add or remove")
        return cls(op=data['op'], edge=Edge.from_dict(data.get('edge')))


@dataclass(frozen=True)
class AttachmentChange:
    op: str
    node_id: str
    entry_id: str

    def to_dict(self) -> Dict[str, Any]:
        return {'op': self.op, 'node_id': self.node_id, 'entry_id': self.entry_id}

    @classmethod
    def from_dict(cls, data: Any) -> 'AttachmentChange':
        if not isinstance(data, dict) or data.get('op') not in ('add', 'remove'):
            raise MalformedDocument("attachment change needs op add or remove")
        return cls(op=data['op'], node_id=data['node_id'], entry_id=data['entry_id'])


@dataclass(frozen=True)
class SchemaChange:
    """op set registers or replaces a protocol schema; remove drops it"""
    op: str
    schema: ArtifactSchema

    def to_dict(self) -> Dict[str, Any]:
        return {'op': self.op, 'schema': self.schema.to_dict()}

    @classmethod
    def from_dict(cls, data: Any) -> 'SchemaChange':
        if not isinstance(data, dict) or data.get('op') not in ('set', 'remove'):
            raise MalformedDocument("schema change needs op set or remove")
        return cls(op=data['op'], schema=ArtifactSchema.from_dict(data.get('schema')))


@dataclass(frozen=True)
class GraphPatch:
    target_nodes: FrozenSet[str] = frozenset()
    node_changes: Tuple[NodeChange, ...] = ()
    edge_changes: Tuple[EdgeChange, ...] = ()
    attachment_changes: Tuple[AttachmentChange, ...] = ()
    schema_changes: Tuple[SchemaChange, ...] = ()

    def is_empty(self) -> bool:
        return not (self.node_changes or self.edge_changes or self.attachment_changes or self.schema_changes)

    def touched_nodes(self) -> FrozenSet[str]:
        touched = {c.node.id for c in self.node_changes}
        for change in self.edge_changes:
            touched.update((change.edge.source, change.edge.target))
        touched.update(c.node_id for c in self.attachment_changes)
        return frozenset(touched)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'target_nodes': sorted(self.target_nodes),
            'node_changes': [c.to_dict() for c in self.node_changes],
            'edge_changes': [c.to_dict() for c in self.edge_changes],
            'attachment_changes': [c.to_dict() for c in self.attachment_changes],
            'schema_changes': [c.to_dict() for c in self.schema_changes],
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'GraphPatch':
        if not isinstance(data, dict):
            raise MalformedDocument("graph patch must be an object")
        return cls(
            target_nodes=frozenset(data.get('target_nodes', [])),
            node_changes=tuple(NodeChange.from_dict(c) for c in data.get('node_changes', [])),
            edge_changes=tuple(EdgeChange.from_dict(c) for c in data.get('edge_changes', [])),
            attachment_changes=tuple(AttachmentChange.from_dict(c) for c in data.get('attachment_changes', [])),
            schema_changes=tuple(SchemaChange.from_dict(c) for c in data.get('schema_changes', [])),
        )
