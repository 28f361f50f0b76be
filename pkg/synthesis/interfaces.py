from typing import Dict, List, Optional

from errors import UnmappableSchemas
from graph.model import Edge, Node, WorkflowGraph
from graph.protocol import ANY_SCHEMA_ID, ArtifactSchema, BrokerMapping, InterfaceProtocol, SchemaRegistry
from utils.logger import setup_logger

logger = setup_logger('InterfaceSynthesis')


def derive_mapping(source: ArtifactSchema, target: ArtifactSchema, registry: SchemaRegistry) -> BrokerMapping:
    """Field mapping by exact name, then by the registry's rename table.

    Raises UnmappableSchemas when a required target field has no source.
    """
    rule = registry.rename_for(source.id, target.id)
    renamed_from: Dict[str, str] = {}
    if rule is not None:
        renamed_from = {tgt: src for src, tgt in rule.fields.items()}

    source_fields = set(source.field_names())
    fields: Dict[str, str] = {}
    for target_field in target.fields:
        if target_field.name in source_fields:
            fields[target_field.name] = target_field.name
        elif renamed_from.get(target_field.name) in source_fields:
            fields[target_field.name] = renamed_from[target_field.name]

    missing = [name for name in target.required if name not in fields]
    if missing:
        raise UnmappableSchemas(
            f"no mapping from '{source.id}' covers required '{target.id}' fields: {', '.join(missing)}")

    return BrokerMapping(
        source_schema=source.id,
        target_schema=target.id,
        fields=fields,
        record_renames=dict(rule.records) if rule else {},
        element_keys=dict(rule.element_keys) if rule else {},
    )


def _schema(registry: SchemaRegistry, schema_id: str) -> ArtifactSchema:
    schema = registry.get(schema_id)
    if schema is None:
        logger.warning(f"Schema '{schema_id}' is not registered; treating it as field-less")
        schema = ArtifactSchema(id=schema_id)
    return schema


def _needs_broker(producer: Node, consumer: Node) -> bool:
    produced = producer.output_schema
    expected = consumer.input_schema
    if not produced or produced == ANY_SCHEMA_ID or not expected or expected == ANY_SCHEMA_ID:
        return False
    return produced != expected


def synthesize_interfaces(graph: WorkflowGraph, registry: SchemaRegistry) -> WorkflowGraph:
    """Assign every edge its producer's output schema and insert a broker on
    each edge whose endpoint schemas differ"""
    nodes: Dict[str, Node] = {n.id: n for n in graph.nodes}
    edges: List[Edge] = []
    roles = dict(graph.roles)
    mappings: Dict[str, BrokerMapping] = dict(graph.protocol.mappings)
    schemas: Dict[str, ArtifactSchema] = dict(graph.protocol.schemas)

    def keep(schema_id: Optional[str]) -> str:
        if not schema_id or schema_id == ANY_SCHEMA_ID:
            return ANY_SCHEMA_ID
        schemas.setdefault(schema_id, _schema(registry, schema_id))
        return schema_id

    for node in graph.nodes:
        keep(node.input_schema)
        keep(node.output_schema)

    for edge in graph.edges:
        producer = nodes[edge.source]
        consumer = nodes[edge.target]

        if not _needs_broker(producer, consumer):
            edges.append(Edge(edge.source, edge.target, keep(producer.output_schema)))
            continue

        source = schemas[producer.output_schema]
        target = schemas[consumer.input_schema]
        mapping = derive_mapping(source, target, registry)

        broker_id = f"broker_{producer.id}_{consumer.id}"
        nodes[broker_id] = Node(
            id=broker_id,
            kind='broker',
            instruction=f"Validate the {source.id} artifact from {producer.id} and convert it into "
                        f"{target.id} for {consumer.id}",
            executor_binding='builtin:broker',
            input_schema=source.id,
            output_schema=target.id,
            phase='broker',
        )
        roles[broker_id] = f"convert {source.id} to {target.id}"
        mappings[broker_id] = mapping
        edges.append(Edge(producer.id, broker_id, source.id))
        edges.append(Edge(broker_id, consumer.id, target.id))
        logger.info(f"Inserted broker '{broker_id}' ({source.id} -> {target.id})")

    return WorkflowGraph.build(
        nodes=nodes.values(),
        edges=edges,
        attachments=graph.attachments,
        protocol=InterfaceProtocol(schemas=schemas, mappings=mappings),
        roles=roles,
    )
