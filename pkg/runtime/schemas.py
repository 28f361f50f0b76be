from typing import Any, Optional

from graph.protocol import ANY_SCHEMA_ID, ArtifactSchema
from .messages import EvidenceSignal, interface_signal


def value_matches_kind(value: Any, kind: str) -> bool:
    """True when value carries the declared field kind"""
    if kind.startswith('list-of-'):
        inner = kind[len('list-of-'):]
        return isinstance(value, list) and all(value_matches_kind(v, inner) for v in value)
    if kind in ('text', 'path'):
        return isinstance(value, str)
    if kind == 'integer':
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == 'number':
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == 'boolean':
        return isinstance(value, bool)
    if kind == 'record':
        return isinstance(value, dict)
    return False


def validate_artifact(artifact: Any, schema: ArtifactSchema, node: str = '',
                      upstream: Optional[str] = None) -> Optional[EvidenceSignal]:
    """None when the artifact satisfies the schema, otherwise a fail-severity
    interface signal naming the first violating field in declaration order"""
    if schema.id == ANY_SCHEMA_ID:
        return None

    if not isinstance(artifact, dict):
        first = schema.required[0] if schema.required else '<artifact>'
        return interface_signal(node, first, schema.id, 'not_a_record', upstream)

    for schema_field in schema.fields:
        if schema_field.name in artifact:
            if not value_matches_kind(artifact[schema_field.name], schema_field.kind):
                return interface_signal(node, schema_field.name, schema.id,
                                        f"expected {schema_field.kind}", upstream)
        elif schema_field.name in schema.required:
            return interface_signal(node, schema_field.name, schema.id, 'missing', upstream)

    return None
