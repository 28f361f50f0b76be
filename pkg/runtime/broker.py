"""Native broker execution: rewrite a source artifact into the target schema"""

from typing import Any, Dict, List, Tuple

from errors import UnmappableSchemas
from graph.protocol import ANY_SCHEMA_ID, ArtifactSchema, BrokerMapping
from .messages import EvidenceSignal, output_signal
from .schemas import validate_artifact


def _convert_element(element: Any, mapping: BrokerMapping, element_key: str) -> Any:
    if not isinstance(element, dict):
        return element
    renamed = {mapping.record_renames.get(k, k): v for k, v in element.items()}
    if not element_key:
        return renamed
    if element_key not in renamed:
        raise UnmappableSchemas(f"record lacks key '{element_key}' needed by the target schema")
    return renamed[element_key]


def broker_transform(artifact: Any, mapping: BrokerMapping, target_schema: ArtifactSchema,
                     node: str = 'broker') -> Tuple[Dict[str, Any], List[EvidenceSignal]]:
    """Map fields across, renaming record keys element by element.

    List cardinality is preserved exactly; unmapped optional target fields
    are omitted. An empty list payload yields a warn-severity output signal.
    """
    if target_schema.id == ANY_SCHEMA_ID:
        return dict(artifact) if isinstance(artifact, dict) else {'value': artifact}, \
            [output_signal(node, 1.0)]
    if not isinstance(artifact, dict):
        raise UnmappableSchemas(f"broker '{node}' received a non-record artifact")

    converted: Dict[str, Any] = {}
    empty_lists = []
    records = 0

    for target_field in target_schema.fields:
        source_field = mapping.fields.get(target_field.name)
        if source_field is None or source_field not in artifact:
            if target_field.name in target_schema.required:
                raise UnmappableSchemas(
                    f"no source field maps to required field '{target_field.name}' of '{target_schema.id}'")
            continue

        value = artifact[source_field]
        if isinstance(value, list):
            element_key = mapping.element_keys.get(target_field.name, '')
            value = [_convert_element(e, mapping, element_key) for e in value]
            if len(value) != len(artifact[source_field]):
                raise UnmappableSchemas(f"broker changed the cardinality of '{source_field}'")
            if not value:
                empty_lists.append(target_field.name)
            records += len(value)
        converted[target_field.name] = value

    violation = validate_artifact(converted, target_schema, node)
    if violation is not None:
        raise UnmappableSchemas(
            f"broker output violates '{target_schema.id}' at field '{violation.payload['field']}'")

    if empty_lists:
        signal = output_signal(node, 1.0, severity='warn', records=0, note=f"empty input: {', '.join(empty_lists)}")
    else:
        signal = output_signal(node, 1.0, records=records)
    return converted, [signal]
