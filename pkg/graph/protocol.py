"""Interface protocol: artifact schemas carried along edges and broker field mappings."""

import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from errors import MalformedDocument
from utils.file_utils import read_json

SCALAR_KINDS = ('text', 'integer', 'number', 'boolean', 'path', 'record')
ANY_SCHEMA_ID = 'any'


def is_valid_field_kind(kind: str) -> bool:
    if kind in SCALAR_KINDS:
        return True
    if kind.startswith('list-of-'):
        return is_valid_field_kind(kind[len('list-of-'):])
    return False


@dataclass(frozen=True)
class SchemaField:
    name: str
    kind: str


@dataclass(frozen=True)
class ArtifactSchema:
    id: str
    fields: Tuple[SchemaField, ...] = ()
    required: Tuple[str, ...] = ()
    version: int = 1

    def field_names(self) -> List[str]:
        return [f.name for f in self.fields]

    def field_kind(self, name: str) -> Optional[str]:
        for f in self.fields:
            if f.name == name:
                return f.kind
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'fields': [{'name': f.name, 'kind': f.kind} for f in self.fields],
            'required': list(self.required),
            'version': self.version,
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'ArtifactSchema':
        if not isinstance(data, dict) or not isinstance(data.get('id'), str):
            raise MalformedDocument("artifact schema needs an id")
        fields = []
        for raw in data.get('fields', []):
            if not isinstance(raw, dict) or not is_valid_field_kind(str(raw.get('kind', ''))):
                raise MalformedDocument(f"schema '{data['id']}' has a field with an unknown kind")
            fields.append(SchemaField(name=raw['name'], kind=raw['kind']))
        required = tuple(data.get('required', []))
        names = {f.name for f in fields}
        if not set(required) <= names:
            raise MalformedDocument(f"schema '{data['id']}' requires undeclared fields")
        version = data.get('version', 1)
        if not isinstance(version, int) or version < 1:
            raise MalformedDocument(f"schema '{data['id']}' version must be a positive integer")
        return cls(id=data['id'], fields=tuple(fields), required=required, version=version)


ANY_SCHEMA = ArtifactSchema(id=ANY_SCHEMA_ID)


@dataclass(frozen=True)
class BrokerMapping:
    """How a broker rewrites a source artifact into the target schema.

    fields maps target field -> source field; record_renames renames keys
    inside list-of-record values; element_keys picks one record key per
    element when a record list feeds a scalar list.
    """
    source_schema: str
    target_schema: str
    fields: Dict[str, str] = field(default_factory=dict)
    record_renames: Dict[str, str] = field(default_factory=dict)
    element_keys: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'source_schema': self.source_schema,
            'target_schema': self.target_schema,
            'fields': dict(self.fields),
            'record_renames': dict(self.record_renames),
            'element_keys': dict(self.element_keys),
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'BrokerMapping':
        if not isinstance(data, dict) or 'source_schema' not in data or 'target_schema' not in data:
            raise MalformedDocument("broker mapping needs source_schema and target_schema")
        return cls(
            source_schema=data['source_schema'],
            target_schema=data['target_schema'],
            fields=dict(data.get('fields', {})),
            record_renames=dict(data.get('record_renames', {})),
            element_keys=dict(data.get('element_keys', {})),
        )


@dataclass(frozen=True)
class InterfaceProtocol:
    schemas: Dict[str, ArtifactSchema] = field(default_factory=dict)
    mappings: Dict[str, BrokerMapping] = field(default_factory=dict)

    def knows(self, schema_id: str) -> bool:
        return schema_id == ANY_SCHEMA_ID or schema_id in self.schemas

    def schema(self, schema_id: str) -> Optional[ArtifactSchema]:
        if schema_id == ANY_SCHEMA_ID:
            return ANY_SCHEMA
        return self.schemas.get(schema_id)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schemas': {k: self.schemas[k].to_dict() for k in sorted(self.schemas)},
            'mappings': {k: self.mappings[k].to_dict() for k in sorted(self.mappings)},
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'InterfaceProtocol':
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise MalformedDocument("protocol must be an object")
        schemas = {k: ArtifactSchema.from_dict(v) for k, v in data.get('schemas', {}).items()}
        mappings = {k: BrokerMapping.from_dict(v) for k, v in data.get('mappings', {}).items()}
        return cls(schemas=schemas, mappings=mappings)


@dataclass(frozen=True)
class RenameRule:
    source: str
    target: str
    fields: Dict[str, str] = field(default_factory=dict)
    records: Dict[str, str] = field(default_factory=dict)
    element_keys: Dict[str, str] = field(default_factory=dict)


class SchemaRegistry:
    """Known artifact schemas plus the explicit rename table brokers may use"""

    def __init__(self, schemas: Optional[List[ArtifactSchema]] = None, renames: Optional[List[RenameRule]] = None):
        self.schemas: Dict[str, ArtifactSchema] = {ANY_SCHEMA_ID: ANY_SCHEMA}
        for schema in schemas or []:
            self.schemas[schema.id] = schema
        self.renames: Dict[Tuple[str, str], RenameRule] = {(r.source, r.target): r for r in renames or []}

    def get(self, schema_id: str) -> Optional[ArtifactSchema]:
        return self.schemas.get(schema_id)

    def __contains__(self, schema_id: str) -> bool:
        return schema_id in self.schemas

    def rename_for(self, source: str, target: str) -> Optional[RenameRule]:
        return self.renames.get((source, target))

    @classmethod
    def from_dict(cls, data: Any) -> 'SchemaRegistry':
        if not isinstance(data, dict):
            raise MalformedDocument("schema registry must be an object")
        schemas = [ArtifactSchema.from_dict(raw) for raw in data.get('schemas', [])]
        renames = []
        for raw in data.get('renames', []):
            if not isinstance(raw, dict) or 'source' not in raw or 'target' not in raw:
                raise MalformedDocument("rename rules need source and target schema ids")
            renames.append(RenameRule(
                source=raw['source'],
                target=raw['target'],
                fields=dict(raw.get('fields', {})),
                records=dict(raw.get('records', {})),
                element_keys=dict(raw.get('element_keys', {})),
            ))
        return cls(schemas=schemas, renames=renames)

    @classmethod
    def load(cls, filename: str) -> 'SchemaRegistry':
        if not filename or not os.path.exists(filename):
            return cls()
        return cls.from_dict(read_json(filename, 'schema registry'))
