import os
import threading
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple

from errors import DuplicateId, MalformedDocument, MissingSchema
from utils.file_utils import read_json, write_canonical
from utils.logger import setup_logger

ENTRY_KINDS = ('resource', 'skill', 'tool', 'external_agent', 'reference_graph')
SCHEMA_REQUIRED_KINDS = ('tool', 'external_agent')
ENTRY_KEYS = ('id', 'kind', 'description', 'input_schema', 'output_schema', 'provenance')


@dataclass(frozen=True)
class LibraryEntry:
    """One reusable artifact: a resource, skill, tool, wrapped agent or reference graph"""
    id: str
    kind: str
    description: str = ''
    input_schema: Optional[str] = None
    output_schema: Optional[str] = None
    provenance: str = 'builtin'

    def schema_ids(self) -> List[str]:
        return [s for s in (self.input_schema, self.output_schema) if s]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'kind': self.kind,
            'description': self.description,
            'input_schema': self.input_schema,
            'output_schema': self.output_schema,
            'provenance': self.provenance,
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'LibraryEntry':
        if not isinstance(data, dict):
            raise MalformedDocument("library entry must be a JSON object")
        unknown = sorted(set(data) - set(ENTRY_KEYS))
        if unknown:
            raise MalformedDocument(f"unknown library entry keys: {', '.join(unknown)}")
        if not isinstance(data.get('id'), str) or not data['id'].strip():
            raise MalformedDocument("library entry needs a non-empty id")
        if data.get('kind') not in ENTRY_KINDS:
            raise MalformedDocument(f"library entry kind must be one of {', '.join(ENTRY_KINDS)}")
        return cls(
            id=data['id'],
            kind=data['kind'],
            description=data.get('description') or '',
            input_schema=data.get('input_schema'),
            output_schema=data.get('output_schema'),
            provenance=data.get('provenance') or 'builtin',
        )


class Library:
    """The global artifact library. Many readers, one writer at a time."""

    def __init__(self, entries: Iterable[LibraryEntry] = ()):
        self.logger = setup_logger('Library')
        self._entries: Dict[str, LibraryEntry] = {}
        self._lock = threading.RLock()

        for entry in entries:
            self.register_entry(entry)

    def register_entry(self, entry: LibraryEntry) -> str:
        """Add an entry; its id becomes retrievable immediately"""
        if entry.kind not in ENTRY_KINDS:
            raise MalformedDocument(f"unknown entry kind '{entry.kind}'")
        if entry.kind in SCHEMA_REQUIRED_KINDS and not (entry.input_schema and entry.output_schema):
            raise MissingSchema(f"{entry.kind} entry '{entry.id}' must declare input and output schemas")

        with self._lock:
            if entry.id in self._entries:
                raise DuplicateId(f"library already holds an entry with id '{entry.id}'")
            self._entries[entry.id] = entry

        self.logger.debug(f"Registered {entry.kind} '{entry.id}'")
        return entry.id

    def get(self, entry_id: str) -> Optional[LibraryEntry]:
        return self._entries.get(entry_id)

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def snapshot(self) -> Tuple[LibraryEntry, ...]:
        """Immutable view in id order; retrieval works on this"""
        with self._lock:
            return tuple(self._entries[k] for k in sorted(self._entries))

    def ids(self) -> List[str]:
        return [e.id for e in self.snapshot()]

    def entries_of_kind(self, kind: str) -> List[LibraryEntry]:
        return [e for e in self.snapshot() if e.kind == kind]

    def save(self, directory: str) -> None:
        """Persist as entries/<id>.json plus index.json"""
        entries = self.snapshot()
        for entry in entries:
            write_canonical(entry.to_dict(), os.path.join(directory, 'entries', f"{entry.id}.json"))
        write_canonical([{'id': e.id, 'kind': e.kind} for e in entries], os.path.join(directory, 'index.json'))
        self.logger.info(f"Saved {len(entries)} library entries to {directory}")

    @classmethod
    def load(cls, directory: str) -> 'Library':
        index_file = os.path.join(directory, 'index.json')
        if not os.path.exists(index_file):
            raise MalformedDocument(f"library index not found at {index_file}")

        index = read_json(index_file, 'library index')
        if not isinstance(index, list):
            raise MalformedDocument("library index must be a list")

        library = cls()
        for item in index:
            if not isinstance(item, dict) or 'id' not in item:
                raise MalformedDocument("library index items need an id")
            entry = LibraryEntry.from_dict(read_json(os.path.join(directory, 'entries', f"{item['id']}.json")))
            if entry.kind != item.get('kind'):
                raise MalformedDocument(f"index kind for '{entry.id}' disagrees with its entry file")
            library.register_entry(entry)

        library.logger.info(f"Loaded {len(library)} library entries from {directory}")
        return library


def register_entry(library: Library, entry: LibraryEntry) -> str:
    return library.register_entry(entry)
