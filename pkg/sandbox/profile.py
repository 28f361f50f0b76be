from dataclasses import dataclass
from typing import Any, Dict, List, Tuple, Union

from errors import MalformedDocument
from utils.file_utils import parse_json_text, read_json

# metadata key -> profile field
METADATA_FIELDS = {
    'dependencies': 'declared_dependencies',
    'entry_points': 'entry_points',
    'tests': 'test_commands',
    'docs': 'docs_excerpts',
}


@dataclass(frozen=True)
class RepositoryProfile:
    locator: str
    declared_dependencies: Tuple[str, ...] = ()
    entry_points: Tuple[str, ...] = ()
    test_commands: Tuple[str, ...] = ()
    docs_excerpts: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'locator': self.locator,
            'dependencies': list(self.declared_dependencies),
            'entry_points': list(self.entry_points),
            'tests': list(self.test_commands),
            'docs': list(self.docs_excerpts),
        }


def _string_list(data: Dict[str, Any], key: str) -> List[str]:
    value = data.get(key) or []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise MalformedDocument(f"repository metadata '{key}' must be a list of strings")
    return value


def profile_repository(metadata: Union[str, Dict[str, Any]]) -> RepositoryProfile:
    """Profile from repository metadata; absent fields become empty lists"""
    data = parse_json_text(metadata, 'repository metadata') if isinstance(metadata, str) else metadata
    if not isinstance(data, dict):
        raise MalformedDocument("repository metadata must be a JSON object")

    locator = data.get('locator')
    if not isinstance(locator, str) or not locator.strip():
        raise MalformedDocument("repository metadata needs a non-empty locator")

    fields = {attr: tuple(_string_list(data, key)) for key, attr in METADATA_FIELDS.items()}
    return RepositoryProfile(locator=locator.strip(), **fields)


def load_repository_profile(filename: str) -> RepositoryProfile:
    return profile_repository(read_json(filename, 'repository metadata'))
