import json
import os
from typing import Any, Optional

from errors import MalformedDocument

def dump_canonical(data: Any) -> str:
    """Canonical JSON text: sorted keys, no insignificant whitespace"""
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False)

def parse_json_text(text: str, what: str = 'document') -> Any:
    """Parse JSON text, mapping syntax errors to MalformedDocument"""
    try:
        return json.loads(text)
    except (TypeError, ValueError) as e:
        raise MalformedDocument(f"{what} is not valid JSON: {e}")

def read_json(filename: str, what: Optional[str] = None) -> Any:
    """Load a UTF-8 JSON file"""
    with open(filename, 'r', encoding='utf-8') as f:
        return parse_json_text(f.read(), what or filename)

def write_canonical(data: Any, filename: str) -> str:
    """Write data to filename in canonical form, creating parent directories"""
    parent = os.path.dirname(filename)
    if parent:
        os.makedirs(parent, exist_ok=True)

    with open(filename, 'w', encoding='utf-8', newline='') as f:
        f.write(dump_canonical(data))

    return filename

def write_text(text: str, filename: str) -> str:
    """Write a plain-text file, creating parent directories"""
    parent = os.path.dirname(filename)
    if parent:
        os.makedirs(parent, exist_ok=True)

    with open(filename, 'w', encoding='utf-8') as f:
        f.write(text)

    return filename

