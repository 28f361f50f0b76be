from typing import FrozenSet, Iterable, List, Optional, Tuple

from config import config
from graph.model import Node
from library import Library, LibraryEntry, rank_entries, score_match
from utils.logger import setup_logger

logger = setup_logger('Grounding')

GROUNDING_KINDS = ('skill', 'tool')


def ground_node(node: Node, role_text: str, library: Library, k: Optional[int] = None,
                adjacent_schemas: Iterable[str] = ()) -> Tuple[Node, FrozenSet[str]]:
    """Attach the top-k skills and the top-k tools matching the role.

    The query is the role text followed by the schema ids on adjacent edges.
    Entries scoring zero are never attached, so an empty library or k=0
    yields an empty attachment set.
    """
    k = config.get('retrieval.top_k', 3) if k is None else k
    query = ' '.join([role_text] + sorted(set(s for s in adjacent_schemas if s)))

    attached = set()
    if k > 0:
        for kind in GROUNDING_KINDS:
            for entry_id, score in rank_entries(query, library.entries_of_kind(kind), k):
                if score > 0:
                    attached.add(entry_id)

    logger.debug(f"Grounded '{node.id}' with {len(attached)} attachments")
    return node, frozenset(attached)


def best_tool(attachments: Iterable[str], library: Library, query: str) -> Optional[LibraryEntry]:
    """Highest-scoring attached tool that declares schemas, ties by id"""
    tools: List[Tuple[float, str, LibraryEntry]] = []
    for entry_id in attachments:
        entry = library.get(entry_id)
        if entry is not None and entry.kind == 'tool' and entry.input_schema and entry.output_schema:
            tools.append((-score_match(query, entry), entry.id, entry))
    if not tools:
        return None
    return sorted(tools, key=lambda t: (t[0], t[1]))[0][2]
