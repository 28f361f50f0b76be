"""Retrieval planning and lexical match scoring over the library."""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

from config import config
from parsing import GoalParser, TextCleaner
from utils.logger import setup_logger
from .entries import ENTRY_KINDS, Library, LibraryEntry

logger = setup_logger('Retrieval')
text_cleaner = TextCleaner()


@dataclass(frozen=True)
class RetrievalPlan:
    queries: Tuple[Tuple[str, str], ...]
    per_kind_k: Dict[str, int] = field(default_factory=dict)

    def k_for(self, kind: str) -> int:
        return self.per_kind_k.get(kind, config.get('retrieval.top_k', 3))

    def is_valid(self) -> bool:
        return bool(self.queries) and all(kind in ENTRY_KINDS for kind, _ in self.queries)


@dataclass(frozen=True)
class RetrievalResult:
    kind: str
    query: str
    hits: Tuple[Tuple[str, float], ...]

    def ids(self) -> List[str]:
        return [entry_id for entry_id, _ in self.hits]


def formulate_retrieval_plan(spec) -> RetrievalPlan:
    """Decide what to look up: skills and tools per goal clause, context
    resources, and one query per repository or reference graph resource"""
    queries: List[Tuple[str, str]] = []

    for clause in GoalParser().split_clauses(spec.goal):
        text = text_cleaner.keyword_query(clause) or clause
        queries.append(('skill', text))
        queries.append(('tool', text))

    if spec.context.strip():
        queries.append(('resource', text_cleaner.keyword_query(spec.context) or spec.context))

    for resource in spec.resources:
        if resource.kind == 'repository':
            queries.append(('external_agent', text_cleaner.keyword_query(resource.id, resource.description, resource.locator)))
        elif resource.kind == 'reference_graph':
            queries.append(('reference_graph', text_cleaner.keyword_query(resource.id, resource.description)))

    top_k = config.get('retrieval.top_k', 3)
    plan = RetrievalPlan(queries=tuple(queries), per_kind_k={kind: top_k for kind in ENTRY_KINDS})
    logger.debug(f"Retrieval plan with {len(queries)} queries")
    return plan


def entry_text(entry: LibraryEntry) -> str:
    return ' '.join([entry.description] + entry.schema_ids())


def cosine_similarity(left: str, right: str) -> float:
    """Cosine of term-frequency vectors over lowercased alphanumeric tokens"""
    a = text_cleaner.term_frequencies(left)
    b = text_cleaner.term_frequencies(right)
    if not a or not b:
        return 0.0

    # sorted iteration keeps the sum order independent of argument order
    dot = sum(a[t] * b[t] for t in sorted(set(a) & set(b)))
    if dot == 0:
        return 0.0

    norm_a = math.sqrt(sum(v * v for v in a.values()))
    norm_b = math.sqrt(sum(v * v for v in b.values()))
    return max(0.0, min(1.0, dot / (norm_a * norm_b)))


def score_match(query: str, entry: Union[LibraryEntry, str]) -> float:
    """Score in [0, 1] of a query against an entry's description and schema ids"""
    text = entry if isinstance(entry, str) else entry_text(entry)
    return cosine_similarity(query, text)


def rank_entries(query: str, entries: Sequence[LibraryEntry], k: int) -> List[Tuple[str, float]]:
    """Top-k (id, score) by score descending, ties by id"""
    if k <= 0:
        return []
    scored = [(entry.id, score_match(query, entry)) for entry in entries]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def retrieve(library: Library, plan: RetrievalPlan) -> List[RetrievalResult]:
    """One ranked hit list per plan query, restricted to the targeted kind"""
    snapshot = library.snapshot()
    by_kind: Dict[str, List[LibraryEntry]] = {}
    for entry in snapshot:
        by_kind.setdefault(entry.kind, []).append(entry)

    results = []
    for kind, query in plan.queries:
        hits = rank_entries(query, by_kind.get(kind, []), plan.k_for(kind))
        results.append(RetrievalResult(kind=kind, query=query, hits=tuple(hits)))

    logger.info(f"Retrieved {sum(len(r.hits) for r in results)} hits for {len(results)} queries")
    return results
