"""Artifact library, retrieval planning and match scoring"""

from .entries import ENTRY_KINDS, Library, LibraryEntry, register_entry
from .retrieval import (RetrievalPlan, RetrievalResult, formulate_retrieval_plan, rank_entries,
                        retrieve, score_match)

__all__ = ['ENTRY_KINDS', 'Library', 'LibraryEntry', 'register_entry', 'RetrievalPlan',
           'RetrievalResult', 'formulate_retrieval_plan', 'rank_entries', 'retrieve', 'score_match']
