import re
from typing import List, Optional

from config import config
from utils.logger import setup_logger
from .text_cleaner import TextCleaner

class GoalParser:
    """Splits goal text into ordered clause groups on coordinating connectives.

    Sequential connectives ("then", "and then", ";") start a new group; a bare
    "and" splits clauses inside a group. Every clause of a group depends on
    every clause of the group before it.
    """

    def __init__(self, sequential_connectives: Optional[List[str]] = None):
        self.logger = setup_logger('GoalParser')
        self.text_cleaner = TextCleaner()

        connectives = sequential_connectives or config.get(
            'retrieval.clause_connectives', ['and then', 'then', ';'])
        # longest first so "and then" wins over "then"
        alternatives = []
        for connective in sorted(connectives, key=len, reverse=True):
            if connective.isalpha() or ' ' in connective:
                words = r'\s+'.join(re.escape(w) for w in connective.split())
                alternatives.append(r',?\s*\b' + words + r'\b')
            else:
                alternatives.append(re.escape(connective))
        self.sequential_pattern = re.compile(r'\s*(?:' + '|'.join(alternatives) + r')\s*', re.IGNORECASE)
        self.parallel_pattern = re.compile(r'\s*,?\s*\band\b\s*', re.IGNORECASE)

    def split_groups(self, goal: str) -> List[List[str]]:
        """Clause groups in goal order; empty clauses are dropped"""
        groups = []
        for part in self.sequential_pattern.split(goal or ''):
            clauses = []
            for clause in self.parallel_pattern.split(part):
                clause = self.text_cleaner.clean_basic(clause)
                if clause:
                    clauses.append(clause)
            if clauses:
                groups.append(clauses)

        self.logger.debug(f"Goal split into {len(groups)} clause groups")
        return groups

    def split_clauses(self, goal: str) -> List[str]:
        return [clause for group in self.split_groups(goal) for clause in group]
