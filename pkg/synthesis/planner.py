from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, List, Tuple

import networkx as nx

from parsing import GoalParser
from utils.logger import setup_logger

logger = setup_logger('Planner')


class TopologyKind(str, Enum):
    LINEAR = 'linear'
    PARALLEL = 'parallel'
    MIXED = 'mixed'


@dataclass(frozen=True)
class SubgoalDecomposition:
    subgoals: Tuple[Tuple[str, str], ...]
    dependencies: FrozenSet[Tuple[str, str]] = field(default_factory=frozenset)

    def ids(self) -> List[str]:
        return [subgoal_id for subgoal_id, _ in self.subgoals]

    def text_of(self, subgoal_id: str) -> str:
        return dict(self.subgoals)[subgoal_id]

    def depends_on(self, subgoal_id: str) -> List[str]:
        return sorted(a for a, b in self.dependencies if b == subgoal_id)

    def dependents_of(self, subgoal_id: str) -> List[str]:
        return sorted(b for a, b in self.dependencies if a == subgoal_id)

    def sources(self) -> List[str]:
        return [s for s in self.ids() if not self.depends_on(s)]

    def terminals(self) -> List[str]:
        return [s for s in self.ids() if not self.dependents_of(s)]

    def is_acyclic(self) -> bool:
        digraph = nx.DiGraph()
        digraph.add_nodes_from(self.ids())
        digraph.add_edges_from(self.dependencies)
        return nx.is_directed_acyclic_graph(digraph)


def decompose_goal(spec) -> SubgoalDecomposition:
    """Clause-based decomposition of the goal.

    "then", "and then" and ";" start a new clause group whose clauses each
    depend on every clause of the previous group; a bare "and" splits
    clauses that do not depend on each other.
    """
    groups = GoalParser().split_groups(spec.goal)
    if not groups:
        groups = [[spec.goal.strip()]]

    subgoals: List[Tuple[str, str]] = []
    dependencies = set()
    previous: List[str] = []
    for group in groups:
        current = []
        for clause in group:
            subgoal_id = f"sg{len(subgoals) + 1}"
            subgoals.append((subgoal_id, clause))
            current.append(subgoal_id)
            dependencies.update((earlier, subgoal_id) for earlier in previous)
        previous = current

    decomposition = SubgoalDecomposition(subgoals=tuple(subgoals), dependencies=frozenset(dependencies))
    logger.debug(f"Decomposed goal into {len(subgoals)} subgoals with {len(dependencies)} dependencies")
    return decomposition


def select_topology(decomposition: SubgoalDecomposition) -> TopologyKind:
    ids = decomposition.ids()
    if len(ids) <= 1:
        return TopologyKind.LINEAR
    if not decomposition.dependencies:
        return TopologyKind.PARALLEL

    # total order: the transitive closure relates every pair of subgoals
    digraph = nx.DiGraph()
    digraph.add_nodes_from(ids)
    digraph.add_edges_from(decomposition.dependencies)
    closure = nx.transitive_closure_dag(digraph)
    pairs = len(ids) * (len(ids) - 1) // 2
    if closure.number_of_edges() == pairs:
        return TopologyKind.LINEAR
    return TopologyKind.MIXED
