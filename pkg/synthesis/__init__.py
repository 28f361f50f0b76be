"""Workflow synthesis: decomposition, topology, grounding, interfaces and assembly"""

from .grounding import best_tool, ground_node
from .interfaces import derive_mapping, synthesize_interfaces
from .planner import SubgoalDecomposition, TopologyKind, decompose_goal, select_topology
from .synthesizer import WorkflowSynthesizer, synthesize

__all__ = ['best_tool', 'ground_node', 'derive_mapping', 'synthesize_interfaces', 'SubgoalDecomposition',
           'TopologyKind', 'decompose_goal', 'select_topology', 'WorkflowSynthesizer', 'synthesize']
