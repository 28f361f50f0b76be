import os
from typing import Dict, List, Optional, Set, Tuple

from config import config
from errors import NoExecutableTopology
from graph.io import load_reference_graph
from graph.model import Edge, Node, WorkflowGraph
from graph.protocol import ANY_SCHEMA_ID, SchemaRegistry
from graph.validation import validate_graph
from library import Library, LibraryEntry, formulate_retrieval_plan, retrieve, score_match
from parsing import TextCleaner
from sandbox.setup import EXTERNAL_PREFIX, PROFILE_BINDING, REGISTER_BINDING, SANDBOX_BINDING
from spec_model import TaskSpecification
from utils.logger import setup_logger
from .grounding import best_tool, ground_node
from .interfaces import synthesize_interfaces
from .planner import decompose_goal, select_topology

# Setup chain run ahead of repository-backed subgoals
SETUP_CHAIN = (
    ('profile_repositories', 'profiling', PROFILE_BINDING, 'profile repository metadata'),
    ('build_sandboxes', 'sandbox', SANDBOX_BINDING, 'build sandboxes for repositories'),
    ('register_agents', 'registration', REGISTER_BINDING, 'register wrapped repositories as agents'),
)


class WorkflowSynthesizer:
    """Builds a grounded, interface-checked workflow graph from a task
    specification and a library snapshot"""

    def __init__(self, library: Library, schemas: Optional[SchemaRegistry] = None,
                 base_dir: str = '.', top_k: Optional[int] = None):
        self.library = library
        self.schemas = schemas or SchemaRegistry()
        self.base_dir = base_dir
        self.top_k = config.get('retrieval.top_k', 3) if top_k is None else top_k
        self.allow_default_agent = config.get('synthesis.allow_default_agent', True)
        self.default_executor = config.get('synthesis.default_executor', 'agent:default')
        self.text_cleaner = TextCleaner()
        self.logger = setup_logger('WorkflowSynthesizer')

    def synthesize(self, spec: TaskSpecification) -> WorkflowGraph:
        plan = formulate_retrieval_plan(spec)
        results = retrieve(self.library, plan)
        candidates = self._repository_agents(spec, results)

        reference = spec.resources_of_kind('reference_graph')
        if reference:
            skeleton = self._load_skeleton(reference[0].locator)
            graph = self._from_skeleton(skeleton, spec, candidates)
        else:
            graph = self._from_goal(spec, candidates)

        graph = self._ground(graph)
        graph = synthesize_interfaces(graph, self.schemas)

        report = validate_graph(graph, self.library.ids())
        if not report.ok:
            raise NoExecutableTopology(f"synthesized graph does not validate: {report.first()}",
                                       violations=report.lines())

        self.logger.info(f"Synthesized {len(graph.nodes)} nodes and {len(graph.edges)} edges")
        return graph

    def _repository_agents(self, spec: TaskSpecification, results) -> List[LibraryEntry]:
        """external_agent entries backed by a repository resource of the task"""
        backing = set()
        for resource in spec.resources_of_kind('repository'):
            backing.add(resource.id)
            if resource.locator:
                backing.add(resource.locator)

        hit_ids = {entry_id for r in results if r.kind == 'external_agent' for entry_id in r.ids()}
        agents = []
        for entry in self.library.entries_of_kind('external_agent'):
            if entry.id in backing or entry.provenance in backing:
                agents.append(entry)
                if entry.id not in hit_ids:
                    self.logger.debug(f"Repository agent '{entry.id}' outside retrieval top-k")
        return agents

    def _load_skeleton(self, locator: str) -> WorkflowGraph:
        path = locator if os.path.isabs(locator) else os.path.join(self.base_dir, locator)
        return load_reference_graph(path)

    def _constraint_note(self, spec: TaskSpecification) -> str:
        notes = []
        if spec.constraints.max_runtime:
            notes.append(f"max runtime {spec.constraints.max_runtime}s")
        if spec.constraints.environment_requirements:
            notes.append(f"environment: {', '.join(spec.constraints.environment_requirements)}")
        return f" Constraints: {'; '.join(notes)}." if notes else ''

    def _role_node(self, node_id: str, role: str, spec: TaskSpecification,
                   candidates: List[LibraryEntry]) -> Node:
        """External node when a repository agent outscores every skill and tool,
        otherwise an agent node"""
        query = self.text_cleaner.keyword_query(role) or role
        external = sorted(((score_match(query, e), e) for e in candidates), key=lambda t: (-t[0], t[1].id))
        local = [score_match(query, e) for e in self.library.snapshot() if e.kind in ('skill', 'tool')]
        best_local = max(local, default=0.0)
        note = self._constraint_note(spec)

        if external and external[0][0] > 0 and external[0][0] > best_local:
            entry = external[0][1]
            return Node(
                id=node_id,
                kind='external',
                instruction=f"Run {entry.id} to {role}.{note}",
                executor_binding=f"{EXTERNAL_PREFIX}{entry.id}",
                input_schema=entry.input_schema,
                output_schema=entry.output_schema,
            )

        if best_local <= 0 and not self.allow_default_agent:
            raise NoExecutableTopology(f"subgoal '{role}' matched no library entry and default agents are disabled")

        return Node(id=node_id, kind='agent', instruction=f"Task: {role}.{note}",
                    executor_binding=self.default_executor)

    def _from_goal(self, spec: TaskSpecification, candidates: List[LibraryEntry]) -> WorkflowGraph:
        decomposition = decompose_goal(spec)
        topology = select_topology(decomposition)
        self.logger.info(f"Goal decomposed into {len(decomposition.subgoals)} subgoals ({topology.value} topology)")

        nodes: List[Node] = []
        edges: List[Edge] = []
        roles: Dict[str, str] = {}
        node_of: Dict[str, str] = {}

        for subgoal_id, text in decomposition.subgoals:
            node_id = f"{subgoal_id}_{self.text_cleaner.slugify(text)}"
            node_of[subgoal_id] = node_id
            nodes.append(self._role_node(node_id, text, spec, candidates))
            roles[node_id] = text

        for earlier, later in sorted(decomposition.dependencies):
            edges.append(Edge(node_of[earlier], node_of[later]))

        # Repository setup chain feeds every source subgoal
        if spec.resources_of_kind('repository'):
            previous = None
            for node_id, phase, binding, role in SETUP_CHAIN:
                nodes.append(Node(id=node_id, kind='tool', instruction=f"Task: {role}.",
                                  executor_binding=binding, input_schema=ANY_SCHEMA_ID, phase=phase))
                roles[node_id] = role
                if previous:
                    edges.append(Edge(previous, node_id))
                previous = node_id
            for subgoal_id in decomposition.sources():
                edges.append(Edge(previous, node_of[subgoal_id]))

        if len(decomposition.subgoals) > 1:
            join_sources = [node_of[s] for s in decomposition.ids()]

            evaluate_against = spec.constraints.evaluate_against
            if evaluate_against:
                references = [spec.resource(r) for r in evaluate_against]
                described = ', '.join(r.description or r.id for r in references if r is not None)
                role = f"evaluate results against {described}"
                nodes.append(Node(id='evaluate', kind='evaluator', instruction=f"Task: {role}.",
                                  executor_binding=self.default_executor, phase='evaluation'))
                roles['evaluate'] = role
                for subgoal_id in decomposition.terminals():
                    edges.append(Edge(node_of[subgoal_id], 'evaluate'))
                join_sources.append('evaluate')

            nodes.append(Node(id='integrate', kind='integrator',
                              instruction="Task: integrate the results of all subgoals.",
                              executor_binding=self.default_executor, input_schema=ANY_SCHEMA_ID,
                              phase='integration'))
            roles['integrate'] = 'integrate the results of all subgoals'
            for source in join_sources:
                edges.append(Edge(source, 'integrate'))

            output_format = spec.constraints.output_format
            nodes.append(Node(id='report', kind='agent',
                              instruction=f"Task: report the integrated result as {output_format}.",
                              executor_binding=self.default_executor, input_schema=ANY_SCHEMA_ID,
                              phase='reporting'))
            roles['report'] = f"report the integrated result as {output_format}"
            edges.append(Edge('integrate', 'report'))

        return WorkflowGraph.build(nodes=nodes, edges=edges, roles=roles)

    def _from_skeleton(self, skeleton: WorkflowGraph, spec: TaskSpecification,
                       candidates: List[LibraryEntry]) -> WorkflowGraph:
        """Keep the imported topology and roles; choose kinds and bindings per role"""
        nodes = [self._role_node(n.id, skeleton.roles.get(n.id, n.instruction), spec, candidates)
                 for n in skeleton.nodes]
        self.logger.info(f"Using reference skeleton with {len(nodes)} roles")
        return WorkflowGraph.build(nodes=nodes, edges=skeleton.edges, roles=skeleton.roles)

    def _adjacent_schemas(self, graph: WorkflowGraph, node_id: str) -> Set[str]:
        schemas = set()
        for pred in graph.predecessors(node_id):
            schemas.add(graph.node(pred).output_schema)
        for succ in graph.successors(node_id):
            schemas.add(graph.node(succ).input_schema)
        return {s for s in schemas if s and s != ANY_SCHEMA_ID}

    def _ground(self, graph: WorkflowGraph) -> WorkflowGraph:
        """Attach skills and tools; agent and evaluator nodes adopt the schemas
        of their best attached tool"""
        nodes: List[Node] = []
        attachments: Dict[str, frozenset] = {}

        for node in graph.nodes:
            role = graph.roles.get(node.id, node.instruction)
            adjacent = self._adjacent_schemas(graph, node.id)
            node, attached = ground_node(node, role, self.library, self.top_k, adjacent)
            attachments[node.id] = attached

            if node.kind in ('agent', 'evaluator') and node.phase in ('execution', 'evaluation'):
                query = ' '.join([role] + sorted(adjacent))
                tool = best_tool(attached, self.library, query)
                if tool is not None:
                    node = node.with_changes(input_schema=tool.input_schema, output_schema=tool.output_schema)
            nodes.append(node)

        return graph.evolve(nodes=nodes, attachments=attachments)


def synthesize(spec: TaskSpecification, library: Library, schemas: Optional[SchemaRegistry] = None,
               base_dir: str = '.', top_k: Optional[int] = None) -> WorkflowGraph:
    return WorkflowSynthesizer(library, schemas, base_dir, top_k).synthesize(spec)
