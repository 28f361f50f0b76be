"""Executors behind the repository setup chain.

A synthesized graph that draws on repositories starts with three built-in
nodes: profile the task's repositories, build a sandbox per repository,
and register each built sandbox under the `external:<id>` bindings of the
agents it backs. RepositorySetup holds the state those steps share for
one run and installs every binding into an executor registry.
"""

import os
import threading
from typing import Any, Callable, Dict, List, Optional, Tuple

from errors import MalformedDocument, UnbuiltSandbox
from graph.model import Node, WorkflowGraph
from library import Library
from runtime.executors import BaseExecutor, ExecutorRegistry, ExecutorResult
from runtime.messages import EvidenceSignal, output_signal, suite_signal
from utils.logger import setup_logger
from .backends import BuildBackend, SandboxSpec
from .profile import RepositoryProfile, load_repository_profile
from .wrapper import BuildReport, ExecutorBindings, register_executor, synthesize_sandbox

PROFILE_BINDING = 'builtin:profile'
SANDBOX_BINDING = 'builtin:sandbox'
REGISTER_BINDING = 'builtin:register'
EXTERNAL_PREFIX = 'external:'

StepResult = Tuple[Dict[str, Any], List[EvidenceSignal]]


class SetupStepExecutor(BaseExecutor):
    """Runs one step of the setup chain; setup steps report zero cost"""

    def __init__(self, binding: str, step: Callable[[str], StepResult]):
        super().__init__(binding)
        self.step = step

    def run(self, instruction: str, attachments: List[str], inputs: Dict[str, Any]) -> ExecutorResult:
        artifact, signals = self.step(self.node_id)
        return artifact, signals, 0


class ExternalAgentExecutor(BaseExecutor):
    """Forwards an `external:<id>` node to the container registered for it"""

    def __init__(self, binding: str, setup: 'RepositorySetup'):
        super().__init__(binding)
        self.setup = setup

    def run(self, instruction: str, attachments: List[str], inputs: Dict[str, Any]) -> ExecutorResult:
        return self.setup.executor_for(self.node_id).run(instruction, attachments, inputs)


class RepositorySetup:
    """Profiles, sandboxes and registrations of one run's repositories"""

    def __init__(self, spec, backend_factory: Callable[[str], BuildBackend], base_dir: str = '.',
                 library: Optional[Library] = None, max_rounds: Optional[int] = None):
        self.repositories = spec.resources_of_kind('repository')
        self.backend_factory = backend_factory
        self.base_dir = base_dir
        self.library = library or Library()
        self.max_rounds = max_rounds
        self.bindings = ExecutorBindings()
        self.registry: Optional[ExecutorRegistry] = None

        self.profiles: Dict[str, RepositoryProfile] = {}
        self.backends: Dict[str, BuildBackend] = {}
        self.sandboxes: Dict[str, Tuple[SandboxSpec, BuildReport]] = {}
        self.external: Dict[str, str] = {}

        self._lock = threading.Lock()
        self.logger = setup_logger('RepositorySetup')

    def metadata_path(self, locator: str) -> str:
        """First existing file among <locator>, <locator>.json and <locator>/metadata.json"""
        for candidate in (locator, f"{locator}.json", os.path.join(locator, 'metadata.json')):
            path = candidate if os.path.isabs(candidate) else os.path.join(self.base_dir, candidate)
            if os.path.isfile(path):
                return path
        raise MalformedDocument(f"no repository metadata found for '{locator}' under {self.base_dir}")

    def backend_for(self, locator: str) -> BuildBackend:
        with self._lock:
            if locator not in self.backends:
                self.backends[locator] = self.backend_factory(locator)
            return self.backends[locator]

    def profile_step(self, node_id: str) -> StepResult:
        profiles = {}
        for resource in self.repositories:
            profiles[resource.id] = load_repository_profile(self.metadata_path(resource.locator or resource.id))
            self.logger.info(f"Profiled {profiles[resource.id].locator}")
        with self._lock:
            self.profiles = profiles

        artifact = {'profiles': [profiles[r.id].to_dict() for r in self.repositories]}
        return artifact, [output_signal(node_id, 1.0)]

    def sandbox_step(self, node_id: str) -> StepResult:
        if self.repositories and not self.profiles:
            raise UnbuiltSandbox("no repository has been profiled")

        built: Dict[str, Tuple[SandboxSpec, BuildReport]] = {}
        passed = failed = 0
        for resource in self.repositories:
            profile = self.profiles[resource.id]
            if profile.locator in built:
                continue
            spec, report = synthesize_sandbox(profile, self.backend_for(profile.locator), max_rounds=self.max_rounds)
            built[profile.locator] = (spec, report)
            passed += report.smoke.get('pass', 0)
            failed += report.smoke.get('fail', 0)
        with self._lock:
            self.sandboxes = built

        artifact = {'sandboxes': [
            {'locator': locator, 'revision': spec.revision, 'rounds': len(report.rounds),
             'dependencies': list(spec.dependency_list), 'smoke': report.smoke}
            for locator, (spec, report) in sorted(built.items())
        ]}
        signals = [output_signal(node_id, 1.0)]
        if passed or failed:
            signals.append(suite_signal(node_id, passed, failed, note='sandbox smoke tests'))
        return artifact, signals

    def agents_backed_by(self, resource_id: str, profile: RepositoryProfile) -> List[str]:
        """The resource itself plus every external_agent entry whose provenance names it"""
        agents = {resource_id}
        for entry in self.library.entries_of_kind('external_agent'):
            if entry.provenance in (profile.locator, resource_id):
                agents.add(entry.id)
        return sorted(agents)

    def register_step(self, node_id: str) -> StepResult:
        if self.repositories and not self.sandboxes:
            raise UnbuiltSandbox("no sandbox has been built")

        registered: Dict[str, str] = {}
        skipped: List[str] = []
        for resource in self.repositories:
            profile = self.profiles[resource.id]
            if not profile.entry_points:
                self.logger.warning(f"{profile.locator} declares no entry point; not registered")
                skipped.append(resource.id)
                continue
            spec, report = self.sandboxes[profile.locator]
            for agent_id in self.agents_backed_by(resource.id, profile):
                binding = f"{EXTERNAL_PREFIX}{agent_id}"
                sandbox_binding, _ = register_executor(Node(agent_id, 'external', executor_binding=binding), spec,
                                                       report, self.bindings, profile,
                                                       backend=self.backend_for(profile.locator))
                registered[binding] = sandbox_binding

        if self.registry is not None:
            self.bindings.install(self.registry)
        with self._lock:
            self.external.update(registered)

        self.logger.info(f"Registered {len(registered)} external bindings")
        return {'registered': registered, 'skipped': skipped}, [output_signal(node_id, 1.0)]

    def executor_for(self, binding: str) -> BaseExecutor:
        with self._lock:
            sandbox_binding = self.external.get(binding)
        if sandbox_binding is None or self.registry is None:
            raise UnbuiltSandbox(f"'{binding}' has no registered sandbox")
        return self.registry.by_binding[sandbox_binding]

    def install(self, registry: ExecutorRegistry, graph: Optional[WorkflowGraph] = None) -> ExecutorRegistry:
        """Register the setup steps and a forwarder for every external binding
        the graph or the task's repositories name"""
        self.registry = registry
        registry.register(PROFILE_BINDING, SetupStepExecutor(PROFILE_BINDING, self.profile_step))
        registry.register(SANDBOX_BINDING, SetupStepExecutor(SANDBOX_BINDING, self.sandbox_step))
        registry.register(REGISTER_BINDING, SetupStepExecutor(REGISTER_BINDING, self.register_step))

        external = {f"{EXTERNAL_PREFIX}{r.id}" for r in self.repositories}
        if graph is not None:
            external.update(n.executor_binding for n in graph.nodes
                            if n.executor_binding and n.executor_binding.startswith(EXTERNAL_PREFIX))
        for binding in sorted(external):
            registry.register(binding, ExternalAgentExecutor(binding, self))
        return registry
