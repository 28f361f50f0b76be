import json
import re
import shlex
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from config import config
from errors import BuildExhausted, InvalidConstraints, UnbuiltSandbox
from graph.model import Node, WorkflowGraph
from library import Library, LibraryEntry
from parsing import TextCleaner
from runtime.executors import BaseExecutor, ExecutorRegistry, ExecutorResult
from runtime.messages import output_signal
from utils.logger import setup_logger
from .backends import BuildBackend, SandboxSpec, install_command
from .profile import RepositoryProfile

logger = setup_logger('SandboxWrapper')

MISSING_DEPENDENCY = re.compile(r'missing dependency:\s*([A-Za-z0-9_.\-\[\]=<>~]+)', re.IGNORECASE)

# log class -> pattern; anything unmatched is "other"
LOG_CLASSES = {
    'missing_dependency': re.compile(r'missing dependency:', re.IGNORECASE),
    'base_image': re.compile(r'manifest unknown|pull access denied|base image', re.IGNORECASE),
    'command_not_found': re.compile(r'command not found|executable file not found', re.IGNORECASE),
    'network': re.compile(r'could not resolve|connection refused|timed out|network is unreachable', re.IGNORECASE),
}


@dataclass(frozen=True)
class BuildRound:
    revision: int
    outcome: str
    log: str
    unhandled: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {'revision': self.revision, 'outcome': self.outcome, 'log': self.log,
                'unhandled': list(self.unhandled)}


@dataclass
class BuildReport:
    rounds: List[BuildRound] = field(default_factory=list)
    smoke: Optional[Dict[str, Any]] = None

    @property
    def final_outcome(self) -> str:
        if self.rounds and self.rounds[-1].outcome == 'success':
            return 'success'
        return 'failure'

    def to_dict(self) -> Dict[str, Any]:
        return {'rounds': [r.to_dict() for r in self.rounds], 'final_outcome': self.final_outcome,
                'smoke': self.smoke}


def classify_log(log: str) -> List[str]:
    classes = [name for name, pattern in LOG_CLASSES.items() if pattern.search(log or '')]
    return classes or ['other']


def missing_dependencies(log: str) -> List[str]:
    """Tokens following "missing dependency:" markers, in log order"""
    found = []
    for token in MISSING_DEPENDENCY.findall(log or ''):
        token = token.rstrip('.,;')
        if token and token not in found:
            found.append(token)
    return found


def draft_sandbox(profile: RepositoryProfile, base_environment: Optional[str] = None) -> SandboxSpec:
    base = base_environment or config.get('sandbox.base_environment', 'python:3.11-slim')
    deps = tuple(dict.fromkeys(profile.declared_dependencies))
    return SandboxSpec(base_environment=base, dependency_list=deps,
                       build_commands=tuple(install_command(d) for d in deps), revision=0)


def smoke_test(spec: SandboxSpec, profile: RepositoryProfile, backend: BuildBackend) -> Dict[str, Any]:
    """Run the profile's test commands; failures are counted, never raised"""
    if not profile.test_commands:
        return {'pass': 0, 'fail': 0, 'note': 'no tests'}

    passed = failed = 0
    for command in profile.test_commands:
        outcome, _ = backend.run(command)
        if outcome == 'success':
            passed += 1
        else:
            failed += 1
    logger.info(f"Smoke test of revision {spec.revision}: {passed} passed, {failed} failed")
    return {'pass': passed, 'fail': failed}


def synthesize_sandbox(profile: RepositoryProfile, backend: BuildBackend,
                       max_rounds: Optional[int] = None) -> Tuple[SandboxSpec, BuildReport]:
    """Draft, build, and on failure revise from the build log, for at most
    max_rounds builds. Raises BuildExhausted carrying the spec and report."""
    if max_rounds is None:
        max_rounds = config.get('sandbox.max_rounds', 3)
    if isinstance(max_rounds, bool) or not isinstance(max_rounds, int) or max_rounds < 1:
        raise InvalidConstraints("max_rounds must be a positive integer", field='max_rounds')

    spec = draft_sandbox(profile)
    report = BuildReport()

    for attempt in range(max_rounds):
        outcome, log = backend.build(spec)
        if outcome == 'success':
            report.rounds.append(BuildRound(spec.revision, 'success', log))
            break

        classes = classify_log(log)
        unhandled = tuple(c for c in classes if c != 'missing_dependency')
        report.rounds.append(BuildRound(spec.revision, 'failure', log, unhandled))
        if unhandled:
            logger.warning(f"Build log classes not revised automatically: {', '.join(unhandled)}")

        if attempt < max_rounds - 1:
            spec = spec.revise(missing_dependencies(log))
            logger.info(f"Revised sandbox for {profile.locator} to revision {spec.revision}")

    if report.final_outcome != 'success':
        raise BuildExhausted(f"sandbox for {profile.locator} failed {len(report.rounds)} builds",
                             spec=spec, report=report)

    report.smoke = smoke_test(spec, profile, backend)
    return spec, report


class ContainerExecutor(BaseExecutor):
    """Runs a node by invoking an entry point inside a built sandbox.
    Containers report zero cost."""

    def __init__(self, node_id: str, backend: BuildBackend, entry_point: str):
        super().__init__(node_id)
        self.backend = backend
        self.entry_point = entry_point

    def run(self, instruction: str, attachments: List[str], inputs: Dict[str, Any]) -> ExecutorResult:
        command = f"{self.entry_point} {shlex.quote(json.dumps(inputs, sort_keys=True))}"
        outcome, log = self.backend.run(command)
        if outcome != 'success':
            raise RuntimeError(f"entry point failed: {log[-200:]}")
        try:
            artifact = json.loads(log)
        except ValueError:
            artifact = {'log': log}
        return artifact, [output_signal(self.node_id, 1.0)], 0


class ExecutorBindings:
    """Identity map binding id -> SandboxSpec for wrapped repositories"""

    def __init__(self):
        self.specs: Dict[str, SandboxSpec] = {}
        self.entry_points: Dict[str, str] = {}
        self.backends: Dict[str, BuildBackend] = {}
        self._lock = threading.Lock()
        self.logger = setup_logger('ExecutorBindings')

    def bind(self, binding_id: str, spec: SandboxSpec, entry_point: str = '',
             backend: Optional[BuildBackend] = None) -> str:
        with self._lock:
            self.specs[binding_id] = spec
            self.entry_points[binding_id] = entry_point
            if backend is not None:
                self.backends[binding_id] = backend
        self.logger.debug(f"Bound '{binding_id}' to sandbox revision {spec.revision}")
        return binding_id

    def spec_for(self, binding_id: str) -> Optional[SandboxSpec]:
        return self.specs.get(binding_id)

    def __contains__(self, binding_id: str) -> bool:
        return binding_id in self.specs

    def install(self, registry: ExecutorRegistry, backend: Optional[BuildBackend] = None) -> None:
        """Make every binding resolvable by the runtime; a backend given at
        bind time wins over `backend`"""
        for binding_id in sorted(self.specs):
            runner = self.backends.get(binding_id, backend)
            if runner is None:
                raise UnbuiltSandbox(f"binding '{binding_id}' has no backend to run in")
            registry.register(binding_id, ContainerExecutor(binding_id, runner, self.entry_points[binding_id]))


def _require_built(report: BuildReport) -> None:
    if report is None or report.final_outcome != 'success':
        raise UnbuiltSandbox("sandbox has no successful build")


def register_executor(node: Node, spec: SandboxSpec, report: BuildReport, bindings: ExecutorBindings,
                      profile: Optional[RepositoryProfile] = None,
                      backend: Optional[BuildBackend] = None) -> Tuple[str, Node]:
    """Bind a node to a built sandbox; returns the binding id and the updated node.
    Each node gets its own binding id even when several share one spec."""
    _require_built(report)
    entry_point = profile.entry_points[0] if profile and profile.entry_points else ''
    binding_id = bindings.bind(f"sandbox:{node.id}:r{spec.revision}", spec, entry_point, backend)
    return binding_id, node.with_changes(executor_binding=binding_id)


def register_tool(graph: WorkflowGraph, node_id: str, profile: RepositoryProfile, spec: SandboxSpec,
                  report: BuildReport, bindings: ExecutorBindings, library: Library,
                  input_schema: str = 'any', output_schema: str = 'any') -> Tuple[str, WorkflowGraph]:
    """Wrap a single-entry-point method as a tool attached to an existing node.

    The node's own executor binding is left as it is.
    """
    _require_built(report)
    if not profile.entry_points:
        raise UnbuiltSandbox(f"{profile.locator} declares no entry point to wrap")

    entry_id = f"{TextCleaner().slugify(profile.locator, max_words=4)}_method"
    if entry_id not in library:
        library.register_entry(LibraryEntry(
            id=entry_id,
            kind='tool',
            description=f"end-to-end method {profile.entry_points[0]} from {profile.locator}",
            input_schema=input_schema,
            output_schema=output_schema,
            provenance=profile.locator,
        ))
    bindings.bind(f"tool:{entry_id}", spec, profile.entry_points[0])

    attachments = dict(graph.attachments)
    attachments[node_id] = graph.attached(node_id) | {entry_id}
    logger.info(f"Attached wrapped method '{entry_id}' to '{node_id}'")
    return entry_id, graph.evolve(attachments=attachments)
