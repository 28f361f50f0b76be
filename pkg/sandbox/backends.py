import os
import subprocess
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Tuple

from config import config
from errors import MalformedDocument
from utils.file_utils import read_json
from utils.logger import setup_logger

OUTCOMES = ('success', 'failure')
BuildOutcome = Tuple[str, str]


@dataclass(frozen=True)
class SandboxSpec:
    base_environment: str
    dependency_list: Tuple[str, ...] = ()
    build_commands: Tuple[str, ...] = ()
    revision: int = 0

    def revise(self, new_dependencies: List[str]) -> 'SandboxSpec':
        """Next revision with the given dependencies appended"""
        added = [d for d in new_dependencies if d not in self.dependency_list]
        return replace(
            self,
            dependency_list=self.dependency_list + tuple(added),
            build_commands=self.build_commands + tuple(install_command(d) for d in added),
            revision=self.revision + 1,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'base_environment': self.base_environment,
            'dependency_list': list(self.dependency_list),
            'build_commands': list(self.build_commands),
            'revision': self.revision,
        }


def install_command(dependency: str) -> str:
    return f"pip install --no-cache-dir {dependency}"


class BuildBackend(ABC):
    """Builds a sandbox from a spec and runs commands inside it"""

    def __init__(self):
        self.logger = setup_logger(f'{self.__class__.__name__}')
        self.build_count = 0

    @abstractmethod
    def build(self, spec: SandboxSpec) -> BuildOutcome:
        """Return (outcome, log text) for one build attempt"""
        pass

    @abstractmethod
    def run(self, command: str) -> BuildOutcome:
        """Return (outcome, log text) for one command in the built sandbox"""
        pass


class ScriptedBackend(BuildBackend):
    """Replays scripted build outcomes (the last one repeats) and per-command run outcomes"""

    def __init__(self, builds: Optional[List[Any]] = None, runs: Optional[Dict[str, Any]] = None,
                 default_run: str = 'success'):
        super().__init__()
        self.builds = [self._outcome(b) for b in (builds or [('success', '')])]
        self.runs = {cmd: self._outcome(r) for cmd, r in (runs or {}).items()}
        self.default_run = default_run
        self.built_specs: List[SandboxSpec] = []
        self.commands: List[str] = []

    @staticmethod
    def _outcome(value: Any) -> BuildOutcome:
        if isinstance(value, str):
            value = (value, '')
        elif isinstance(value, dict):
            value = (value.get('outcome'), value.get('log', ''))
        outcome, log = value
        if outcome not in OUTCOMES:
            raise MalformedDocument(f"scripted outcome must be success or failure, got '{outcome}'")
        return outcome, log

    def build(self, spec: SandboxSpec) -> BuildOutcome:
        outcome = self.builds[min(self.build_count, len(self.builds) - 1)]
        self.build_count += 1
        self.built_specs.append(spec)
        self.logger.debug(f"Scripted build {self.build_count} of revision {spec.revision}: {outcome[0]}")
        return outcome

    def run(self, command: str) -> BuildOutcome:
        self.commands.append(command)
        return self.runs.get(command, (self.default_run, ''))

    @classmethod
    def from_script(cls, script: Dict[str, Any]) -> 'ScriptedBackend':
        if not isinstance(script, dict):
            raise MalformedDocument("backend script must be an object with builds and runs")
        return cls(builds=script.get('builds'), runs=script.get('runs'))

    @classmethod
    def load(cls, filename: Optional[str]) -> 'ScriptedBackend':
        return cls.from_script(read_json(filename, 'backend script')) if filename else cls()


class DockerBackend(BuildBackend):
    """Renders a Dockerfile from the spec and shells out to docker build / docker run"""

    def __init__(self, tag: str, binary: Optional[str] = None, timeout: int = 1800):
        super().__init__()
        self.tag = tag
        self.binary = binary or config.get('sandbox.docker_binary', 'docker')
        self.timeout = timeout

    @staticmethod
    def render_dockerfile(spec: SandboxSpec) -> str:
        lines = [f"FROM {spec.base_environment}", "WORKDIR /workspace"]
        lines.extend(f"RUN {command}" for command in spec.build_commands)
        lines.append(f"LABEL sandbox.revision=\"{spec.revision}\"")
        return '\n'.join(lines) + '\n'

    def _call(self, command: List[str]) -> BuildOutcome:
        self.logger.info(' '.join(command))
        try:
            completed = subprocess.run(command, capture_output=True, text=True, timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired) as e:
            return 'failure', str(e)
        log = (completed.stdout or '') + (completed.stderr or '')
        return ('success' if completed.returncode == 0 else 'failure'), log

    def build(self, spec: SandboxSpec) -> BuildOutcome:
        self.build_count += 1
        with tempfile.TemporaryDirectory() as context_dir:
            with open(os.path.join(context_dir, 'Dockerfile'), 'w', encoding='utf-8') as f:
                f.write(self.render_dockerfile(spec))
            return self._call([self.binary, 'build', '-t', self.tag, context_dir])

    def run(self, command: str) -> BuildOutcome:
        return self._call([self.binary, 'run', '--rm', self.tag, 'sh', '-c', command])
