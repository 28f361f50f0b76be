import json
import threading
import time
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional, Tuple

import requests

from config import config
from errors import MalformedDocument, UnresolvedExecutor
from graph.model import Node
from utils.file_utils import read_json
from utils.logger import setup_logger
from .messages import EvidenceSignal, output_signal, suite_signal, tool_signal

ExecutorResult = Tuple[Any, List[EvidenceSignal], int]

STEP_KEYS = ('artifact', 'confidence', 'tests', 'tool_errors', 'cost', 'raise')
DEFAULT_STEP: Dict[str, Any] = {'artifact': {}, 'confidence': 1.0, 'cost': 0}


class BaseExecutor(ABC):
    """Runs one node: run(instruction, attachments, inputs) -> (artifact, signals, cost)"""

    def __init__(self, node_id: str = ''):
        self.node_id = node_id
        self.logger = setup_logger(f'{self.__class__.__name__}')

    @abstractmethod
    def run(self, instruction: str, attachments: List[str], inputs: Dict[str, Any]) -> ExecutorResult:
        """Produce the node's artifact, its evidence signals and the cost it incurred"""
        pass


class ScriptedExecutor(BaseExecutor):
    """Replays scripted steps for one node. Each call consumes the next step;
    the last step repeats once the script runs out."""

    def __init__(self, node_id: str, steps: Optional[List[Dict[str, Any]]] = None):
        super().__init__(node_id)
        self.steps = [dict(s) for s in (steps or [DEFAULT_STEP])]
        for step in self.steps:
            unknown = sorted(set(step) - set(STEP_KEYS))
            if unknown:
                raise MalformedDocument(f"script step for '{node_id}' has unknown keys: {', '.join(unknown)}")
        self.calls = 0
        self.received: List[Dict[str, Any]] = []
        self._lock = threading.Lock()

    def next_step(self) -> Dict[str, Any]:
        with self._lock:
            step = self.steps[min(self.calls, len(self.steps) - 1)]
            self.calls += 1
        return step

    def run(self, instruction: str, attachments: List[str], inputs: Dict[str, Any]) -> ExecutorResult:
        step = self.next_step()
        self.received.append({'instruction': instruction, 'attachments': list(attachments), 'inputs': inputs})

        if step.get('raise'):
            raise RuntimeError(step['raise'])

        signals = [output_signal(self.node_id, float(step.get('confidence', 1.0)))]
        tests = step.get('tests')
        if tests:
            signals.append(suite_signal(self.node_id, int(tests.get('pass', 0)), int(tests.get('fail', 0))))
        tool_errors = int(step.get('tool_errors', 0))
        if tool_errors:
            signals.append(tool_signal(self.node_id, tool_errors, 'scripted tool errors', severity='warn'))

        artifact = step.get('artifact', {})
        return json.loads(json.dumps(artifact)), signals, step.get('cost', 0)


class RemoteExecutor(BaseExecutor):
    """Adapter for an OpenAI-compatible chat completion endpoint"""

    def __init__(self, node_id: str = '', base_url: Optional[str] = None, api_key: Optional[str] = None,
                 model: Optional[str] = None, timeout: Optional[int] = None):
        super().__init__(node_id)
        self.base_url = (base_url or config.get('runtime.executor_url', '')).rstrip('/')
        self.model = model or config.get('runtime.executor_model')
        self.timeout = timeout or config.get('runtime.request_timeout', 60)
        self.session = requests.Session()
        self.session.headers.update({
            'Content-Type': 'application/json',
            'Authorization': f"Bearer {api_key or config.get('runtime.executor_api_key', '')}",
        })

    def _post(self, payload: Dict[str, Any]) -> Dict[str, Any]:
        """POST with retries on rate limiting"""
        max_retries = 3
        retry_delay = 2

        for attempt in range(max_retries):
            try:
                response = self.session.post(f"{self.base_url}/chat/completions", json=payload, timeout=self.timeout)
                if response.status_code == 200:
                    return response.json()
                elif response.status_code == 429:  # Rate limited
                    retry_after = int(response.headers.get('Retry-After', retry_delay * (attempt + 1)))
                    self.logger.warning(f"Rate limited. Waiting {retry_after} seconds...")
                    time.sleep(retry_after)
                    continue
                else:
                    raise RuntimeError(f"executor endpoint returned HTTP {response.status_code}: {response.text[:200]}")
            except requests.RequestException as e:
                self.logger.error(f"Request failed (attempt {attempt + 1}): {e}")
                if attempt < max_retries - 1:
                    time.sleep(retry_delay * (attempt + 1))
                    continue
                raise RuntimeError(f"executor endpoint unreachable: {e}") from e

        raise RuntimeError("executor endpoint kept rate limiting")

    def run(self, instruction: str, attachments: List[str], inputs: Dict[str, Any]) -> ExecutorResult:
        system = instruction
        if attachments:
            system += "\n\nAvailable skills and tools: " + ', '.join(attachments)
        system += "\n\nReply with a single JSON object."

        data = self._post({
            'model': self.model,
            'messages': [
                {'role': 'system', 'content': system},
                {'role': 'user', 'content': json.dumps(inputs, sort_keys=True)},
            ],
        })

        content = data['choices'][0]['message']['content']
        try:
            artifact = json.loads(content)
        except ValueError:
            artifact = {'text': content}

        confidence = artifact.get('confidence', 1.0) if isinstance(artifact, dict) else 1.0
        cost = int(data.get('usage', {}).get('total_tokens', 0))
        return artifact, [output_signal(self.node_id, float(confidence))], cost


class ExecutorRegistry:
    """Resolves a node to its executor: by node id, then by executor binding,
    then through the fallback factory"""

    def __init__(self, factory: Optional[Callable[[Node], BaseExecutor]] = None):
        self.logger = setup_logger('ExecutorRegistry')
        self.by_node: Dict[str, BaseExecutor] = {}
        self.by_binding: Dict[str, BaseExecutor] = {}
        self.factory = factory
        self._lock = threading.Lock()

    def register(self, binding: str, executor: BaseExecutor) -> str:
        self.by_binding[binding] = executor
        return binding

    def register_node(self, node_id: str, executor: BaseExecutor) -> None:
        self.by_node[node_id] = executor

    def resolve(self, node: Node) -> BaseExecutor:
        with self._lock:
            if node.id in self.by_node:
                return self.by_node[node.id]
            if node.executor_binding in self.by_binding:
                return self.by_binding[node.executor_binding]
            if self.factory is not None:
                executor = self.factory(node)
                self.by_node[node.id] = executor
                return executor
        raise UnresolvedExecutor(f"no executor for node '{node.id}' (binding '{node.executor_binding}')")

    def has(self, node: Node) -> bool:
        return node.id in self.by_node or node.executor_binding in self.by_binding or self.factory is not None

    @classmethod
    def from_script(cls, script: Dict[str, Any]) -> 'ExecutorRegistry':
        """Scripted executors for every node; `*` gives the step for unscripted nodes"""
        if not isinstance(script, dict):
            raise MalformedDocument("executor script must map node ids to steps")

        def steps_of(value: Any) -> List[Dict[str, Any]]:
            steps = value if isinstance(value, list) else [value]
            if not steps or not all(isinstance(s, dict) for s in steps):
                raise MalformedDocument("script steps must be objects")
            return steps

        fallback = steps_of(script['*']) if '*' in script else None
        registry = cls(factory=lambda node: ScriptedExecutor(node.id, fallback))
        for node_id, value in script.items():
            if node_id != '*':
                registry.register_node(node_id, ScriptedExecutor(node_id, steps_of(value)))
        return registry

    @classmethod
    def load_script(cls, filename: Optional[str]) -> 'ExecutorRegistry':
        return cls.from_script(read_json(filename, 'executor script') if filename else {})

    @classmethod
    def remote(cls) -> 'ExecutorRegistry':
        return cls(factory=lambda node: RemoteExecutor(node.id))
