import os
import random
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)

from graph import Edge, Node, WorkflowGraph  # noqa: E402
from graph.protocol import SchemaRegistry  # noqa: E402
from library import Library  # noqa: E402
from spec_model import load_task_spec  # noqa: E402

FIXTURES = os.path.join(ROOT, 'tests', 'fixtures')


def fixture_path(*parts: str) -> str:
    return os.path.join(FIXTURES, *parts)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def library():
    return Library.load(fixture_path('library'))


@pytest.fixture
def schemas():
    return SchemaRegistry.load(fixture_path('library', 'schemas.json'))


@pytest.fixture
def serial_spec():
    return load_task_spec(fixture_path('specs', 'serial.json'))


@pytest.fixture
def parallel_spec():
    return load_task_spec(fixture_path('specs', 'parallel.json'))


@pytest.fixture
def linear_spec():
    return load_task_spec(fixture_path('specs', 'linear.json'))


@pytest.fixture
def linear_graph():
    nodes = [Node(id=n, kind='agent', instruction=f"Task: step {n}.", executor_binding='agent:default')
             for n in ('a', 'b', 'c')]
    return WorkflowGraph.build(nodes=nodes, edges=[Edge('a', 'b'), Edge('b', 'c')],
                               roles={'a': 'load counts', 'b': 'cluster cells', 'c': 'write a report'})


def build_random_dag(rng: random.Random, max_nodes: int = 20, tools=(), edge_probability: float = 0.3) -> WorkflowGraph:
    """Agent nodes n00.. with forward edges only; each node may carry some of `tools`"""
    count = rng.randint(1, max_nodes)
    ids = [f"n{i:02d}" for i in range(count)]
    nodes = [Node(id=n, kind='agent', instruction=f"Task: step {n}.", executor_binding='agent:default')
             for n in ids]
    edges = [Edge(ids[i], ids[j]) for i in range(count) for j in range(i + 1, count)
             if rng.random() < edge_probability]
    attachments = {}
    for node_id in ids:
        if tools and rng.random() < 0.5:
            attachments[node_id] = rng.sample(list(tools), rng.randint(1, min(2, len(tools))))
    roles = {node_id: f"process {rng.choice(['counts', 'markers', 'clusters', 'peaks'])}" for node_id in ids}
    return WorkflowGraph.build(nodes=nodes, edges=edges, attachments=attachments, roles=roles)


@pytest.fixture
def random_dag():
    return build_random_dag
