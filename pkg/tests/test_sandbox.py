import json
import os
import shlex

import pytest

from errors import BuildExhausted, InvalidConstraints, MalformedDocument, UnbuiltSandbox
from graph import Edge, Node, WorkflowGraph
from library import Library
from runtime import ExecutorRegistry, execute
from sandbox import (PROFILE_BINDING, REGISTER_BINDING, SANDBOX_BINDING, BuildReport, BuildRound,
                     ContainerExecutor, DockerBackend, ExecutorBindings, RepositorySetup, SandboxSpec,
                     ScriptedBackend, classify_log, draft_sandbox, load_repository_profile, missing_dependencies,
                     profile_repository, register_executor, register_tool, smoke_test, synthesize_sandbox)
from spec_model import task_spec_from_dict

ENTRY_POINT = 'python -m tissueagent.run'


@pytest.fixture
def profile(fixtures_dir):
    return load_repository_profile(os.path.join(fixtures_dir, 'repos', 'tissueagent.json'))


def _backend(fixtures_dir, name):
    return ScriptedBackend.load(os.path.join(fixtures_dir, 'backends', name))


def _built():
    return BuildReport(rounds=[BuildRound(0, 'success', '')])


def test_profile_reads_metadata(profile):
    assert profile.locator == 'repos/tissueagent'
    assert profile.declared_dependencies == ('numpy', 'pandas')
    assert profile.entry_points == (ENTRY_POINT,)
    assert len(profile.test_commands) == 2


def test_bare_profile_has_empty_lists(fixtures_dir):
    bare = load_repository_profile(os.path.join(fixtures_dir, 'repos', 'bare.json'))

    assert bare.to_dict() == {'locator': 'repos/bare', 'dependencies': [], 'entry_points': [], 'tests': [],
                              'docs': []}


def test_profile_needs_a_locator():
    with pytest.raises(MalformedDocument):
        profile_repository({'dependencies': ['numpy']})
    with pytest.raises(MalformedDocument):
        profile_repository({'locator': 'repo', 'tests': 'pytest'})


def test_classify_log():
    assert classify_log('missing dependency: scanpy') == ['missing_dependency']
    assert classify_log('pull access denied for python') == ['base_image']
    assert classify_log('segfault') == ['other']
    assert classify_log('') == ['other']


def test_missing_dependencies_in_log_order():
    log = 'missing dependency: scanpy.\nmissing dependency: anndata\nmissing dependency: scanpy'

    assert missing_dependencies(log) == ['scanpy', 'anndata']
    assert missing_dependencies('all good') == []


def test_draft_installs_declared_dependencies(profile):
    spec = draft_sandbox(profile, base_environment='python:3.11-slim')

    assert spec.revision == 0
    assert spec.dependency_list == ('numpy', 'pandas')
    assert len(spec.build_commands) == 2


def test_revise_appends_only_new_dependencies():
    spec = SandboxSpec('python:3.11-slim', ('numpy',), ('pip install --no-cache-dir numpy',))
    revised = spec.revise(['numpy', 'scanpy'])

    assert revised.dependency_list == ('numpy', 'scanpy')
    assert revised.revision == 1
    assert spec.revision == 0


def test_failing_build_is_repaired_in_two_rounds(profile, fixtures_dir):
    backend = _backend(fixtures_dir, 'fail_once.json')

    spec, report = synthesize_sandbox(profile, backend, max_rounds=3)

    assert len(report.rounds) == 2
    assert [r.outcome for r in report.rounds] == ['failure', 'success']
    assert spec.revision == 1
    assert spec.dependency_list[-1] == 'scanpy'
    assert report.final_outcome == 'success'
    assert report.smoke == {'pass': 1, 'fail': 1}
    assert backend.build_count == 2


def test_always_failing_build_exhausts_and_keeps_every_log(profile, fixtures_dir):
    backend = _backend(fixtures_dir, 'always_fail.json')

    with pytest.raises(BuildExhausted) as caught:
        synthesize_sandbox(profile, backend, max_rounds=3)

    report = caught.value.report
    assert len(report.rounds) == 3
    assert report.final_outcome == 'failure'
    assert [r.log for r in report.rounds] == ['missing dependency: anndata', 'missing dependency: scanpy',
                                              'pull access denied for base image']
    assert report.rounds[-1].unhandled == ('base_image',)
    assert caught.value.spec.dependency_list == ('numpy', 'pandas', 'anndata', 'scanpy')
    assert backend.build_count == 3


def test_smoke_test_without_tests(fixtures_dir):
    bare = load_repository_profile(os.path.join(fixtures_dir, 'repos', 'bare.json'))

    assert smoke_test(draft_sandbox(bare), bare, ScriptedBackend())['note'] == 'no tests'


def test_register_executor_needs_a_successful_build(profile):
    spec = draft_sandbox(profile)
    failed = BuildReport(rounds=[BuildRound(0, 'failure', 'boom')])

    with pytest.raises(UnbuiltSandbox):
        register_executor(Node('sg1', 'agent'), spec, failed, ExecutorBindings())


def test_register_executor_binds_each_node(profile):
    spec = draft_sandbox(profile).revise(['scanpy'])
    bindings = ExecutorBindings()

    first, node = register_executor(Node('sg1', 'agent'), spec, _built(), bindings, profile)
    second, _ = register_executor(Node('sg2', 'agent'), spec, _built(), bindings, profile)

    assert first == 'sandbox:sg1:r1'
    assert node.executor_binding == first
    assert second != first
    assert bindings.spec_for(first) == bindings.spec_for(second) == spec


def test_register_tool_attaches_the_wrapped_method(profile, linear_graph):
    library = Library()
    bindings = ExecutorBindings()

    entry_id, graph = register_tool(linear_graph, 'b', profile, draft_sandbox(profile), _built(), bindings,
                                    library)

    assert entry_id == 'repos_tissueagent_method'
    assert library.get(entry_id).kind == 'tool'
    assert library.get(entry_id).provenance == 'repos/tissueagent'
    assert entry_id in graph.attached('b')
    assert graph.node('b').executor_binding == linear_graph.node('b').executor_binding
    assert f"tool:{entry_id}" in bindings
    assert linear_graph.attached('b') == frozenset()


def test_register_tool_needs_an_entry_point(fixtures_dir, linear_graph):
    bare = load_repository_profile(os.path.join(fixtures_dir, 'repos', 'bare.json'))

    with pytest.raises(UnbuiltSandbox):
        register_tool(linear_graph, 'b', bare, draft_sandbox(bare), _built(), ExecutorBindings(), Library())


def test_container_executor_runs_the_entry_point(profile):
    backend = ScriptedBackend(runs={f"{ENTRY_POINT} '{{}}'": ('success', '{"genes": ["CD3E"]}')})
    bindings = ExecutorBindings()
    registry = ExecutorRegistry()
    binding, node = register_executor(Node('sg1', 'agent'), draft_sandbox(profile), _built(), bindings, profile)
    bindings.install(registry, backend)

    artifact, signals, cost = registry.resolve(node).run('', [], {})

    assert artifact == {'genes': ['CD3E']}
    assert cost == 0
    assert backend.commands == [f"{ENTRY_POINT} '{{}}'"]


def test_container_failure_surfaces_as_a_node_failure(profile):
    backend = ScriptedBackend(default_run='failure')
    bindings = ExecutorBindings()
    registry = ExecutorRegistry()
    _, node = register_executor(Node('sg1', 'agent'), draft_sandbox(profile), _built(), bindings, profile)
    bindings.install(registry, backend)
    graph = WorkflowGraph.build(nodes=[node])

    trace = execute(graph, task_spec_from_dict({'goal': 'identify markers'}), registry)

    assert trace.outcome == 'failure'
    assert trace.node_results['sg1'].status == 'failure'


def test_dockerfile_lists_build_commands():
    spec = SandboxSpec('python:3.11-slim', ('numpy',), ('pip install --no-cache-dir numpy',), revision=2)

    dockerfile = DockerBackend.render_dockerfile(spec)

    assert dockerfile.splitlines()[0] == 'FROM python:3.11-slim'
    assert 'RUN pip install --no-cache-dir numpy' in dockerfile
    assert 'sandbox.revision="2"' in dockerfile


def test_container_command_quotes_its_inputs():
    backend = ScriptedBackend()
    executor = ContainerExecutor('sg1', backend, 'run.sh')
    inputs = {'u': {'note': "it's; rm -rf /"}}

    executor.run('', [], inputs)

    assert shlex.split(backend.commands[0]) == ['run.sh', json.dumps(inputs, sort_keys=True)]


def test_build_bound_must_be_positive(profile):
    with pytest.raises(InvalidConstraints):
        synthesize_sandbox(profile, ScriptedBackend(), max_rounds=0)


def _setup_graph():
    chain = [Node('profile_repositories', 'tool', executor_binding=PROFILE_BINDING, phase='profiling'),
             Node('build_sandboxes', 'tool', executor_binding=SANDBOX_BINDING, phase='sandbox'),
             Node('register_agents', 'tool', executor_binding=REGISTER_BINDING, phase='registration'),
             Node('annotate', 'external', executor_binding='external:tissueagent')]
    edges = [Edge(a.id, b.id) for a, b in zip(chain, chain[1:])]
    return WorkflowGraph.build(nodes=chain, edges=edges)


def _repository_spec(locator):
    return task_spec_from_dict({'goal': 'annotate cell types',
                                'resources': [{'id': 'tissueagent', 'kind': 'repository', 'locator': locator}]})


def test_setup_chain_backs_external_nodes_with_containers(fixtures_dir):
    backend = ScriptedBackend()
    spec = _repository_spec('repos/tissueagent')
    registry = ExecutorRegistry()
    setup = RepositorySetup(spec, lambda locator: backend, base_dir=fixtures_dir)
    setup.install(registry, _setup_graph())

    trace = execute(_setup_graph(), spec, registry)

    assert trace.outcome == 'success'
    assert trace.node_results['profile_repositories'].artifact['profiles'][0]['locator'] == 'repos/tissueagent'
    assert trace.node_results['build_sandboxes'].artifact['sandboxes'][0]['smoke'] == {'pass': 2, 'fail': 0}
    assert trace.node_results['register_agents'].artifact['registered'] == {
        'external:tissueagent': 'sandbox:tissueagent:r0'}
    assert backend.build_count == 1
    command = shlex.split(backend.commands[-1])
    assert command[:3] == ['python', '-m', 'tissueagent.run']
    assert 'register_agents' in json.loads(command[-1])


def test_setup_chain_fails_without_metadata(fixtures_dir):
    spec = _repository_spec('repos/missing')
    registry = ExecutorRegistry()
    RepositorySetup(spec, lambda locator: ScriptedBackend(), base_dir=fixtures_dir).install(registry, _setup_graph())

    trace = execute(_setup_graph(), spec, registry)

    assert trace.outcome == 'failure'
    assert trace.node_results['profile_repositories'].status == 'failure'
    assert trace.node_results['annotate'].status == 'skipped'


def test_external_node_needs_a_registered_sandbox(fixtures_dir):
    spec = _repository_spec('repos/tissueagent')
    setup = RepositorySetup(spec, lambda locator: ScriptedBackend(), base_dir=fixtures_dir)
    setup.install(ExecutorRegistry())

    with pytest.raises(UnbuiltSandbox):
        setup.executor_for('external:tissueagent')


def test_failing_sandbox_build_fails_the_setup_node(fixtures_dir):
    backend = ScriptedBackend.load(os.path.join(fixtures_dir, 'backends', 'always_fail.json'))
    spec = _repository_spec('repos/tissueagent')
    registry = ExecutorRegistry()
    RepositorySetup(spec, lambda locator: backend, base_dir=fixtures_dir, max_rounds=2).install(
        registry, _setup_graph())

    trace = execute(_setup_graph(), spec, registry)

    assert trace.node_results['profile_repositories'].status == 'success'
    assert trace.node_results['build_sandboxes'].status == 'failure'
    assert 'BuildExhausted' in trace.node_results['build_sandboxes'].error
    assert backend.build_count == 2
