import os
import random

import pytest

from errors import (CyclicGraph, CyclicReference, EmptyGraph, MalformedDocument, PatchOutOfLocality,
                    PatchYieldsInvalidGraph)
from graph import (ArtifactSchema, BrokerMapping, Edge, EdgeChange, GraphPatch, InterfaceProtocol, Node,
                   NodeChange, SchemaChange, SchemaField, WorkflowGraph, apply_patch, check_locality,
                   deserialize_graph, diff_graphs, import_reference_graph, load_graph, load_reference_graph,
                   patch_closure, serialize_graph, stage_index, stage_labels, topological_stages, validate_graph)
from library import Library, LibraryEntry
from reviewer import RepairActionKind, repair

TOOLS = ('counts_tool', 'markers_tool', 'clusters_tool', 'peaks_tool')


def _typed_pair(broker=False):
    table = ArtifactSchema('marker_table', (SchemaField('markers', 'list-of-record'),), ('markers',))
    genes = ArtifactSchema('gene_set', (SchemaField('genes', 'list-of-text'),), ('genes',))
    nodes = [Node('up', 'agent', output_schema='marker_table'), Node('down', 'agent', input_schema='gene_set')]
    mappings = {}
    if broker:
        nodes.append(Node('br', 'broker', input_schema='marker_table', output_schema='gene_set', phase='broker'))
        edges = [Edge('up', 'br', 'marker_table'), Edge('br', 'down', 'gene_set')]
        mappings['br'] = BrokerMapping('marker_table', 'gene_set', {'genes': 'markers'})
    else:
        edges = [Edge('up', 'down', 'marker_table')]
    protocol = InterfaceProtocol(schemas={'marker_table': table, 'gene_set': genes}, mappings=mappings)
    return WorkflowGraph.build(nodes=nodes, edges=edges, protocol=protocol)


def test_fixture_graph_is_valid(fixtures_dir):
    graph = load_graph(os.path.join(fixtures_dir, 'graphs', 'linear.json'))

    assert validate_graph(graph).ok
    assert topological_stages(graph) == [['a'], ['b'], ['c']]
    assert stage_labels(graph) == [['execution'], ['execution'], ['reporting']]


def test_cycle_is_reported(fixtures_dir):
    graph = load_graph(os.path.join(fixtures_dir, 'graphs', 'cyclic.json'))
    report = validate_graph(graph)

    assert 'cycle' in report.codes()
    with pytest.raises(CyclicGraph):
        topological_stages(graph)


def test_dangling_edge_and_unknown_schema():
    graph = WorkflowGraph.build(nodes=[Node('a', 'agent')], edges=[Edge('a', 'ghost'), ])
    assert 'dangling_edge' in validate_graph(graph).codes()

    graph = WorkflowGraph.build(nodes=[Node('a', 'agent'), Node('b', 'agent')], edges=[Edge('a', 'b', 'mystery')])
    assert 'unknown_schema' in validate_graph(graph).codes()


def test_mismatched_handoff_needs_a_broker():
    assert 'interface' in validate_graph(_typed_pair()).codes()
    assert validate_graph(_typed_pair(broker=True)).ok


def test_broker_without_mapping_or_with_extra_edges():
    graph = _typed_pair(broker=True)
    unmapped = graph.evolve(protocol=InterfaceProtocol(schemas=dict(graph.protocol.schemas)))
    assert 'broker_mapping' in validate_graph(unmapped).codes()

    extra = graph.evolve(nodes=graph.nodes + (Node('side', 'agent', input_schema='gene_set'),),
                         edges=graph.edges + (Edge('br', 'side', 'gene_set'),))
    assert 'broker_degree' in validate_graph(extra).codes()


def test_unknown_attachment_is_reported(linear_graph):
    graph = linear_graph.evolve(attachments={'a': ['not_in_library']})

    assert validate_graph(graph).ok
    assert 'unknown_attachment' in validate_graph(graph, known_entries=[]).codes()


def test_parallel_branches_share_a_stage():
    nodes = [Node(n, 'agent') for n in ('src', 'left', 'right', 'join')]
    edges = [Edge('src', 'left'), Edge('src', 'right'), Edge('left', 'join'), Edge('right', 'join')]
    graph = WorkflowGraph.build(nodes=nodes, edges=edges)

    assert topological_stages(graph) == [['src'], ['left', 'right'], ['join']]


def test_import_reference_graph(fixtures_dir):
    skeleton = load_reference_graph(os.path.join(fixtures_dir, 'reference', 'linear.json'))

    assert skeleton.node_ids() == ['annotate', 'cluster', 'qc']
    assert skeleton.roles == {'annotate': 'annotate clusters with markers', 'cluster': 'cluster cells',
                              'qc': 'filter low quality cells'}
    assert [e.schema for e in skeleton.edges] == ['any', 'any']
    assert skeleton.attachments == {}
    assert validate_graph(skeleton).ok


@pytest.mark.parametrize('name', ['self_loop.json', 'loop.json'])
def test_import_rejects_loops(fixtures_dir, name):
    with pytest.raises(CyclicReference):
        load_reference_graph(os.path.join(fixtures_dir, 'reference', name))


def test_import_rejects_empty_graph(fixtures_dir):
    with pytest.raises(EmptyGraph):
        load_reference_graph(os.path.join(fixtures_dir, 'reference', 'empty.json'))


def test_import_rejects_unknown_edge_endpoint():
    with pytest.raises(MalformedDocument):
        import_reference_graph({'nodes': [{'id': 'a'}], 'edges': [{'from': 'a', 'to': 'b'}]})


def test_apply_patch_leaves_input_untouched(linear_graph):
    before = serialize_graph(linear_graph)
    node = linear_graph.node('b').with_changes(instruction='Task: cluster cells again.')
    patched = apply_patch(linear_graph, GraphPatch(frozenset({'b'}), (NodeChange('modify', node),)))

    assert serialize_graph(linear_graph) == before
    assert patched.node('b').instruction == 'Task: cluster cells again.'


def test_change_outside_targets_is_rejected(linear_graph):
    node = linear_graph.node('c').with_changes(instruction='changed')
    patch = GraphPatch(frozenset({'a'}), (NodeChange('modify', node),))

    with pytest.raises(PatchOutOfLocality):
        check_locality(linear_graph, patch)
    with pytest.raises(PatchOutOfLocality):
        apply_patch(linear_graph, patch)


def test_edge_change_needs_an_implicated_endpoint(linear_graph):
    patch = GraphPatch(frozenset({'b'}), edge_changes=(EdgeChange('add', Edge('a', 'c')),))

    with pytest.raises(PatchOutOfLocality):
        apply_patch(linear_graph, patch)


def test_patch_creating_a_cycle_is_invalid(linear_graph):
    patch = GraphPatch(frozenset({'c'}), edge_changes=(EdgeChange('add', Edge('c', 'a')),))

    with pytest.raises(PatchYieldsInvalidGraph):
        apply_patch(linear_graph, patch)


def test_diff_then_apply_reproduces_the_target(linear_graph):
    added = Node('d', 'agent', instruction='Task: archive.')
    after = linear_graph.evolve(nodes=linear_graph.nodes + (added,), edges=linear_graph.edges + (Edge('c', 'd'),),
                                attachments={'c': ['clusters_tool']})
    patch = diff_graphs(linear_graph, after)

    assert apply_patch(linear_graph, patch) == after
    assert diff_graphs(after, after).is_empty()


def test_diff_carries_new_edge_schemas():
    before = WorkflowGraph.build(nodes=[Node('a', 'agent', output_schema='x')])
    schema = ArtifactSchema('x', (SchemaField('value', 'text'),), ('value',))
    after = before.evolve(nodes=before.nodes + (Node('b', 'agent', input_schema='x'),),
                          edges=(Edge('a', 'b', 'x'),), protocol=InterfaceProtocol(schemas={'x': schema}))

    patch = diff_graphs(before, after)

    assert [(c.op, c.schema.id) for c in patch.schema_changes] == [('set', 'x')]
    assert apply_patch(before, patch) == after
    assert apply_patch(after, diff_graphs(after, before)) == before
    assert GraphPatch.from_dict(patch.to_dict()) == patch


def test_removing_a_schema_still_in_use_is_invalid():
    graph = _typed_pair(broker=True)
    patch = GraphPatch(frozenset({'up'}), schema_changes=(SchemaChange('remove', graph.protocol.schema('gene_set')),))

    with pytest.raises(PatchYieldsInvalidGraph):
        apply_patch(graph, patch)


def test_stages_respect_every_edge(random_dag):
    rng = random.Random(77)

    for _ in range(200):
        graph = random_dag(rng, max_nodes=20)
        stages = topological_stages(graph)
        index = stage_index(graph)

        assert sorted(n for stage in stages for n in stage) == graph.node_ids()
        assert all(index[e.source] < index[e.target] for e in graph.edges)
        assert all(stage for stage in stages)


def _tool_library():
    return Library(LibraryEntry(id=t, kind='tool', description=f"process {t.split('_')[0]}",
                                input_schema='any', output_schema='any') for t in TOOLS)


def test_repair_patches_stay_within_their_closure(random_dag):
    rng = random.Random(20240601)
    library = _tool_library()
    actions = [RepairActionKind.RETRY_WITH_UPDATED_INSTRUCTION, RepairActionKind.ADD_PARALLEL_SOLVER,
               RepairActionKind.SWAP_TOOL_BACKEND, RepairActionKind.REFORMAT_UPSTREAM_OUTPUT]
    violations = []
    applied = 0

    for _ in range(200):
        graph = random_dag(rng, max_nodes=20, tools=TOOLS)
        node_id = rng.choice(graph.node_ids())
        action = rng.choice(actions)
        try:
            patch = repair(graph, node_id, action, library=library, round_no=rng.randint(1, 3))
        except PatchYieldsInvalidGraph:
            # swapping needs an attached tool
            assert action == RepairActionKind.SWAP_TOOL_BACKEND
            continue

        patched = apply_patch(graph, patch)
        diff = diff_graphs(graph, patched)
        assert apply_patch(graph, diff) == patched
        touched = diff.touched_nodes()
        closure = patch_closure(graph, patch)
        if not touched <= closure:
            violations.append((node_id, action, sorted(touched - closure)))
        applied += 1

    assert violations == []
    assert applied > 100


def test_graph_serialization_round_trips(random_dag, fixtures_dir):
    rng = random.Random(5)
    graphs = [random_dag(rng, max_nodes=12, tools=TOOLS) for _ in range(25)]
    graphs.append(load_graph(os.path.join(fixtures_dir, 'graphs', 'linear.json')))
    graphs.append(_typed_pair(broker=True))

    for graph in graphs:
        text = serialize_graph(graph)
        assert serialize_graph(deserialize_graph(text)) == text
        assert deserialize_graph(text) == graph
