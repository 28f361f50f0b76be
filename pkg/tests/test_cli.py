import json
import os

import pytest
from click.testing import CliRunner

from cli.main import cli
from utils.file_utils import read_json


@pytest.fixture
def runner():
    return CliRunner()


def _fixture(fixtures_dir, *parts):
    return os.path.join(fixtures_dir, *parts)


def test_validate_reports_node_and_edge_counts(runner, fixtures_dir):
    result = runner.invoke(cli, ['validate', _fixture(fixtures_dir, 'graphs', 'linear.json')])

    assert result.exit_code == 0
    assert "Graph is valid: 3 nodes, 2 edges" in result.output


def test_validate_lists_violations(runner, fixtures_dir):
    result = runner.invoke(cli, ['validate', _fixture(fixtures_dir, 'graphs', 'cyclic.json')])

    assert result.exit_code == 1
    assert 'cycle' in result.output


def test_validate_reports_a_mismatched_handoff(runner, fixtures_dir):
    result = runner.invoke(cli, ['validate', _fixture(fixtures_dir, 'graphs', 'mismatched.json')])

    assert result.exit_code == 1
    assert 'interface' in result.output


def test_missing_file_is_an_error(runner, tmp_path):
    result = runner.invoke(cli, ['validate', str(tmp_path / 'nowhere.json')])

    assert result.exit_code == 1
    assert 'Error:' in result.output


def test_malformed_spec_is_an_error(runner, tmp_path):
    spec_path = tmp_path / 'spec.json'
    spec_path.write_text('{"context": "no goal here"}')

    result = runner.invoke(cli, ['synthesize', str(spec_path), '--out', str(tmp_path / 'graph.json')])

    assert result.exit_code == 1
    assert 'MissingGoal' in result.output


def test_synthesize_then_run_serial_scenario(runner, fixtures_dir, tmp_path):
    graph_path = str(tmp_path / 'graph.json')
    out_dir = str(tmp_path / 'run')

    result = runner.invoke(cli, ['synthesize', _fixture(fixtures_dir, 'specs', 'serial.json'),
                                 '--library', _fixture(fixtures_dir, 'library'), '--out', graph_path])
    assert result.exit_code == 0, result.output
    assert 'profiling -> sandbox -> registration -> execution -> broker' in result.output

    result = runner.invoke(cli, ['run', graph_path, _fixture(fixtures_dir, 'specs', 'serial.json'),
                                 '--scripts', _fixture(fixtures_dir, 'scripts', 'serial.json'),
                                 '--repo-dir', fixtures_dir, '--out-dir', out_dir])
    assert result.exit_code == 0, result.output
    for name in ('graph.json', 'instance_graph.json', 'trace.json', 'patches.json', 'report.txt', 'report.json'):
        assert os.path.exists(os.path.join(out_dir, name))

    report = read_json(os.path.join(out_dir, 'report.json'))
    assert report['task_id'] == 'serial'
    assert report['outcome'] == 'success'
    assert report['stop_reason'] == 'validation_succeeded'
    assert os.path.exists(os.path.join(out_dir, 'artifacts', 'sg1_identify_cell_type.json'))
    registered = read_json(os.path.join(out_dir, 'artifacts', 'register_agents.json'))['registered']
    assert registered == {'external:geneagent': 'sandbox:geneagent:r0', 'external:tissueagent': 'sandbox:tissueagent:r0'}


def test_synthesize_is_byte_identical_across_runs(runner, fixtures_dir, tmp_path):
    paths = [str(tmp_path / 'first.json'), str(tmp_path / 'second.json')]
    for path in paths:
        result = runner.invoke(cli, ['synthesize', _fixture(fixtures_dir, 'specs', 'parallel.json'),
                                     '--library', _fixture(fixtures_dir, 'library'), '--out', path])
        assert result.exit_code == 0, result.output

    with open(paths[0], 'rb') as first, open(paths[1], 'rb') as second:
        assert first.read() == second.read()


def test_clean_run_uses_no_repair_rounds(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['run', _fixture(fixtures_dir, 'graphs', 'linear.json'),
                                 _fixture(fixtures_dir, 'specs', 'linear.json'),
                                 '--scripts', _fixture(fixtures_dir, 'scripts', 'linear_ok.json'),
                                 '--out-dir', str(tmp_path)])

    assert result.exit_code == 0, result.output
    report = read_json(os.path.join(str(tmp_path), 'report.json'))
    assert report['rounds_used'] == 0
    assert report['total_cost'] == 30


def test_run_repairs_a_flaky_node(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['run', _fixture(fixtures_dir, 'graphs', 'linear.json'),
                                 _fixture(fixtures_dir, 'specs', 'linear.json'),
                                 '--scripts', _fixture(fixtures_dir, 'scripts', 'linear_flaky.json'),
                                 '--out-dir', str(tmp_path)])

    assert result.exit_code == 0, result.output
    assert 'Repair rounds: 1' in result.output
    assert len(read_json(os.path.join(str(tmp_path), 'patches.json'))) == 1


def test_run_exits_2_when_repairs_run_out(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['run', _fixture(fixtures_dir, 'graphs', 'linear.json'),
                                 _fixture(fixtures_dir, 'specs', 'linear.json'),
                                 '--scripts', _fixture(fixtures_dir, 'scripts', 'linear_broken.json'),
                                 '--out-dir', str(tmp_path)])

    assert result.exit_code == 2
    report = read_json(os.path.join(str(tmp_path), 'report.json'))
    assert report['stop_reason'] == 'max_rounds_reached'
    assert report['rounds_used'] == 3


def test_run_exits_3_on_budget_exhaustion(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['run', _fixture(fixtures_dir, 'graphs', 'linear.json'),
                                 _fixture(fixtures_dir, 'specs', 'tight_budget.json'),
                                 '--scripts', _fixture(fixtures_dir, 'scripts', 'linear_ok.json'),
                                 '--out-dir', str(tmp_path)])

    assert result.exit_code == 3
    assert 'budget_exhausted' in result.output


def test_run_exits_3_when_every_node_overspends(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['run', _fixture(fixtures_dir, 'graphs', 'linear.json'),
                                 _fixture(fixtures_dir, 'specs', 'tight_budget.json'),
                                 '--scripts', _fixture(fixtures_dir, 'scripts', 'expensive.json'),
                                 '--out-dir', str(tmp_path)])

    assert result.exit_code == 3
    assert read_json(os.path.join(str(tmp_path), 'report.json'))['total_cost'] == 100


def test_budget_flag_overrides_the_spec(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['run', _fixture(fixtures_dir, 'graphs', 'linear.json'),
                                 _fixture(fixtures_dir, 'specs', 'linear.json'),
                                 '--scripts', _fixture(fixtures_dir, 'scripts', 'expensive.json'),
                                 '--budget', '150', '--out-dir', str(tmp_path)])

    assert result.exit_code == 3


def test_invalid_budget_flag(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['run', _fixture(fixtures_dir, 'graphs', 'linear.json'),
                                 _fixture(fixtures_dir, 'specs', 'linear.json'),
                                 '--budget', '0', '--out-dir', str(tmp_path)])

    assert result.exit_code == 1
    assert 'InvalidBudget' in result.output


def test_import_writes_a_skeleton(runner, fixtures_dir, tmp_path):
    out_path = str(tmp_path / 'skeleton.json')

    result = runner.invoke(cli, ['import', _fixture(fixtures_dir, 'reference', 'linear.json'), '--out', out_path])

    assert result.exit_code == 0
    assert 'Imported 3 roles, 2 edges' in result.output
    assert sorted(n['id'] for n in read_json(out_path)['nodes']) == ['annotate', 'cluster', 'qc']


def test_import_rejects_a_loop(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['import', _fixture(fixtures_dir, 'reference', 'loop.json'),
                                 '--out', str(tmp_path / 'skeleton.json')])

    assert result.exit_code == 1
    assert 'CyclicReference' in result.output


def test_import_rejects_an_empty_reference(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['import', _fixture(fixtures_dir, 'reference', 'empty.json'),
                                 '--out', str(tmp_path / 'skeleton.json')])

    assert result.exit_code == 1
    assert 'EmptyGraph' in result.output


def test_wrap_passes_on_the_first_build(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['wrap', _fixture(fixtures_dir, 'repos', 'tissueagent.json'),
                                 '--out-dir', str(tmp_path)])

    assert result.exit_code == 0, result.output
    assert 'built in 1 rounds (revision 0)' in result.output
    assert 'Smoke test: 2 passed, 0 failed' in result.output


def test_wrap_converges(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['wrap', _fixture(fixtures_dir, 'repos', 'tissueagent.json'),
                                 '--script', _fixture(fixtures_dir, 'backends', 'fail_once.json'),
                                 '--out-dir', str(tmp_path)])

    assert result.exit_code == 0, result.output
    assert "Sandbox for repos/tissueagent built in 2 rounds (revision 1)" in result.output
    assert read_json(os.path.join(str(tmp_path), 'sandbox_spec.json'))['dependency_list'][-1] == 'scanpy'


def test_wrap_exhaustion_keeps_the_report(runner, fixtures_dir, tmp_path):
    result = runner.invoke(cli, ['wrap', _fixture(fixtures_dir, 'repos', 'tissueagent.json'),
                                 '--script', _fixture(fixtures_dir, 'backends', 'always_fail.json'),
                                 '--max-rounds', '3', '--out-dir', str(tmp_path)])

    assert result.exit_code == 2
    report = read_json(os.path.join(str(tmp_path), 'build_report.json'))
    assert report['final_outcome'] == 'failure'
    assert len(report['rounds']) == 3


def test_library_add_and_list(runner, tmp_path):
    library_dir = str(tmp_path / 'lib')
    entry_path = tmp_path / 'entry.json'
    entry_path.write_text(json.dumps({'id': 'leiden', 'kind': 'tool', 'description': 'cluster cells with leiden',
                                      'input_schema': 'rna_counts', 'output_schema': 'marker_table'}))

    result = runner.invoke(cli, ['library', 'add', library_dir, str(entry_path)])
    assert result.exit_code == 0, result.output
    assert "Registered tool 'leiden' (1 entries)" in result.output

    result = runner.invoke(cli, ['library', 'add', library_dir, str(entry_path)])
    assert result.exit_code == 1
    assert 'DuplicateId' in result.output

    result = runner.invoke(cli, ['library', 'list', library_dir])
    assert result.exit_code == 0
    assert 'leiden' in result.output
    assert '1 entries' in result.output


def test_library_list_by_kind(runner, fixtures_dir):
    result = runner.invoke(cli, ['library', 'list', _fixture(fixtures_dir, 'library'), '--kind', 'external_agent'])

    assert result.exit_code == 0
    assert 'geneagent' in result.output
    assert 'seurat_markers' not in result.output
    assert '2 entries' in result.output


def test_metrics_writes_table_and_summary(runner, fixtures_dir, tmp_path):
    out_path = str(tmp_path / 'metrics.json')

    result = runner.invoke(cli, ['metrics', _fixture(fixtures_dir, 'markers', 'dominant.json'), '--out', out_path])

    assert result.exit_code == 0, result.output
    assert 'precision_dominant_groups: 2' in result.output
    data = read_json(out_path)
    assert len(data['groups']) == 2
    assert data['summary']['recall_dominant_groups'] == 2


def test_metrics_needs_two_modalities(runner, fixtures_dir):
    result = runner.invoke(cli, ['metrics', _fixture(fixtures_dir, 'markers', 'dominant.json'),
                                 '--modalities', 'rna'])

    assert result.exit_code == 1
