#!/usr/bin/env python3
"""
WorkflowForge CLI - Main command-line interface
"""

import click
import sys
import os
import json
from dataclasses import replace
from typing import Optional

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import config
from errors import BuildExhausted, InvalidBudget, InvalidConstraints, MalformedDocument, WorkflowError
from graph import SchemaRegistry, load_graph, load_reference_graph, save_graph, validate_graph
from library import Library, LibraryEntry
from reviewer import load_policies, load_thresholds, review_loop
from runtime import ExecutorRegistry, macro_marker_metrics, save_trace
from sandbox import DockerBackend, RepositorySetup, ScriptedBackend, load_repository_profile, synthesize_sandbox
from spec_model import load_task_spec, validate_constraints
from synthesis import WorkflowSynthesizer
from parsing import TextCleaner
from utils.file_utils import read_json, write_canonical
from utils.logger import set_log_level, setup_logger
from .report import RunReport, render_stages

# Exit codes
EXIT_ERROR = 1
EXIT_FAILURE = 2
EXIT_BUDGET = 3

logger = setup_logger('WorkflowForgeCLI')


def fail(error: Exception) -> None:
    """Report an error on stderr and exit 1"""
    if isinstance(error, WorkflowError):
        click.echo(f"Error: {error}", err=True)
    else:
        click.echo(f"Error: unreadable input: {error}", err=True)
    sys.exit(EXIT_ERROR)


def load_library(directory: Optional[str]) -> Library:
    if not directory:
        return Library()
    return Library.load(directory)


def load_schemas(directory: Optional[str]) -> SchemaRegistry:
    if not directory:
        return SchemaRegistry()
    return SchemaRegistry.load(os.path.join(directory, 'schemas.json'))


def sandbox_backends(backend: str, script: Optional[str]):
    """Backend factory keyed by repository locator; scripted runs share one backend"""
    if backend == 'docker':
        slugs = TextCleaner()
        return lambda locator: DockerBackend(slugs.slugify(locator, max_words=4))
    shared = ScriptedBackend.load(script)
    return lambda locator: shared


def apply_overrides(spec, budget: Optional[int], max_repair_rounds: Optional[int]):
    """Replace constraint fields from command-line flags and revalidate them"""
    changes = {}
    if budget is not None:
        changes['budget'] = budget
    if max_repair_rounds is not None:
        changes['max_repair_rounds'] = max_repair_rounds
    if not changes:
        return spec

    constraints = replace(spec.constraints, **changes)
    first = validate_constraints(constraints).first()
    if first is not None:
        if first.code == 'InvalidBudget':
            raise InvalidBudget(first.message)
        raise InvalidConstraints(first.message, field=first.field)
    return replace(spec, constraints=constraints)


# CLI Context
@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
@click.option('--config-file', '-c', help='Path to configuration file')
@click.pass_context
def cli(ctx, verbose, config_file):
    """WorkflowForge - Synthesize, run and repair multi-agent workflows"""

    # Initialize context
    ctx.ensure_object(dict)

    # Load additional config file if specified
    if config_file and os.path.exists(config_file):
        try:
            with open(config_file, 'r') as f:
                config.merge(json.load(f))
            logger.info(f"Loaded configuration from {config_file}")
        except Exception as e:
            click.echo(f"Error loading config file: {e}", err=True)

    # Update log level if verbose
    if verbose:
        config.config['output']['log_level'] = 'DEBUG'
    set_log_level(config.get('output.log_level', 'WARNING'))


@cli.command()
@click.argument('spec_path')
@click.option('--library', '-l', 'library_dir', help='Library directory (index.json, entries/, schemas.json)')
@click.option('--out', '-o', 'out_path', required=True, help='Output graph file')
@click.option('--top-k', type=int, help='Retrieval depth per query')
def synthesize(spec_path, library_dir, out_path, top_k):
    """Synthesize a workflow graph from a task specification"""
    try:
        spec = load_task_spec(spec_path)
        library = load_library(library_dir)
        schemas = load_schemas(library_dir)
        synthesizer = WorkflowSynthesizer(library, schemas, base_dir=os.path.dirname(os.path.abspath(spec_path)),
                                          top_k=top_k)
        graph = synthesizer.synthesize(spec)
        save_graph(graph, out_path)
    except (WorkflowError, OSError) as e:
        fail(e)

    click.echo(f"Synthesized {len(graph.nodes)} nodes, {len(graph.edges)} edges")
    click.echo(f"Stages: {render_stages(graph)}")
    click.echo(f"Graph saved to {out_path}")


@cli.command()
@click.argument('graph_path')
@click.argument('spec_path')
@click.option('--scripts', '-s', help='Scripted executor steps (JSON)')
@click.option('--budget', type=int, help='Override the task budget')
@click.option('--max-repair-rounds', type=int, help='Override the task repair bound')
@click.option('--policies', help='Repair policy file (JSON list)')
@click.option('--thresholds', help='Evidence thresholds file (JSON)')
@click.option('--library', '-l', 'library_dir', help='Library directory for tool swaps and repository agents')
@click.option('--executor', type=click.Choice(['scripted', 'remote']), default='scripted',
              help='Executor backend')
@click.option('--backend', type=click.Choice(['scripted', 'docker']), default='scripted',
              help='Sandbox build backend for repository resources')
@click.option('--backend-script', help='Scripted backend outcomes (JSON with builds and runs)')
@click.option('--repo-dir', help='Directory repository locators resolve against (default: next to the task file)')
@click.option('--out-dir', '-o', default='run_output', help='Directory for trace, graphs and report')
def run(graph_path, spec_path, scripts, budget, max_repair_rounds, policies, thresholds, library_dir,
        executor, backend, backend_script, repo_dir, out_dir):
    """Execute a graph under the review loop"""
    try:
        spec = apply_overrides(load_task_spec(spec_path), budget, max_repair_rounds)
        graph = load_graph(graph_path)
        report = validate_graph(graph)
        if not report.ok:
            for line in report.lines():
                click.echo(line, err=True)
            sys.exit(EXIT_ERROR)

        limits = load_thresholds(thresholds)
        policy_list = load_policies(policies, limits)
        library = load_library(library_dir)

        if executor == 'remote':
            if not config.has_remote_executor():
                raise MalformedDocument("remote executor requested but WORKFLOW_EXECUTOR_URL is not set")
            registry = ExecutorRegistry.remote()
        else:
            registry = ExecutorRegistry.load_script(scripts)

        setup = RepositorySetup(spec, sandbox_backends(backend, backend_script), library=library,
                                base_dir=repo_dir or os.path.dirname(os.path.abspath(spec_path)))
        setup.install(registry, graph)

        outcome = review_loop(graph, spec, registry, policies=policy_list, thresholds=limits,
                              library=library, run_dir=out_dir)

        paths = {
            'graph': os.path.join(out_dir, 'graph.json'),
            'instance_graph': os.path.join(out_dir, 'instance_graph.json'),
            'trace': os.path.join(out_dir, 'trace.json'),
            'patches': os.path.join(out_dir, 'patches.json'),
        }
        save_graph(graph, paths['graph'])
        save_graph(outcome.instance_graph or graph, paths['instance_graph'])
        save_trace(outcome.final_trace, paths['trace'])
        write_canonical([p.to_dict() for p in outcome.patches], paths['patches'])

        task_id = os.path.splitext(os.path.basename(spec_path))[0]
        run_report = RunReport.from_outcome(task_id, outcome, paths)
        run_report.save(out_dir)
    except (WorkflowError, OSError) as e:
        fail(e)

    click.echo(run_report.render(), nl=False)

    if outcome.stop_reason == 'budget_exhausted':
        sys.exit(EXIT_BUDGET)
    if not outcome.succeeded:
        sys.exit(EXIT_FAILURE)


@cli.command()
@click.argument('graph_path')
def validate(graph_path):
    """Validate a graph file and print every violation"""
    try:
        graph = load_graph(graph_path)
    except (WorkflowError, OSError) as e:
        fail(e)

    report = validate_graph(graph)
    if report.ok:
        click.echo(f"Graph is valid: {len(graph.nodes)} nodes, {len(graph.edges)} edges")
        return

    for line in report.lines():
        click.echo(line)
    sys.exit(EXIT_ERROR)


@cli.command(name='import')
@click.argument('reference_path')
@click.option('--out', '-o', 'out_path', required=True, help='Output skeleton file')
def import_reference(reference_path, out_path):
    """Import a reference graph as a workflow skeleton"""
    try:
        skeleton = load_reference_graph(reference_path)
        save_graph(skeleton, out_path)
    except (WorkflowError, OSError) as e:
        fail(e)

    click.echo(f"Imported {len(skeleton.nodes)} roles, {len(skeleton.edges)} edges")
    click.echo(f"Skeleton saved to {out_path}")


@cli.command()
@click.argument('metadata_path')
@click.option('--backend', type=click.Choice(['scripted', 'docker']), default='scripted',
              help='Build backend')
@click.option('--script', help='Scripted backend outcomes (JSON with builds and runs)')
@click.option('--max-rounds', type=int, help='Maximum build attempts')
@click.option('--tag', help='Image tag for the docker backend')
@click.option('--out-dir', '-o', default='sandbox_output', help='Directory for the sandbox spec and build report')
def wrap(metadata_path, backend, script, max_rounds, tag, out_dir):
    """Build a sandbox for a repository from its metadata"""
    try:
        profile = load_repository_profile(metadata_path)
        if backend == 'docker':
            build_backend = DockerBackend(tag or TextCleaner().slugify(profile.locator, max_words=4))
        else:
            build_backend = ScriptedBackend.load(script)
    except (WorkflowError, OSError) as e:
        fail(e)

    spec_path = os.path.join(out_dir, 'sandbox_spec.json')
    report_path = os.path.join(out_dir, 'build_report.json')
    try:
        spec, report = synthesize_sandbox(profile, build_backend, max_rounds=max_rounds)
    except BuildExhausted as e:
        write_canonical(e.spec.to_dict(), spec_path)
        write_canonical(e.report.to_dict(), report_path)
        click.echo(f"Error: {e}", err=True)
        click.echo(f"Build report saved to {report_path}", err=True)
        sys.exit(EXIT_FAILURE)
    except WorkflowError as e:
        fail(e)

    write_canonical(spec.to_dict(), spec_path)
    write_canonical(report.to_dict(), report_path)
    click.echo(f"Sandbox for {profile.locator} built in {len(report.rounds)} rounds (revision {spec.revision})")
    if report.smoke is not None:
        click.echo(f"Smoke test: {report.smoke['pass']} passed, {report.smoke['fail']} failed")
    click.echo(f"Sandbox spec saved to {spec_path}")


@cli.group(name='library')
def library_group():
    """Manage the artifact library"""


@library_group.command(name='add')
@click.argument('library_dir')
@click.argument('entry_path')
def library_add(library_dir, entry_path):
    """Register an entry file into a library directory"""
    try:
        exists = os.path.exists(os.path.join(library_dir, 'index.json'))
        library = Library.load(library_dir) if exists else Library()
        entry = LibraryEntry.from_dict(read_json(entry_path, 'library entry'))
        library.register_entry(entry)
        library.save(library_dir)
    except (WorkflowError, OSError) as e:
        fail(e)

    click.echo(f"Registered {entry.kind} '{entry.id}' ({len(library)} entries)")


@library_group.command(name='list')
@click.argument('library_dir')
@click.option('--kind', '-k', help='Only list entries of this kind')
def library_list(library_dir, kind):
    """List library entries"""
    try:
        library = Library.load(library_dir)
    except (WorkflowError, OSError) as e:
        fail(e)

    entries = library.entries_of_kind(kind) if kind else list(library.snapshot())
    click.echo(f"{'ID':<32} {'Kind':<16} {'Input':<16} {'Output':<16}")
    click.echo("-" * 80)
    for entry in entries:
        click.echo(f"{entry.id:<32} {entry.kind:<16} {entry.input_schema or '-':<16} {entry.output_schema or '-':<16}")
    click.echo(f"\n{len(entries)} entries")


@cli.command()
@click.argument('markers_path')
@click.option('--modalities', default='rna,atac', help='Two comma-separated modality names')
@click.option('--out', '-o', 'out_path', help='Write the table and summary as JSON')
def metrics(markers_path, modalities, out_path):
    """Score combined-modality marker sets against reference markers"""
    names = tuple(m.strip() for m in modalities.split(',') if m.strip())
    if len(names) != 2:
        click.echo("Error: --modalities needs exactly two names", err=True)
        sys.exit(EXIT_ERROR)

    try:
        data = read_json(markers_path, 'marker sets')
        if not isinstance(data, dict) or not isinstance(data.get('groups'), dict) \
                or not isinstance(data.get('reference'), dict):
            raise MalformedDocument("marker file needs 'groups' and 'reference' objects")
        evaluation = macro_marker_metrics(data['groups'], data['reference'], modalities=names)
        if out_path:
            write_canonical(evaluation.to_dict(), out_path)
    except (WorkflowError, OSError) as e:
        fail(e)

    if evaluation.table.empty:
        click.echo("No groups with reference markers")
        return
    click.echo(evaluation.table.to_string(index=False, float_format=lambda v: f"{v:.3f}"))
    click.echo("")
    for key in sorted(evaluation.summary):
        value = evaluation.summary[key]
        click.echo(f"{key}: {value:.3f}" if isinstance(value, float) else f"{key}: {value}")


def main():
    """Main entry point"""
    try:
        cli()
    except Exception as e:
        click.echo(f"Fatal error: {e}", err=True)
        sys.exit(1)

if __name__ == '__main__':
    main()
