from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set

from errors import WorkflowError
from graph.model import GraphPatch, WorkflowGraph
from graph.patching import apply_patch
from graph.validation import stage_index
from library import Library
from runtime.engine import WorkflowEngine
from runtime.evidence import EvidenceSummary, aggregate_signals
from runtime.executors import ExecutorRegistry
from runtime.ledger import CostLedger
from runtime.trace import ExecutionTrace
from utils.logger import setup_logger
from .detector import decide, detect
from .policies import RepairActionKind, RepairPolicy, Thresholds, default_policies
from .repair import repair

STOP_REASONS = ('validation_succeeded', 'budget_exhausted', 'max_rounds_reached', 'no_matching_policy')


@dataclass
class RepairOutcome:
    rounds_used: int
    patches: List[GraphPatch]
    final_trace: ExecutionTrace
    stop_reason: str
    # the patched per-instance copy; discarded by callers after the run
    instance_graph: Optional[WorkflowGraph] = None
    flagged: Dict[str, FrozenSet[str]] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.stop_reason == 'validation_succeeded' and self.final_trace.outcome == 'success'


class ReviewLoop:
    """Execute, detect, decide and repair until the run validates or a stop condition holds.

    Patches land on a per-instance copy; the graph handed in is never changed.
    """

    def __init__(self, registry: ExecutorRegistry, policies: Optional[Sequence[RepairPolicy]] = None,
                 thresholds: Optional[Thresholds] = None, library: Optional[Library] = None,
                 max_workers: Optional[int] = None):
        self.thresholds = thresholds or Thresholds.from_config()
        self.policies = list(policies) if policies is not None else default_policies(self.thresholds)
        self.library = library
        self.engine = WorkflowEngine(registry, max_workers=max_workers, warn_ratio=self.thresholds.budget_warn_ratio)
        self.logger = setup_logger('ReviewLoop')

    def run(self, graph: WorkflowGraph, spec, run_dir: Optional[str] = None,
            max_rounds: Optional[int] = None) -> RepairOutcome:
        max_rounds = spec.constraints.max_repair_rounds if max_rounds is None else max_rounds
        ledger = CostLedger()
        instance = graph
        patches: List[GraphPatch] = []
        streaks: Dict[str, int] = {}

        trace = self.engine.execute(instance, spec, ledger=ledger, run_dir=run_dir)
        executed = set(instance.node_ids())

        while True:
            if trace.outcome == 'budget_exhausted':
                return self._stop('budget_exhausted', patches, trace, instance)

            summaries = aggregate_signals(trace)
            self._update_streaks(summaries, streaks, executed)
            flagged = detect(summaries, self.thresholds)
            for node_id in self._covered(instance, trace, flagged):
                del flagged[node_id]

            if not flagged:
                return self._stop('validation_succeeded', patches, trace, instance)
            if len(patches) >= max_rounds:
                return self._stop('max_rounds_reached', patches, trace, instance, flagged)

            order = stage_index(instance)
            target = min(flagged, key=lambda n: (order.get(n, len(order)), n))
            action = decide(target, summaries, self.policies)
            if action == RepairActionKind.ESCALATE_NO_ACTION:
                return self._stop('no_matching_policy', patches, trace, instance, flagged)

            round_no = len(patches) + 1
            try:
                patch = repair(instance, target, action, trace=trace, library=self.library, round_no=round_no)
                instance = apply_patch(instance, patch)
            except WorkflowError as e:
                self.logger.warning(f"Repair of '{target}' failed: {e}")
                return self._stop('no_matching_policy', patches, trace, instance, flagged)
            patches.append(patch)

            rerun = self._rerun_set(instance, patch, trace)
            reuse = set(instance.node_ids()) - rerun
            self.logger.info(f"Round {round_no}: re-executing {len(rerun)} nodes, reusing {len(reuse)}")
            trace = self.engine.execute(instance, spec, prior=trace, reuse=reuse, ledger=ledger, run_dir=run_dir)
            executed = rerun

    def _update_streaks(self, summaries: Dict[str, EvidenceSummary], streaks: Dict[str, int], executed: Set[str]) -> None:
        """Consecutive rounds over the fail-ratio threshold, counted on executed nodes only"""
        for node_id in executed:
            summary = summaries.get(node_id)
            if summary is None:
                continue
            failing = summary.fail_ratio > self.thresholds.max_test_fail_ratio
            streaks[node_id] = streaks.get(node_id, 0) + 1 if failing else 0
        for node_id, summary in summaries.items():
            summary.test_fail_streak = streaks.get(node_id, 0)

    def _covered(self, graph: WorkflowGraph, trace: ExecutionTrace, flagged: Dict[str, FrozenSet[str]]) -> List[str]:
        """Flagged nodes whose solver group has a clean, successful member"""
        covered = []
        for node_id in flagged:
            if node_id not in graph:
                continue
            group = graph.node(node_id).alternate_of or node_id
            for other in graph.nodes:
                if other.id == node_id or (other.alternate_of or other.id) != group:
                    continue
                if trace.succeeded(other.id) and other.id not in flagged:
                    covered.append(node_id)
                    break
        return covered

    @staticmethod
    def _rerun_set(graph: WorkflowGraph, patch: GraphPatch, trace: ExecutionTrace) -> Set[str]:
        rerun: Set[str] = set()
        for node_id in patch.target_nodes:
            if node_id in graph:
                rerun.add(node_id)
                rerun.update(graph.descendants(node_id))
        rerun |= {n for n in graph.node_ids() if not trace.succeeded(n)}
        return rerun

    def _stop(self, reason: str, patches: List[GraphPatch], trace: ExecutionTrace, instance: WorkflowGraph,
              flagged: Optional[Dict[str, FrozenSet[str]]] = None) -> RepairOutcome:
        self.logger.info(f"Review stopped after {len(patches)} rounds: {reason}")
        return RepairOutcome(rounds_used=len(patches), patches=patches, final_trace=trace, stop_reason=reason,
                             instance_graph=instance, flagged=dict(flagged or {}))


def review_loop(graph: WorkflowGraph, spec, registry: ExecutorRegistry,
                policies: Optional[Sequence[RepairPolicy]] = None, thresholds: Optional[Thresholds] = None,
                library: Optional[Library] = None, run_dir: Optional[str] = None,
                max_rounds: Optional[int] = None) -> RepairOutcome:
    return ReviewLoop(registry, policies=policies, thresholds=thresholds, library=library).run(
        graph, spec, run_dir=run_dir, max_rounds=max_rounds)
