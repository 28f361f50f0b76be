from typing import Dict, FrozenSet, Mapping, Optional, Sequence

from runtime.evidence import EvidenceSummary
from utils.logger import setup_logger
from .policies import RepairActionKind, RepairPolicy, Thresholds, sort_policies

logger = setup_logger('Detector')


def flag_kinds(summary: EvidenceSummary, thresholds: Thresholds) -> FrozenSet[str]:
    kinds = set()
    if summary.confidence is not None and summary.confidence < thresholds.min_output_confidence:
        kinds.add('output')
    if summary.fail_ratio > thresholds.max_test_fail_ratio:
        kinds.add('test')
    if summary.tool_errors > thresholds.max_tool_errors:
        kinds.add('tool')
    if summary.interface_violations > 0:
        kinds.add('interface')
    if summary.budget_ratio > 1:
        kinds.add('budget')
    return frozenset(kinds)


def detect(summaries: Mapping[str, EvidenceSummary], thresholds: Thresholds) -> Dict[str, FrozenSet[str]]:
    """Flagged node ids with the signal kinds that tripped a threshold"""
    flagged = {}
    for node_id in sorted(summaries):
        kinds = flag_kinds(summaries[node_id], thresholds)
        if kinds:
            flagged[node_id] = kinds
    if flagged:
        logger.info(f"Flagged {len(flagged)} nodes: {', '.join(flagged)}")
    return flagged


def match_policy(node_id: str, summaries: Mapping[str, EvidenceSummary],
                 policies: Sequence[RepairPolicy]) -> Optional[RepairPolicy]:
    summary = summaries.get(node_id) or EvidenceSummary(node=node_id)
    for policy in sort_policies(policies):
        if policy.matches(summary):
            return policy
    return None


def decide(node_id: str, summaries: Mapping[str, EvidenceSummary],
           policies: Sequence[RepairPolicy]) -> RepairActionKind:
    """First policy by (priority, id) whose pattern matches; otherwise escalate"""
    policy = match_policy(node_id, summaries, policies)
    if policy is None:
        logger.info(f"No policy matches '{node_id}'")
        return RepairActionKind.ESCALATE_NO_ACTION
    logger.info(f"Policy '{policy.id}' chose {policy.action.value} for '{node_id}'")
    return policy.action
