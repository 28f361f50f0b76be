"""Evidence-guided review: detect failing nodes, pick a repair, patch a per-instance copy"""

from .detector import decide, detect, flag_kinds, match_policy
from .loop import STOP_REASONS, RepairOutcome, ReviewLoop, review_loop
from .policies import (RepairActionKind, RepairPolicy, Thresholds, default_policies, load_policies,
                       load_thresholds, parse_policies, policies_from_list, save_policies,
                       serialize_policies, sort_policies)
from .repair import failure_digest, repair

__all__ = [
    'decide', 'detect', 'flag_kinds', 'match_policy', 'STOP_REASONS', 'RepairOutcome', 'ReviewLoop',
    'review_loop', 'RepairActionKind', 'RepairPolicy', 'Thresholds', 'default_policies',
    'load_policies', 'load_thresholds', 'parse_policies', 'policies_from_list', 'save_policies',
    'serialize_policies', 'sort_policies', 'failure_digest', 'repair',
]
