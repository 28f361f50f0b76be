"""Run reports and console rendering for CLI commands"""

import os
from dataclasses import dataclass, field
from typing import Any, Dict, List

from graph.model import WorkflowGraph
from graph.validation import stage_labels
from reviewer.loop import RepairOutcome
from utils.file_utils import write_canonical, write_text


@dataclass
class RunReport:
    task_id: str
    outcome: str
    stop_reason: str
    rounds_used: int
    total_cost: int
    stage_timings: List[float] = field(default_factory=list)
    paths: Dict[str, str] = field(default_factory=dict)
    flagged: Dict[str, List[str]] = field(default_factory=dict)

    @classmethod
    def from_outcome(cls, task_id: str, outcome: RepairOutcome, paths: Dict[str, str]) -> 'RunReport':
        trace = outcome.final_trace
        return cls(
            task_id=task_id,
            outcome=trace.outcome,
            stop_reason=outcome.stop_reason,
            rounds_used=outcome.rounds_used,
            total_cost=trace.ledger.total,
            stage_timings=[round(t, 6) for t in trace.stage_timings],
            paths=dict(paths),
            flagged={node: sorted(kinds) for node, kinds in outcome.flagged.items()},
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'task_id': self.task_id,
            'outcome': self.outcome,
            'stop_reason': self.stop_reason,
            'rounds_used': self.rounds_used,
            'total_cost': self.total_cost,
            'stage_timings': self.stage_timings,
            'paths': self.paths,
            'flagged': self.flagged,
        }

    def render(self) -> str:
        lines = [
            f"Task: {self.task_id}",
            "=" * 50,
            f"Outcome:      {self.outcome}",
            f"Stop reason:  {self.stop_reason}",
            f"Repair rounds: {self.rounds_used}",
            f"Total cost:   {self.total_cost}",
        ]
        if self.stage_timings:
            lines.append("Stage timings (s): " + ', '.join(f"{t:.3f}" for t in self.stage_timings))
        for node, kinds in sorted(self.flagged.items()):
            lines.append(f"  flagged {node}: {', '.join(kinds)}")
        lines.append("Files:")
        for name in sorted(self.paths):
            lines.append(f"  {name}: {self.paths[name]}")
        return '\n'.join(lines) + '\n'

    def save(self, out_dir: str) -> Dict[str, str]:
        """Write report.txt and report.json; every path listed must already exist"""
        missing = [p for p in self.paths.values() if not os.path.exists(p)]
        if missing:
            raise FileNotFoundError(f"report references missing files: {', '.join(missing)}")
        text_path = write_text(self.render(), os.path.join(out_dir, 'report.txt'))
        json_path = write_canonical(self.to_dict(), os.path.join(out_dir, 'report.json'))
        return {'report_text': text_path, 'report_json': json_path}


def render_stages(graph: WorkflowGraph) -> str:
    return ' -> '.join('+'.join(labels) for labels in stage_labels(graph))
