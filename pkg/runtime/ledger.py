import threading
from typing import Any, Dict

from errors import MalformedDocument, NegativeCost


class CostLedger:
    """Per-node cost units; total is always the exact sum of per_node"""

    def __init__(self, per_node: Dict[str, int] = None):
        self._lock = threading.Lock()
        self.per_node: Dict[str, int] = {}
        self.total = 0
        for node, amount in sorted((per_node or {}).items()):
            self.record(node, amount)

    def record(self, node: str, amount: int) -> 'CostLedger':
        if isinstance(amount, bool) or not isinstance(amount, int):
            raise MalformedDocument(f"cost for '{node}' must be an integer number of units")
        if amount < 0:
            raise NegativeCost(f"negative cost {amount} reported for '{node}'")

        with self._lock:
            self.per_node[node] = self.per_node.get(node, 0) + amount
            self.total += amount
        return self

    def spent_by(self, node: str) -> int:
        return self.per_node.get(node, 0)

    def ratio(self, budget: int) -> float:
        return self.total / budget if budget else 0.0

    def copy(self) -> 'CostLedger':
        return CostLedger(dict(self.per_node))

    def __eq__(self, other) -> bool:
        return isinstance(other, CostLedger) and self.per_node == other.per_node and self.total == other.total

    def to_dict(self) -> Dict[str, Any]:
        return {'per_node': dict(sorted(self.per_node.items())), 'total': self.total}

    @classmethod
    def from_dict(cls, data: Any) -> 'CostLedger':
        if not isinstance(data, dict) or not isinstance(data.get('per_node', {}), dict):
            raise MalformedDocument("ledger needs a per_node object")
        ledger = cls(data.get('per_node', {}))
        if 'total' in data and data['total'] != ledger.total:
            raise MalformedDocument("ledger total disagrees with its per-node costs")
        return ledger


def record_cost(ledger: CostLedger, node: str, amount: int) -> CostLedger:
    return ledger.record(node, amount)
