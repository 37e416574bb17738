"""
Charging factor strategy: turns a sorted MCV queue into partial-charging
targets.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

from .network import SensorNode
from .priority import QueueEntry

# Share of a node's residual priority used as its charging control factor
CONTROL_FACTOR_RATIO = 0.10

# Absorbs float noise before ceiling (0.9 * (2/3 - 0.1) * 100 must give 51)
CEIL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ChargePlanItem:
    node_id: int
    charging_factor_pct: int
    target_energy: float
    estimated_duration: float

    @property
    def is_noop(self) -> bool:
        return self.estimated_duration <= 0


def weighted_factor(queue: Sequence[QueueEntry]) -> float:
    """Spread between the most and least critical residual priorities, relative to the most critical."""
    if not queue:
        raise ValueError("Weighted factor needs a non-empty queue")
    if len(queue) == 1:
        return queue[0].residual_priority

    priorities = [entry.residual_priority for entry in queue]
    c_max, c_min = max(priorities), min(priorities)
    if c_max == 0:
        return 0.0
    return (c_max - c_min) / c_max


def charging_factor(residual_priority: float, p_wf: float) -> int:
    """Target battery percentage: ceil((sqrt(phi^2 * P_wf) - 0.1 * phi) * 100), clamped to [0, 100]."""
    if residual_priority < 0:
        raise ValueError(f"Residual priority cannot be negative, got {residual_priority}")
    if not 0 <= p_wf <= 1:
        raise ValueError(f"Weighted factor must lie in [0, 1], got {p_wf}")

    control = CONTROL_FACTOR_RATIO * residual_priority
    raw = (math.sqrt(residual_priority ** 2 * p_wf) - control) * 100
    percent = math.ceil(round(raw, 9) - CEIL_TOLERANCE) if raw > 0 else math.ceil(raw)
    return int(min(100, max(0, percent)))


def plan_item(node: SensorNode, percent: int, charge_rate: float) -> ChargePlanItem:
    target = min(node.capacity, max(node.residual, percent / 100 * node.capacity))
    duration = max(0.0, (target - node.residual) / charge_rate)
    return ChargePlanItem(node.id, percent, target, duration)


def make_plan(queue: Sequence[QueueEntry], nodes: Dict[int, SensorNode],
              charge_rate: float = 0.05) -> List[ChargePlanItem]:
    """One plan item per queue entry, in queue order."""
    if charge_rate <= 0:
        raise ValueError(f"Charge rate must be positive, got {charge_rate}")
    if not queue:
        return []

    # A singleton queue carries its own residual priority, which can top 1
    p_wf = min(1.0, weighted_factor(queue))
    plan = []
    for entry in queue:
        if entry.node_id not in nodes:
            raise KeyError(f"Node {entry.node_id} is not in the node state table")
        percent = charging_factor(entry.residual_priority, p_wf)
        plan.append(plan_item(nodes[entry.node_id], percent, charge_rate))
    return plan


def full_charge_plan(queue: Sequence[QueueEntry], nodes: Dict[int, SensorNode],
                     charge_rate: float = 0.05) -> List[ChargePlanItem]:
    """Baseline plan: every node back to full capacity."""
    if charge_rate <= 0:
        raise ValueError(f"Charge rate must be positive, got {charge_rate}")
    plan = []
    for entry in queue:
        if entry.node_id not in nodes:
            raise KeyError(f"Node {entry.node_id} is not in the node state table")
        plan.append(plan_item(nodes[entry.node_id], 100, charge_rate))
    return plan
