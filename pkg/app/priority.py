"""
Charging queue metric: four fitted priority distributions (residual energy,
MCV distance, node degree, sink betweenness) averaged into one score per
pending node and MCV.
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

import numpy as np

from .config import (BETWEENNESS_PARAMS, DEGREE_PARAMS, DISTANCE_PARAMS, RESIDUAL_PARAMS,
                     DistributionParams)
from .network import Mcv, Network, euclidean_distance, ENERGY_EPS


@dataclass(frozen=True)
class QueueEntry:
    node_id: int
    residual_priority: float
    distance_priority: float
    degree_priority: float
    betweenness_priority: float
    metric: float


def residual_priority(residual_below_threshold: float, e_th: float,
                      params: DistributionParams = RESIDUAL_PARAMS) -> float:
    """Higher for emptier batteries; the input is the residual of a node at or below E_th."""
    if e_th <= 0:
        raise ValueError(f"E_th must be positive, got {e_th}")
    if residual_below_threshold < 0:
        raise ValueError(f"Residual energy cannot be negative, got {residual_below_threshold}")
    if residual_below_threshold > e_th + ENERGY_EPS:
        raise ValueError(f"Residual {residual_below_threshold} J is above the request threshold {e_th} J")

    normalized = min(residual_below_threshold / e_th, 1.0)
    return params.alpha + params.beta * math.exp(params.gamma * normalized ** params.lambda_weight)


def distance_priority(dist: float, comm_range: float, params: DistributionParams = DISTANCE_PARAMS) -> float:
    """Higher for nodes closer to the MCV; R_c softens the normalisation."""
    if dist < 0:
        raise ValueError(f"Distance cannot be negative, got {dist}")
    if comm_range <= 0:
        raise ValueError(f"Communication range must be positive, got {comm_range}")

    normalized = 1.0 if math.isinf(dist) else dist / (dist + comm_range)
    return params.alpha + params.beta * math.exp((normalized ** params.lambda_weight - params.gamma) / params.mu)


def degree_value(normalized: float, params: DistributionParams = DEGREE_PARAMS) -> float:
    """Raw fitted degree curve; slightly negative near zero."""
    return params.alpha + params.beta * (
        (math.exp(params.gamma * normalized ** params.lambda_weight) - params.mu) / params.gamma)


def degree_priority(degree: int, max_degree: int, params: DistributionParams = DEGREE_PARAMS) -> float:
    """Higher for better connected nodes, clamped at 0. ``max_degree == 0`` means all nodes are isolated."""
    if degree < 0:
        raise ValueError(f"Degree cannot be negative, got {degree}")
    if max_degree == 0:
        normalized = 0.0
    elif degree > max_degree:
        raise ValueError(f"Degree {degree} exceeds the maximum degree {max_degree}")
    else:
        normalized = degree / max_degree
    return max(0.0, degree_value(normalized, params))


def betweenness_priority(b: float, min_b: float, max_b: float,
                         params: DistributionParams = BETWEENNESS_PARAMS) -> float:
    """Higher for relay-critical nodes; min/max span the current candidates."""
    if not min_b <= b <= max_b:
        raise ValueError(f"Betweenness {b} outside [{min_b}, {max_b}]")

    spread = max_b - min_b
    normalized = (b - min_b) / spread if spread > 0 else 0.0
    return params.alpha + math.exp(-math.exp(-params.beta * (normalized ** params.lambda_weight - params.gamma)))


def queue_metric(residual: float, distance: float, degree: float, betweenness: float) -> float:
    return (residual + distance + degree + betweenness) / 4


def build_queue(mcv: Mcv, pending_requests: Iterable[int], net: Network,
                params: Optional[Dict[str, DistributionParams]] = None) -> List[QueueEntry]:
    """
    Score every pending node for this MCV and sort by metric descending, ties
    by ascending node id. Only the distance term depends on the MCV.
    """
    params = params or {}
    pending = sorted(set(pending_requests))
    if not pending:
        return []

    nodes = [net.node(node_id) for node_id in pending]
    for node in nodes:
        if not node.below_threshold:
            raise ValueError(f"Node {node.id} is above its request threshold and cannot be queued")

    between = [net.betweenness_cache.get(node.id, 0.0) for node in nodes]
    min_b, max_b = min(between), max(between)
    max_degree = net.max_degree

    entries = []
    for node, b in zip(nodes, between):
        phi = residual_priority(node.residual, node.request_threshold, params.get('residual', RESIDUAL_PARAMS))
        zeta = distance_priority(euclidean_distance(mcv.position, node.position), net.comm_range,
                                 params.get('distance', DISTANCE_PARAMS))
        eta = degree_priority(net.degree_cache.get(node.id, 0), max_degree, params.get('degree', DEGREE_PARAMS))
        beta = betweenness_priority(b, min_b, max_b, params.get('betweenness', BETWEENNESS_PARAMS))
        entries.append(QueueEntry(node.id, phi, zeta, eta, beta, queue_metric(phi, zeta, eta, beta)))

    return sort_queue(entries)


def sort_queue(entries: Iterable[QueueEntry]) -> List[QueueEntry]:
    return sorted(entries, key=lambda entry: (-entry.metric, entry.node_id))


def queue_matrix(queue: List[QueueEntry]) -> np.ndarray:
    """Rows of (residual, distance, degree, betweenness) priorities in queue order."""
    return np.array([[e.residual_priority, e.distance_priority, e.degree_priority, e.betweenness_priority]
                     for e in queue], dtype=float).reshape(len(queue), 4)


def format_queue(queue: List[QueueEntry]) -> str:
    """Debug dump, one ``node_id phi zeta eta beta metric`` line per entry."""
    return '\n'.join(
        f"{e.node_id} {e.residual_priority:.6f} {e.distance_priority:.6f} {e.degree_priority:.6f} "
        f"{e.betweenness_priority:.6f} {e.metric:.6f}"
        for e in queue
    )
