"""
Static WRSN topology: sensor nodes, the sink, the communication graph and the
graph quantities the sink uses to prioritise charging requests.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)

Point = Tuple[float, float]

# Vertex id of the sink in the routing graph
SINK = -1

# Slack for threshold comparisons on analytically drained energies
ENERGY_EPS = 1e-12


@dataclass
class SensorNode:
    id: int
    x: float
    y: float
    capacity: float = 0.5
    residual: float = 0.5
    consumption_rate: float = 1e-4
    request_threshold: float = 0.15
    alive: bool = True

    def __post_init__(self):
        if not 0 <= self.residual <= self.capacity:
            raise ValueError(f"Node {self.id}: residual {self.residual} outside [0, {self.capacity}]")
        if self.consumption_rate <= 0:
            raise ValueError(f"Node {self.id}: consumption rate must be positive")

    @property
    def position(self) -> Point:
        return (self.x, self.y)

    @property
    def below_threshold(self) -> bool:
        return self.residual <= self.request_threshold + ENERGY_EPS


@dataclass
class Mcv:
    """Mobile charging vehicle and its private priority queue."""
    id: int
    x: float
    y: float
    capacity: float = 10_000.0
    battery: float = 10_000.0
    speed: float = 5.0
    travel_cost_rate: float = 5.0
    charge_rate: float = 0.05
    min_working_threshold: float = 1_000.0
    queue: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.battery <= self.capacity:
            raise ValueError(f"MCV {self.id}: battery {self.battery} outside [0, {self.capacity}]")

    @property
    def position(self) -> Point:
        return (self.x, self.y)

    def move_to(self, point: Point):
        self.x, self.y = float(point[0]), float(point[1])


def euclidean_distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


class Network:
    """Node set, sink and communication graph with cached centralities."""

    def __init__(self, nodes: Iterable[SensorNode], area_side: float, comm_range: float = 50.0,
                 sensing_range: float = 25.0, seed: Optional[int] = None):
        if area_side <= 0:
            raise ValueError(f"Area side must be positive, got {area_side}")
        if comm_range <= 0:
            raise ValueError(f"Communication range must be positive, got {comm_range}")

        self.nodes: Dict[int, SensorNode] = {node.id: node for node in nodes}
        self.area_side = float(area_side)
        self.comm_range = float(comm_range)
        self.sensing_range = float(sensing_range)
        self.seed = seed
        self.sink_position: Point = (self.area_side / 2, self.area_side / 2)

        self.graph = self._build_graph()
        self.degree_cache: Dict[int, int] = {}
        self.betweenness_cache: Dict[int, float] = {}
        self.refresh_centralities()

    def _build_graph(self) -> nx.Graph:
        """Link every pair of alive nodes within the communication range."""
        alive = [node for node in self.nodes.values() if node.alive]
        pos = {node.id: node.position for node in alive}
        if not pos:
            return nx.Graph()
        # With explicit positions random_geometric_graph only derives the edges
        return nx.random_geometric_graph(sorted(pos), self.comm_range, pos=pos)

    def routing_graph(self) -> nx.Graph:
        """Communication graph plus the sink vertex."""
        graph = self.graph.copy()
        graph.add_node(SINK, pos=self.sink_position)
        for node_id in self.graph.nodes:
            if euclidean_distance(self.nodes[node_id].position, self.sink_position) <= self.comm_range:
                graph.add_edge(node_id, SINK)
        return graph

    def refresh_centralities(self):
        """Recompute the degree and sink-betweenness caches from the adjacency."""
        self.degree_cache = {node_id: self.graph.degree(node_id) for node_id in self.graph.nodes}
        self.betweenness_cache = sink_betweenness(self.routing_graph(), SINK)
        logger.debug(f"Centralities refreshed for {len(self.degree_cache)} alive nodes")

    def node(self, node_id: int) -> SensorNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise KeyError(f"Unknown node id {node_id}") from None

    def remove_node(self, node_id: int):
        """Take a dead node out of the graph and refresh centralities."""
        node = self.node(node_id)
        node.alive = False
        if self.graph.has_node(node_id):
            self.graph.remove_node(node_id)
        self.refresh_centralities()

    def alive_nodes(self) -> List[SensorNode]:
        return [node for node in self.nodes.values() if node.alive]

    @property
    def max_degree(self) -> int:
        return max(self.degree_cache.values(), default=0)


def sink_betweenness(graph: nx.Graph, sink) -> Dict[int, float]:
    """
    Single-destination betweenness: for every vertex v other than the sink,
    the sum over sources s != v of sigma_{s,sink}(v) / sigma_{s,sink}, with
    unit edge weights. Unreachable sources contribute 0.
    """
    sources = [v for v in graph.nodes if v != sink]
    # Directed copy so every source->sink path counts once (no undirected halving)
    scores = nx.betweenness_centrality_subset(graph.to_directed(), sources=sources, targets=[sink],
                                              normalized=False)
    scores.pop(sink, None)
    return {v: float(score) for v, score in scores.items()}


def build_topology(seed: int, node_count: int, area_side: float, comm_range: float = 50.0,
                   sensing_range: float = 25.0, capacity: float = 0.5, threshold_ratio: float = 0.30,
                   drain_rate_range: Tuple[float, float] = (5e-5, 2e-4),
                   initial_residual_min_ratio: float = 1.0,
                   positions: Optional[Sequence[Point]] = None) -> Network:
    """
    Deploy ``node_count`` nodes uniformly over the square from a seeded
    generator. ``positions`` overrides the drawn coordinates (tests and
    hand-built scenarios); the draws still happen so the other attributes do
    not depend on whether positions were forced.
    """
    if node_count < 1:
        raise ValueError(f"node_count must be at least 1, got {node_count}")
    if area_side <= 0:
        raise ValueError(f"area_side must be positive, got {area_side}")
    if comm_range <= 0:
        raise ValueError(f"comm_range must be positive, got {comm_range}")
    if positions is not None and len(positions) != node_count:
        raise ValueError(f"Expected {node_count} positions, got {len(positions)}")

    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, area_side, size=(node_count, 2))
    rates = rng.uniform(drain_rate_range[0], drain_rate_range[1], size=node_count)
    fill = rng.uniform(initial_residual_min_ratio, 1.0, size=node_count)
    if positions is not None:
        coords = np.asarray(positions, dtype=float)

    threshold = threshold_ratio * capacity
    nodes = [
        SensorNode(id=i, x=float(coords[i, 0]), y=float(coords[i, 1]), capacity=capacity,
                   residual=float(min(capacity, fill[i] * capacity)),
                   consumption_rate=float(rates[i]), request_threshold=threshold)
        for i in range(node_count)
    ]
    network = Network(nodes, area_side, comm_range, sensing_range, seed=seed)
    logger.info(f"Built topology seed={seed}: {node_count} nodes, {network.graph.number_of_edges()} links")
    return network


def node_degree(net: Network, node_id: int) -> int:
    net.node(node_id)
    return net.degree_cache.get(node_id, 0)


def betweenness(net: Network, node_id: int) -> float:
    net.node(node_id)
    return net.betweenness_cache.get(node_id, 0.0)


def mcv_initial_positions(mcv_count: int, circum_radius: float, center: Point = (0.0, 0.0)) -> List[Point]:
    """MCV j (1-based) sits at angle pi/m * (2j - 1) on a circle of radius C_c/2 about ``center``."""
    if mcv_count < 1:
        raise ValueError(f"mcv_count must be at least 1, got {mcv_count}")
    if circum_radius <= 0:
        raise ValueError(f"circum_radius must be positive, got {circum_radius}")

    radius = circum_radius / 2
    points = []
    for j in range(1, mcv_count + 1):
        angle = math.pi / mcv_count * (2 * j - 1)
        points.append((center[0] + radius * math.cos(angle), center[1] + radius * math.sin(angle)))
    return points


def dump_topology(net: Network) -> str:
    """Header line with area, ranges and seed, then ``id x y capacity residual rate`` per node."""
    lines = [f"# area={net.area_side!r} comm_range={net.comm_range!r} "
             f"sensing_range={net.sensing_range!r} seed={net.seed}"]
    for node in sorted(net.nodes.values(), key=lambda n: n.id):
        lines.append(f"{node.id} {node.x!r} {node.y!r} {node.capacity!r} {node.residual!r} "
                     f"{node.consumption_rate!r}")
    return '\n'.join(lines) + '\n'


def load_topology(text: str, threshold_ratio: float = 0.30) -> Network:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith('#'):
        raise ValueError("Topology text must start with a '#' header line")

    header = dict(item.split('=', 1) for item in lines[0].lstrip('#').split())
    try:
        area = float(header['area'])
        comm_range = float(header['comm_range'])
        sensing_range = float(header['sensing_range'])
    except KeyError as e:
        raise ValueError(f"Topology header is missing {e}") from e
    seed = None if header.get('seed') in (None, 'None') else int(header['seed'])

    nodes = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"Line {lineno}: expected 6 fields, got {len(parts)}")
        node_id, x, y, capacity, residual, rate = int(parts[0]), *map(float, parts[1:])
        nodes.append(SensorNode(id=node_id, x=x, y=y, capacity=capacity, residual=residual,
                                consumption_rate=rate, request_threshold=threshold_ratio * capacity))
    return Network(nodes, area, comm_range, sensing_range, seed=seed)
