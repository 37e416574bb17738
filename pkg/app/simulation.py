"""
Deterministic discrete-event simulation of a WRSN served by several MCVs.

Node drain is integrated analytically between events; threshold crossings and
deaths are scheduled at their exact times. The sink keeps one queue per MCV,
re-sorts it on every membership change and periodically, and (with ISAC on)
removes a node from the other queues as soon as one MCV is detected inside the
node's sensing range.
"""

import heapq
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .config import SimulationConfig
from .isac import IsacConfig, NoSignalDetected, detect_mcv, synth_waveform
from .network import (ENERGY_EPS, Mcv, Network, Point, SensorNode, build_topology,
                      euclidean_distance, mcv_initial_positions)
from .planner import ChargePlanItem, full_charge_plan, make_plan
from .priority import QueueEntry, build_queue

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    REQUEST_EMITTED = 'RequestEmitted'
    MCV_ARRIVED = 'McvArrived'
    CHARGE_COMPLETED = 'ChargeCompleted'
    MCV_DETECTED_BY_NODE = 'McvDetectedByNode'
    NODE_DIED = 'NodeDied'
    DEPOT_RETURN = 'DepotReturn'
    QUEUE_RESORT = 'QueueResort'


@dataclass(order=True)
class Event:
    time: float
    seq: int
    kind: EventKind = field(compare=False)
    payload: Dict = field(compare=False, default_factory=dict)


@dataclass
class LogRecord:
    time: float
    kind: EventKind
    payload: Dict

    def to_line(self) -> str:
        fields_ = ' '.join(f"{key}={_fmt(value)}" for key, value in self.payload.items())
        return f"{self.time:.6f} {self.kind.value} {fields_}".rstrip()


class EventLog:
    """Append-only record of the events that actually happened, in time order."""

    def __init__(self):
        self.records: List[LogRecord] = []

    def append(self, time: float, kind: EventKind, **payload):
        self.records.append(LogRecord(time, kind, payload))

    def of_kind(self, kind: EventKind) -> List[LogRecord]:
        return [record for record in self.records if record.kind == kind]

    def to_lines(self) -> List[str]:
        return [record.to_line() for record in self.records]

    def __len__(self):
        return len(self.records)


@dataclass
class McvLedger:
    initial: float
    refilled: float = 0.0
    transferred: float = 0.0
    travel_distance: float = 0.0
    travel_energy: float = 0.0
    final_battery: float = 0.0

    @property
    def drawn(self) -> float:
        """Net energy taken from the sink: everything dispensed minus what is still on board."""
        return self.initial + self.refilled - self.final_battery

    def to_dict(self) -> Dict[str, float]:
        return {
            'initial': self.initial,
            'refilled': self.refilled,
            'transferred': self.transferred,
            'travel_distance': self.travel_distance,
            'travel_energy': self.travel_energy,
            'final_battery': self.final_battery,
        }


@dataclass
class MetricsReport:
    energy_usage_efficiency: float
    mean_charging_delay: float
    survival_rate: float
    travel_distance_total: float
    efficiency_defined: bool = True
    requests_emitted: int = 0
    requests_served: int = 0
    duplicate_services: int = 0
    energy_dispensed: float = 0.0
    per_mcv: Dict[int, McvLedger] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'energy_usage_efficiency': self.energy_usage_efficiency,
            'mean_charging_delay': self.mean_charging_delay,
            'survival_rate': self.survival_rate,
            'travel_distance_total': self.travel_distance_total,
            'efficiency_defined': self.efficiency_defined,
            'requests_emitted': self.requests_emitted,
            'requests_served': self.requests_served,
            'duplicate_services': self.duplicate_services,
            'energy_dispensed': self.energy_dispensed,
            'per_mcv': {mcv_id: ledger.to_dict() for mcv_id, ledger in self.per_mcv.items()},
        }


@dataclass
class DrainResult:
    node: SensorNode
    request_emitted: bool = False
    died: bool = False


def drain_step(node: SensorNode, dt: float, requesting: bool = False) -> DrainResult:
    """
    Advance one node by ``dt`` seconds of consumption. A request fires when
    the residual is at or below E_th and no request is open for the current
    excursion; reaching zero kills the node exactly once.
    """
    if dt < 0:
        raise ValueError(f"Drain step cannot go back in time (dt={dt})")
    if not node.alive:
        return DrainResult(node)

    residual = node.residual - node.consumption_rate * dt
    if residual <= ENERGY_EPS:
        residual = 0.0
    updated = replace(node, residual=residual)

    emitted = not requesting and updated.below_threshold
    if residual == 0.0:
        updated.alive = False
        return DrainResult(updated, request_emitted=emitted, died=True)
    return DrainResult(updated, request_emitted=emitted)


@dataclass
class Request:
    id: int
    node_id: int
    emitted_at: float
    claimed_by: Optional[int] = None
    served_at: Optional[float] = None
    served_by: Optional[int] = None
    services: int = 0
    closed: bool = False


@dataclass
class Leg:
    id: int
    purpose: str  # 'node', 'depot' or 'roam'
    start: Point
    end: Point
    depart: float
    arrive: float
    node_id: Optional[int] = None
    request_id: Optional[int] = None
    charging_factor_pct: int = 100

    @property
    def distance(self) -> float:
        return euclidean_distance(self.start, self.end)

    def position_at(self, now: float) -> Point:
        span = self.arrive - self.depart
        frac = 1.0 if span <= 0 else min(1.0, max(0.0, (now - self.depart) / span))
        if frac >= 1.0:
            return self.end
        return (self.start[0] + frac * (self.end[0] - self.start[0]),
                self.start[1] + frac * (self.end[1] - self.start[1]))


@dataclass
class McvState:
    mcv: Mcv
    ledger: McvLedger
    pending: Set[int] = field(default_factory=set)
    plan: List[ChargePlanItem] = field(default_factory=list)
    status: str = 'idle'  # idle, traveling, charging
    leg: Optional[Leg] = None
    serving: Optional[int] = None


class PoisedScheduler:
    """Queue by the averaged four-distribution metric, charge to the charging-factor target."""
    name = 'poised'

    def __init__(self, cfg: SimulationConfig):
        self.params = cfg.distribution_params()

    def order(self, mcv: Mcv, pending: Set[int], net: Network, requests: Dict[int, Request],
              open_request: Dict[int, int]) -> List[QueueEntry]:
        return build_queue(mcv, pending, net, self.params)

    def plan(self, queue: List[QueueEntry], net: Network, charge_rate: float) -> List[ChargePlanItem]:
        return make_plan(queue, net.nodes, charge_rate)


class NearestJobScheduler(PoisedScheduler):
    """Baseline: geometrically closest request first, full recharge."""
    name = 'nearest'

    def order(self, mcv, pending, net, requests, open_request):
        entries = build_queue(mcv, pending, net, self.params)
        return sorted(entries, key=lambda e: (euclidean_distance(mcv.position, net.nodes[e.node_id].position),
                                              e.node_id))

    def plan(self, queue, net, charge_rate):
        return full_charge_plan(queue, net.nodes, charge_rate)


class FcfsScheduler(PoisedScheduler):
    """Baseline: requests in emission order, full recharge."""
    name = 'fcfs'

    def order(self, mcv, pending, net, requests, open_request):
        entries = build_queue(mcv, pending, net, self.params)
        return sorted(entries, key=lambda e: (requests[open_request[e.node_id]].emitted_at,
                                              open_request[e.node_id]))

    def plan(self, queue, net, charge_rate):
        return full_charge_plan(queue, net.nodes, charge_rate)


SCHEDULER_CLASSES = {cls.name: cls for cls in (PoisedScheduler, NearestJobScheduler, FcfsScheduler)}


class Simulation:
    """One run: owns the network, the MCVs, the event queue and the log."""

    def __init__(self, cfg: SimulationConfig, network: Optional[Network] = None):
        cfg.validate()
        self.cfg = cfg
        self.net = network or build_topology(
            cfg.seed, cfg.node_count, cfg.area_side, cfg.comm_range, cfg.sensing_range,
            capacity=cfg.node_capacity, threshold_ratio=cfg.request_threshold_ratio,
            drain_rate_range=(cfg.drain_rate_min, cfg.drain_rate_max),
            initial_residual_min_ratio=cfg.initial_residual_min_ratio)
        self.scheduler = SCHEDULER_CLASSES[cfg.scheduler](cfg)
        self.log = EventLog()
        self.now = 0.0

        self._events: List[Event] = []
        self._seq = 0
        self._leg_ids = 0
        self._as_of: Dict[int, float] = {node_id: 0.0 for node_id in self.net.nodes}
        self._requesting: Dict[int, bool] = {node_id: False for node_id in self.net.nodes}
        self.requests: Dict[int, Request] = {}
        self.open_request: Dict[int, int] = {}
        self._probe_counts: Dict[Tuple[int, int], int] = {}

        self.isac_cfg = IsacConfig.from_simulation(cfg)
        self.waveform = synth_waveform(self.isac_cfg.sample_rate, self.isac_cfg.duration,
                                       self.isac_cfg.f0, self.isac_cfg.f1) if cfg.isac else None
        self._roam_rng = np.random.default_rng([cfg.seed, 7919])

        positions = mcv_initial_positions(cfg.mcv_count, cfg.effective_circum_radius, self.net.sink_position)
        self.states: List[McvState] = []
        side = self.net.area_side
        for j, (x, y) in enumerate(positions, 1):
            # Start points outside the deployment square are pulled onto its border
            x, y = min(max(x, 0.0), side), min(max(y, 0.0), side)
            mcv = Mcv(id=j, x=x, y=y, capacity=cfg.mcv_capacity, battery=cfg.mcv_capacity,
                      speed=cfg.mcv_speed, travel_cost_rate=cfg.travel_cost, charge_rate=cfg.charge_rate,
                      min_working_threshold=cfg.min_working_threshold)
            self.states.append(McvState(mcv=mcv, ledger=McvLedger(initial=mcv.battery)))

    # -- event queue -------------------------------------------------------

    def _push(self, time: float, kind: EventKind, **payload):
        heapq.heappush(self._events, Event(time, self._seq, kind, payload))
        self._seq += 1

    def run(self) -> Tuple[MetricsReport, EventLog]:
        logger.info(f"Simulating {self.cfg.scheduler} with {len(self.net.nodes)} nodes, "
                    f"{len(self.states)} MCVs, seed {self.cfg.seed}, ISAC {'on' if self.cfg.isac else 'off'}")
        for node_id in sorted(self.net.nodes):
            self._schedule_node(node_id)
        self._push(self.cfg.resort_interval, EventKind.QUEUE_RESORT)

        handlers = {
            EventKind.REQUEST_EMITTED: self._on_node_wakeup,
            EventKind.NODE_DIED: self._on_node_wakeup,
            EventKind.MCV_ARRIVED: self._on_arrival,
            EventKind.DEPOT_RETURN: self._on_arrival,
            EventKind.MCV_DETECTED_BY_NODE: self._on_probe,
            EventKind.CHARGE_COMPLETED: self._on_charge_completed,
            EventKind.QUEUE_RESORT: self._on_periodic_resort,
        }
        while self._events and self._events[0].time <= self.cfg.horizon:
            event = heapq.heappop(self._events)
            self.now = event.time
            handlers[event.kind](event)

        self._finish()
        report = collect_metrics(self.log, self.net, self.states)
        logger.info(f"Run finished: efficiency {report.energy_usage_efficiency:.4f}%, "
                    f"delay {report.mean_charging_delay:.1f} s, survival {report.survival_rate:.1f}%, "
                    f"travel {report.travel_distance_total:.1f} m")
        return report, self.log

    def _finish(self):
        self.now = self.cfg.horizon
        for node_id, node in self.net.nodes.items():
            if node.alive:
                self._advance(node_id, self.now)
        for state in self.states:
            if state.leg is not None and state.status == 'traveling':
                self._end_leg(state, self.now)
            state.ledger.final_battery = state.mcv.battery

    # -- node energy -------------------------------------------------------

    def _schedule_node(self, node_id: int):
        """Wake the node at its next threshold crossing and at its death time."""
        node = self.net.nodes[node_id]
        if not node.alive:
            return
        now = self._as_of[node_id]
        if node.residual > node.request_threshold:
            self._push(now + (node.residual - node.request_threshold) / node.consumption_rate,
                       EventKind.REQUEST_EMITTED, node=node_id)
        elif not self._requesting[node_id]:
            self._push(now, EventKind.REQUEST_EMITTED, node=node_id)
        self._push(now + node.residual / node.consumption_rate, EventKind.NODE_DIED, node=node_id)

    def _advance(self, node_id: int, now: float) -> DrainResult:
        """Bring a node's residual up to ``now``; requests and deaths stay with their own events."""
        node = self.net.nodes[node_id]
        result = drain_step(node, now - self._as_of[node_id], self._requesting[node_id])
        node.residual = result.node.residual
        self._as_of[node_id] = now
        if result.request_emitted or result.died:
            self._push(now, EventKind.NODE_DIED if result.died else EventKind.REQUEST_EMITTED, node=node_id)
        return result

    def _on_node_wakeup(self, event: Event):
        node_id = event.payload['node']
        node = self.net.nodes[node_id]
        if not node.alive:
            return
        result = drain_step(node, self.now - self._as_of[node_id], self._requesting[node_id])
        node.residual = result.node.residual
        self._as_of[node_id] = self.now
        if result.request_emitted:
            self._emit_request(node_id)
        if result.died:
            self._handle_death(node_id)

    def _emit_request(self, node_id: int):
        request = Request(id=len(self.requests) + 1, node_id=node_id, emitted_at=self.now)
        self.requests[request.id] = request
        self.open_request[node_id] = request.id
        self._requesting[node_id] = True
        self.log.append(self.now, EventKind.REQUEST_EMITTED, request=request.id, node=node_id)
        self.assign_on_request(node_id)

    def _close_request(self, node_id: int):
        request_id = self.open_request.pop(node_id, None)
        if request_id is not None:
            self.requests[request_id].closed = True
        self._requesting[node_id] = False

    def _handle_death(self, node_id: int):
        request_id = self.open_request.get(node_id)
        self.net.nodes[node_id].alive = False
        self.log.append(self.now, EventKind.NODE_DIED, node=node_id, request=request_id)
        logger.debug(f"Node {node_id} died at t={self.now:.1f}s")
        self._close_request(node_id)
        self.net.remove_node(node_id)
        for state in self.states:
            state.pending.discard(node_id)
            if state.leg is not None and state.leg.purpose == 'node' and state.leg.node_id == node_id \
                    and state.status == 'traveling':
                self._end_leg(state, self.now)
        self._resort()

    # -- sink side ---------------------------------------------------------

    def assign_on_request(self, node_id: int):
        """Insert a requesting node into every MCV queue; already queued nodes are left alone."""
        added = False
        for state in self.states:
            if node_id not in state.pending:
                state.pending.add(node_id)
                added = True
        if not added:
            return
        for state in self.states:
            if state.leg is not None and state.leg.purpose == 'roam' and state.status == 'traveling':
                self._end_leg(state, self.now)
        self._resort()

    def dedup_on_detection(self, node_id: int, detecting_mcv: int):
        """Drop the node from every other queue; MCVs heading there stop where they are."""
        for state in self.states:
            if state.mcv.id == detecting_mcv:
                continue
            state.pending.discard(node_id)
            if state.leg is not None and state.leg.purpose == 'node' and state.leg.node_id == node_id \
                    and state.status == 'traveling':
                logger.debug(f"MCV {state.mcv.id} abandons node {node_id}, claimed by MCV {detecting_mcv}")
                self._end_leg(state, self.now)
        self._resort()

    def _resort(self):
        """Rebuild every MCV queue and charge plan, then let idle MCVs pick work."""
        for state in self.states:
            state.pending = {node_id for node_id in state.pending
                             if self.net.nodes[node_id].alive and node_id in self.open_request}
        for node_id in sorted(set().union(*(state.pending for state in self.states))):
            self._advance(node_id, self.now)

        # A node under a charger was topped up on arrival and sits out until its service completes
        in_service = self.in_service()
        for state in self.states:
            candidates = state.pending - in_service
            queue = self.scheduler.order(state.mcv, candidates, self.net, self.requests, self.open_request)
            state.mcv.queue = queue
            state.plan = self.scheduler.plan(queue, self.net, state.mcv.charge_rate)
        for state in self.states:
            self.mcv_cycle(state)

    def in_service(self) -> Set[int]:
        return {state.serving for state in self.states if state.serving is not None}

    def _on_periodic_resort(self, event: Event):
        queued = [len(state.pending) for state in self.states]
        if any(queued):
            self.log.append(self.now, EventKind.QUEUE_RESORT, queued=queued)
        self._resort()
        if self.now + self.cfg.resort_interval <= self.cfg.horizon:
            self._push(self.now + self.cfg.resort_interval, EventKind.QUEUE_RESORT)

    # -- MCV cycle ---------------------------------------------------------

    def mcv_cycle(self, state: McvState):
        """Decision point of an idle MCV: head to the first worthwhile plan item, the depot, or nowhere."""
        if state.status != 'idle':
            return
        mcv = state.mcv
        sink = self.net.sink_position
        for item in list(state.plan):
            if item.is_noop or item.node_id not in state.pending:
                continue
            node = self.net.nodes[item.node_id]
            need = (mcv.travel_cost_rate * (euclidean_distance(mcv.position, node.position)
                                            + euclidean_distance(node.position, sink))
                    + (item.target_energy - node.residual) + mcv.min_working_threshold)
            if mcv.battery >= need:
                self._start_leg(state, node.position, 'node', node_id=node.id,
                                request_id=self.open_request.get(node.id),
                                charging_factor_pct=item.charging_factor_pct)
                return
            if mcv.position != sink or mcv.battery < mcv.capacity:
                self._start_leg(state, sink, 'depot')
                return
            logger.warning(f"MCV {mcv.id} cannot reach node {node.id} even on a full battery; skipping it")
            state.pending.discard(node.id)

        if self.cfg.idle_roam:
            self._roam(state)

    def _roam(self, state: McvState):
        mcv = state.mcv
        waypoint = tuple(float(v) for v in self._roam_rng.uniform(0.0, self.net.area_side, size=2))
        need = mcv.travel_cost_rate * (euclidean_distance(mcv.position, waypoint)
                                       + euclidean_distance(waypoint, self.net.sink_position))
        if mcv.battery >= need + mcv.min_working_threshold:
            self._start_leg(state, waypoint, 'roam')
        elif mcv.position != self.net.sink_position:
            self._start_leg(state, self.net.sink_position, 'depot')

    def _start_leg(self, state: McvState, dest: Point, purpose: str, node_id: Optional[int] = None,
                   request_id: Optional[int] = None, charging_factor_pct: int = 100):
        mcv = state.mcv
        self._leg_ids += 1
        distance = euclidean_distance(mcv.position, dest)
        leg = Leg(id=self._leg_ids, purpose=purpose, start=mcv.position, end=(float(dest[0]), float(dest[1])),
                  depart=self.now, arrive=self.now + distance / mcv.speed, node_id=node_id,
                  request_id=request_id, charging_factor_pct=charging_factor_pct)
        state.leg = leg
        state.status = 'traveling'
        kind = EventKind.DEPOT_RETURN if purpose == 'depot' else EventKind.MCV_ARRIVED
        self._push(leg.arrive, kind, mcv=mcv.id, leg=leg.id)

        if purpose == 'node' and self.cfg.isac and request_id is not None \
                and self.requests[request_id].claimed_by is None:
            lead = max(0.0, distance - self.net.sensing_range) / mcv.speed
            self._push(self.now + lead, EventKind.MCV_DETECTED_BY_NODE, mcv=mcv.id, leg=leg.id)

    def _end_leg(self, state: McvState, now: float):
        """Stop the current leg at ``now``, paying for the distance covered."""
        leg = state.leg
        position = leg.position_at(now)
        covered = euclidean_distance(leg.start, position)
        energy = covered * state.mcv.travel_cost_rate
        state.mcv.battery -= energy
        state.ledger.travel_distance += covered
        state.ledger.travel_energy += energy
        state.mcv.move_to(position)
        state.leg = None
        state.status = 'idle'
        return covered

    def _state(self, mcv_id: int) -> McvState:
        return self.states[mcv_id - 1]

    def _current_leg(self, event: Event) -> Optional[McvState]:
        state = self._state(event.payload['mcv'])
        if state.leg is None or state.leg.id != event.payload['leg'] or state.status != 'traveling':
            return None
        return state

    def _on_probe(self, event: Event):
        state = self._current_leg(event)
        if state is None:
            return
        leg = state.leg
        request = self.requests.get(leg.request_id)
        node = self.net.nodes[leg.node_id]
        if request is None or request.closed or request.claimed_by is not None or not node.alive:
            return

        key = (request.id, state.mcv.id)
        probe_index = self._probe_counts.get(key, 0)
        self._probe_counts[key] = probe_index + 1
        seed = int(np.random.SeedSequence([self.cfg.seed, request.id, state.mcv.id, probe_index])
                   .generate_state(1)[0])
        x, y = leg.position_at(self.now)
        snapshot = replace(state.mcv, x=x, y=y, queue=[])
        try:
            result = detect_mcv(node, snapshot, self.net, self.isac_cfg, noise_seed=seed, waveform=self.waveform)
            detected = result.detected
        except NoSignalDetected:
            logger.debug(f"Node {node.id}: no echo from MCV {state.mcv.id}")
            result, detected = None, False

        if detected:
            request.claimed_by = state.mcv.id
            self.log.append(self.now, EventKind.MCV_DETECTED_BY_NODE, mcv=state.mcv.id, node=node.id,
                            request=request.id, distance=round(result.estimated_distance, 3))
            self.dedup_on_detection(node.id, state.mcv.id)
        elif self.now + self.cfg.probe_interval < leg.arrive:
            self._push(self.now + self.cfg.probe_interval, EventKind.MCV_DETECTED_BY_NODE,
                       mcv=state.mcv.id, leg=leg.id)

    def _on_arrival(self, event: Event):
        state = self._current_leg(event)
        if state is None:
            return
        leg = state.leg
        covered = self._end_leg(state, self.now)
        mcv = state.mcv

        if leg.purpose == 'depot':
            refill = mcv.capacity - mcv.battery
            mcv.battery = mcv.capacity
            state.ledger.refilled += refill
            self.log.append(self.now, EventKind.DEPOT_RETURN, mcv=mcv.id, refill=round(refill, 6))
            self.mcv_cycle(state)
            return
        if leg.purpose == 'roam':
            self.log.append(self.now, EventKind.MCV_ARRIVED, mcv=mcv.id, node=None, leg_m=round(covered, 3))
            self.mcv_cycle(state)
            return

        node = self.net.nodes[leg.node_id]
        if not node.alive:
            self.mcv_cycle(state)
            return
        state.status = 'charging'
        state.serving = node.id
        self._advance(node.id, self.now)
        # The service answers whatever request the node has open now
        request_id = self.open_request.get(node.id, leg.request_id)
        request = self.requests.get(request_id)
        if self.cfg.isac and request is not None and request.claimed_by is None and not request.closed:
            request.claimed_by = mcv.id
            self.dedup_on_detection(node.id, mcv.id)

        target = leg.charging_factor_pct / 100 * node.capacity
        delivered = max(0.0, min(target - node.residual, node.capacity - node.residual, mcv.battery))
        node.residual += delivered
        mcv.battery -= delivered
        state.ledger.transferred += delivered
        duration = delivered / mcv.charge_rate
        self._schedule_node(node.id)

        self.log.append(self.now, EventKind.MCV_ARRIVED, mcv=mcv.id, node=node.id, request=request_id,
                        leg_m=round(covered, 3), c_fs=leg.charging_factor_pct, target=round(target, 6))
        self._push(self.now + duration, EventKind.CHARGE_COMPLETED, mcv=mcv.id, node=node.id,
                   request=request_id, energy=delivered, duration=duration)

    def _on_charge_completed(self, event: Event):
        payload = event.payload
        state = self._state(payload['mcv'])
        node_id, request_id = payload['node'], payload['request']
        request = self.requests.get(request_id)
        duplicate = False
        if request is not None:
            duplicate = request.served_at is not None
            request.services += 1
            if not duplicate:
                request.served_at = self.now
                request.served_by = state.mcv.id

        self.log.append(self.now, EventKind.CHARGE_COMPLETED, mcv=state.mcv.id, node=node_id, request=request_id,
                        energy=round(payload['energy'], 9), duration=round(payload['duration'], 6),
                        duplicate=duplicate)
        state.status = 'idle'
        state.serving = None
        state.pending.discard(node_id)

        node = self.net.nodes[node_id]
        if node.alive and node_id in self.open_request and node_id not in self.in_service():
            self._advance(node_id, self.now)
            if self.open_request[node_id] != request_id and node.below_threshold:
                self._resort()
                return
            # Also closes a newer request this service has already lifted above E_th
            self._close_request(node_id)
            if node.below_threshold:
                # Partial target left the node under E_th: a fresh excursion starts now
                self._emit_request(node_id)
                return
            self._schedule_node(node_id)
        self._resort()


def collect_metrics(log: EventLog, net: Network, states: List[McvState]) -> MetricsReport:
    """Energy usage efficiency, mean charging delay, survival rate and total travel for a finished run."""
    emitted = {record.payload['request']: record.time for record in log.of_kind(EventKind.REQUEST_EMITTED)}
    served: Dict[int, float] = {}
    duplicates = 0
    for record in log.of_kind(EventKind.CHARGE_COMPLETED):
        request_id = record.payload['request']
        if request_id in served:
            duplicates += 1
        elif request_id in emitted:
            served[request_id] = record.time - emitted[request_id]

    ledgers = {state.mcv.id: state.ledger for state in states}
    transferred = sum(ledger.transferred for ledger in ledgers.values())
    drawn = sum(ledger.drawn for ledger in ledgers.values())
    efficiency_defined = drawn > ENERGY_EPS
    efficiency = 100.0 * transferred / drawn if efficiency_defined else 100.0

    total = len(net.nodes)
    alive = sum(1 for node in net.nodes.values() if node.alive)
    return MetricsReport(
        energy_usage_efficiency=efficiency,
        mean_charging_delay=float(np.mean(list(served.values()))) if served else 0.0,
        survival_rate=100.0 * alive / total if total else 0.0,
        travel_distance_total=sum(ledger.travel_distance for ledger in ledgers.values()),
        efficiency_defined=efficiency_defined,
        requests_emitted=len(emitted),
        requests_served=len(served),
        duplicate_services=duplicates,
        energy_dispensed=sum(ledger.initial + ledger.refilled for ledger in ledgers.values()),
        per_mcv=ledgers,
    )


def run(config: SimulationConfig, network: Optional[Network] = None) -> Tuple[MetricsReport, EventLog]:
    """Simulate the configured horizon; identical config and seed give identical results."""
    return Simulation(config, network).run()


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(round(value, 9))
    if isinstance(value, (list, tuple)):
        return ','.join(_fmt(v) for v in value)
    return str(value)
