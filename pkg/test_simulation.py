#!/usr/bin/env python3
"""
Tests for the discrete-event engine: drain, queue assignment, MCV cycle,
ISAC deduplication and the metric ledger
"""

import math
from collections import Counter

import pytest

from app.config import ConfigError, SimulationConfig
from app.network import Network, SensorNode
from app.simulation import (EventKind, EventLog, Simulation, collect_metrics, drain_step, run)


def one_node_network(residual=0.16, rate=1e-4, x=200.0, y=200.0):
    node = SensorNode(0, x, y, capacity=0.5, residual=residual, consumption_rate=rate, request_threshold=0.15)
    return Network([node], area_side=400)


def audit_requests(log):
    """Number of ChargeCompleted records per request id"""
    return Counter(record.payload['request'] for record in log.of_kind(EventKind.CHARGE_COMPLETED))


def test_drain_step():
    node = SensorNode(0, 0.0, 0.0, residual=0.16, consumption_rate=1e-4, request_threshold=0.15)
    result = drain_step(node, 100.0)
    assert math.isclose(result.node.residual, 0.15)
    assert result.request_emitted and not result.died
    assert node.residual == 0.16

    again = drain_step(result.node, 10.0, requesting=True)
    assert not again.request_emitted

    dead = drain_step(again.node, 1e6, requesting=True)
    assert dead.died and dead.node.residual == 0.0 and not dead.node.alive
    assert not drain_step(dead.node, 10.0).died

    with pytest.raises(ValueError):
        drain_step(node, -1.0)


def test_config_rejected_before_simulating():
    with pytest.raises(ConfigError) as e:
        SimulationConfig(mcv_speed=-5)
    assert e.value.key == 'mcv_speed'
    with pytest.raises(ConfigError):
        SimulationConfig(drain_rate_min=0.0)
    with pytest.raises(ConfigError):
        SimulationConfig(scheduler='greedy')


def test_no_requests_means_no_work():
    cfg = SimulationConfig(node_count=20, horizon=100.0, drain_rate_min=1e-9, drain_rate_max=1e-9)
    report, log = run(cfg)
    assert report.requests_emitted == 0
    assert report.energy_usage_efficiency == 100.0
    assert not report.efficiency_defined
    assert report.travel_distance_total == 0.0
    assert report.survival_rate == 100.0


def test_single_node_single_request():
    cfg = SimulationConfig(node_count=1, mcv_count=1, horizon=1000.0, scheduler='fcfs')
    report, log = run(cfg, one_node_network())
    requests = log.of_kind(EventKind.REQUEST_EMITTED)
    charges = log.of_kind(EventKind.CHARGE_COMPLETED)
    assert len(requests) == 1 and len(charges) == 1
    assert math.isclose(requests[0].time, 100.0)

    # MCV 1 starts on the west border, 200 m from the node
    arrival = log.of_kind(EventKind.MCV_ARRIVED)[0]
    assert math.isclose(arrival.time, 140.0)
    assert math.isclose(arrival.payload['leg_m'], 200.0)
    assert math.isclose(charges[0].payload['energy'], 0.5 - (0.16 - 1e-4 * 140.0))
    assert math.isclose(report.mean_charging_delay, charges[0].time - 100.0)
    ledger = report.per_mcv[1]
    assert math.isclose(ledger.travel_energy, 1000.0)
    assert report.requests_served == 1


def test_poised_charges_to_the_charging_factor_target():
    cfg = SimulationConfig(node_count=1, mcv_count=1, horizon=3000.0, scheduler='poised')
    report, log = run(cfg, one_node_network())
    arrivals = [r for r in log.of_kind(EventKind.MCV_ARRIVED) if r.payload['node'] is not None]
    assert arrivals
    for record in arrivals:
        assert math.isclose(record.payload['target'], record.payload['c_fs'] / 100 * 0.5)
        assert record.payload['c_fs'] < 100
    for record in log.of_kind(EventKind.CHARGE_COMPLETED):
        assert record.payload['energy'] > 0


def test_assign_on_request_fills_every_queue():
    cfg = SimulationConfig(node_count=1, mcv_count=2, horizon=1000.0, scheduler='nearest')
    sim = Simulation(cfg, one_node_network(residual=0.1))
    sim._emit_request(0)
    assert all(0 in state.pending for state in sim.states)
    assert all(len(state.mcv.queue) == 1 for state in sim.states)

    legs = [state.leg.id for state in sim.states]
    sim.assign_on_request(0)
    assert [state.leg.id for state in sim.states] == legs


def test_dedup_removes_node_from_other_queues():
    cfg = SimulationConfig(node_count=1, mcv_count=3, horizon=1000.0, scheduler='nearest')
    sim = Simulation(cfg, one_node_network(residual=0.1))
    sim._emit_request(0)
    assert all(state.status == 'traveling' for state in sim.states)

    sim.now = 10.0
    sim.dedup_on_detection(0, detecting_mcv=2)
    assert 0 in sim.states[1].pending
    for index in (0, 2):
        state = sim.states[index]
        assert 0 not in state.pending
        assert state.leg is None and state.status == 'idle'
        assert math.isclose(state.ledger.travel_distance, 10.0 * cfg.mcv_speed)
    assert sim.states[1].status == 'traveling'


def test_truncated_leg_pays_for_distance_covered():
    cfg = SimulationConfig(node_count=1, mcv_count=1, horizon=1000.0)
    sim = Simulation(cfg, one_node_network(residual=0.4))
    state = sim.states[0]
    state.mcv.move_to((0.0, 200.0))
    sim._start_leg(state, (200.0, 200.0), 'roam')
    sim._end_leg(state, 20.0)
    assert state.mcv.position == (100.0, 200.0)
    assert math.isclose(state.mcv.battery, 10_000.0 - 500.0)
    assert math.isclose(state.ledger.travel_distance, 100.0)


def test_isac_dedup_prevents_double_service():
    """Two MCVs equidistant from one node: ISAC keeps a single service, without it both serve"""
    base = dict(node_count=1, mcv_count=2, horizon=600.0, scheduler='nearest')

    with_isac, log_on = run(SimulationConfig(isac=True, **base), one_node_network())
    assert with_isac.duplicate_services == 0
    assert max(audit_requests(log_on).values()) == 1
    assert log_on.of_kind(EventKind.MCV_DETECTED_BY_NODE)

    without_isac, log_off = run(SimulationConfig(isac=False, **base), one_node_network())
    assert without_isac.duplicate_services >= 1
    assert max(audit_requests(log_off).values()) >= 2
    assert with_isac.travel_distance_total <= without_isac.travel_distance_total


def test_request_while_another_node_is_charging():
    """Node B crosses E_th while the only MCV is topping up node A; both get served"""
    a = SensorNode(0, 200.0, 200.0, capacity=0.5, residual=0.16, consumption_rate=1e-4, request_threshold=0.15)
    b = SensorNode(1, 220.0, 200.0, capacity=0.5, residual=0.1644, consumption_rate=1e-4, request_threshold=0.15)
    cfg = SimulationConfig(node_count=2, mcv_count=1, horizon=1000.0, scheduler='fcfs')
    report, log = run(cfg, Network([a, b], area_side=400))

    requests = log.of_kind(EventKind.REQUEST_EMITTED)
    assert [r.payload['node'] for r in requests] == [0, 1]
    assert math.isclose(requests[1].time, 144.0)
    charges = log.of_kind(EventKind.CHARGE_COMPLETED)
    assert [c.payload['node'] for c in charges] == [0, 1]
    arrival_a = log.of_kind(EventKind.MCV_ARRIVED)[0]
    assert arrival_a.time < requests[1].time < charges[0].time
    assert report.requests_served == 2
    assert max(audit_requests(log).values()) == 1


def test_full_day_runs_finish_for_every_scheduler():
    for scheduler in ('poised', 'nearest', 'fcfs'):
        for isac in (True, False):
            cfg = SimulationConfig(node_count=100, horizon=24 * 3600.0, seed=5, scheduler=scheduler, isac=isac)
            report, log = run(cfg)
            assert report.requests_emitted > 0, (scheduler, isac)
            assert report.requests_served > 0, (scheduler, isac)
            assert 0.0 < report.energy_usage_efficiency <= 100.0, (scheduler, isac)
            if isac:
                assert max(audit_requests(log).values()) == 1, scheduler


def test_sweep_cell_invariants():
    cfg = SimulationConfig(node_count=150, mcv_count=4, horizon=12 * 3600.0, seed=3)
    report, log = run(cfg)
    assert report.requests_emitted > 0

    # Log is time ordered and causal
    times = [record.time for record in log.records]
    assert times == sorted(times)
    emitted, arrived = set(), set()
    for record in log.records:
        if record.kind == EventKind.REQUEST_EMITTED:
            emitted.add(record.payload['request'])
        elif record.kind == EventKind.MCV_ARRIVED and record.payload['node'] is not None:
            arrived.add((record.payload['mcv'], record.payload['request']))
        elif record.kind == EventKind.CHARGE_COMPLETED:
            assert record.payload['request'] in emitted
            assert (record.payload['mcv'], record.payload['request']) in arrived

    assert max(audit_requests(log).values(), default=0) <= 1
    assert 0.0 <= report.survival_rate <= 100.0
    assert report.energy_usage_efficiency <= 100.0


def test_energy_conservation():
    cfg = SimulationConfig(node_count=300, mcv_count=4, horizon=24 * 3600.0, seed=1)
    report, _ = run(cfg)
    for mcv_id, ledger in report.per_mcv.items():
        expected = ledger.transferred + cfg.travel_cost * ledger.travel_distance \
            + (ledger.final_battery - ledger.initial)
        assert math.isclose(ledger.refilled, expected, rel_tol=1e-9, abs_tol=1e-6), mcv_id
    assert 0.0 < report.energy_usage_efficiency <= 100.0


def test_determinism():
    cfg = SimulationConfig(node_count=60, horizon=6 * 3600.0, seed=9)
    first_report, first_log = run(cfg)
    second_report, second_log = run(cfg)
    assert first_log.to_lines() == second_log.to_lines()
    assert first_report.to_dict() == second_report.to_dict()


def test_collect_metrics_arithmetic():
    nodes = [SensorNode(i, 10.0 * i, 10.0) for i in range(10)]
    nodes[3].alive = False
    nodes[7].alive = False
    net = Network(nodes, area_side=400)

    log = EventLog()
    log.append(10.0, EventKind.REQUEST_EMITTED, request=1, node=0)
    log.append(50.0, EventKind.CHARGE_COMPLETED, mcv=1, node=0, request=1, energy=0.1, duration=2.0,
               duplicate=False)
    report = collect_metrics(log, net, [])
    assert report.mean_charging_delay == 40.0
    assert report.survival_rate == 80.0
    assert report.requests_served == 1


def test_idle_roam_moves_mcvs_without_requests():
    cfg = SimulationConfig(node_count=10, horizon=600.0, idle_roam=True, drain_rate_min=1e-9, drain_rate_max=1e-9)
    report, _ = run(cfg)
    assert report.travel_distance_total > 0
    assert report.requests_emitted == 0


if __name__ == '__main__':
    for test in (test_drain_step, test_config_rejected_before_simulating, test_no_requests_means_no_work,
                 test_single_node_single_request, test_poised_charges_to_the_charging_factor_target,
                 test_assign_on_request_fills_every_queue, test_dedup_removes_node_from_other_queues,
                 test_truncated_leg_pays_for_distance_covered, test_isac_dedup_prevents_double_service,
                 test_request_while_another_node_is_charging, test_full_day_runs_finish_for_every_scheduler,
                 test_sweep_cell_invariants, test_energy_conservation, test_determinism,
                 test_collect_metrics_arithmetic, test_idle_roam_moves_mcvs_without_requests):
        test()
        print(f"✓ {test.__name__}")
