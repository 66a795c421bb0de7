from __future__ import annotations

import random
from collections import Counter

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from hsf_sim.config import ExperimentConfig
from hsf_sim.engine import (
    EventKind,
    Network,
    RandomChooser,
    ScriptedChooser,
    check_invariants,
    detect_deadlock,
    initial_world,
    run,
    step,
    wait_for_graph,
)
from hsf_sim.gateway import Ordering
from hsf_sim.node import ACKS_NE, ACKS_NE_QUEUE_1, BASIC, PARALLEL, Packet, PacketKind, Variant, queue
from hsf_sim.routing import Side
from hsf_sim.topology import Gateway
from trace_audit import audit

VARIANTS = [BASIC, queue(1), queue(3), PARALLEL, ACKS_NE, ACKS_NE_QUEUE_1]


def empty_world(cfg):
    net = Network.for_config(cfg)
    w = initial_world(cfg, net)
    w.injector.pending.clear()
    w.injector.injected = cfg.n * cfg.n
    return w, net


def place(w, c, *packets):
    s = w.nodes[c]
    s.slot = packets[0]
    s.queue = list(packets[1:])


def config(i, dest):
    return Packet(i, PacketKind.CONFIG, dest)


def ack(i, net):
    return Packet(i, PacketKind.ACK, net.ack.dest, net.ack.exit)


def test_determinism():
    cfg = ExperimentConfig(n=4, variant=queue(1), ordering=Ordering.ALTERNATING)
    a = run(cfg, 11, trace=True)
    b = run(cfg, 11, trace=True)
    assert a == b and a.events == b.events and a.choices == b.choices


def test_scripted_replays_random():
    cfg = ExperimentConfig(n=4, variant=PARALLEL, ordering=Ordering.NE_SW_Y)
    a = run(cfg, 3, trace=True)
    b = run(cfg, chooser=ScriptedChooser(a.choices), trace=True)
    assert a.events == b.events


@settings(max_examples=60, deadline=None)
@given(
    n=st.sampled_from([2, 4, 6]),
    variant=st.sampled_from(VARIANTS),
    ordering=st.sampled_from(list(Ordering)),
    seed=st.integers(0, 2**32),
    parallel_sends=st.sampled_from([1, 2]),
    refill=st.booleans(),
    period=st.sampled_from([1, 2]),
)
def test_invariants_hold(n, variant, ordering, seed, parallel_sends, refill, period):
    cfg = ExperimentConfig(
        n=n,
        variant=variant,
        ordering=ordering,
        parallel_sends=parallel_sends,
        refill=refill,
        injection_period=period,
    )
    r = run(cfg, seed, trace=True, check=True, keep_world=True)
    injected, delivered, sunk = audit(r.events, cfg, Network.for_config(cfg), r.world)
    assert sunk == r.acks
    assert sum(e.kind is EventKind.ACK_SINK for e in r.events) == r.acks
    assert r.deadlocked == detect_deadlock(r.events)
    if not r.deadlocked:
        assert r.acks == n * n or r.time == cfg.horizon


def test_contention_is_uniform():
    cfg = ExperimentConfig(n=4)
    picks = Counter()
    for seed in range(10_000):
        w, net = empty_world(cfg)
        # (2,1) heads west into (1,1); (1,2) heads south into (1,1)
        place(w, (2, 1), config(0, (0, 1)))
        place(w, (1, 2), config(1, (1, 0)))
        ev = []
        assert step(w, net, cfg, RandomChooser(random.Random(seed)), ev) == 1
        [mv] = ev
        assert mv.dst == (1, 1)
        picks[mv.src] += 1
    assert set(picks) == {(2, 1), (1, 2)}
    assert chisquare([picks[(2, 1)], picks[(1, 2)]]).pvalue > 1e-3


def test_no_contention_admits_all():
    cfg = ExperimentConfig(n=4)
    w, net = empty_world(cfg)
    place(w, (2, 1), config(0, (0, 1)))
    place(w, (2, 3), config(1, (0, 3)))
    assert step(w, net, cfg, ScriptedChooser([])) == 2


def mutual_wait_state():
    cfg = ExperimentConfig(n=4)
    w, net = empty_world(cfg)
    place(w, (0, 2), config(0, (1, 3)))
    place(w, (0, 3), ack(1, net))
    w.acks_created = w.configs_consumed = 1
    return cfg, w, net


def test_mutual_wait_stalls():
    cfg, w, net = mutual_wait_state()
    place(w, (1, 3), config(2, (0, 3)))
    ev = []
    assert step(w, net, cfg, ScriptedChooser([]), ev) == 0
    assert [e.kind for e in ev] == [EventKind.STALL]
    assert detect_deadlock(ev)
    g, cycles = wait_for_graph(w, net)
    assert [(0, 2), (0, 3)] in [sorted(c) for c in cycles]
    assert g.has_edge((1, 3), (0, 3))


def test_ack_dependency_cycle():
    cfg = ExperimentConfig(n=4, variant=ACKS_NE)
    w, net = empty_world(cfg)
    place(w, (2, 1), ack(0, net))
    place(w, (2, 2), ack(1, net))
    place(w, (3, 2), config(2, (3, 1)))
    place(w, (3, 1), ack(3, net))
    ev = []
    assert step(w, net, cfg, ScriptedChooser([]), ev) == 0
    _, cycles = wait_for_graph(w, net)
    assert [sorted(c) for c in cycles] == [[(2, 1), (2, 2), (3, 1), (3, 2)]]


def test_empty_wait_for_graph():
    cfg = ExperimentConfig(n=4)
    w, net = empty_world(cfg)
    g, cycles = wait_for_graph(w, net)
    assert g.number_of_nodes() == 0 and cycles == []


def test_detect_deadlock_examples():
    cfg = ExperimentConfig(n=2)
    r = next(run(cfg, s, trace=True) for s in range(50) if run(cfg, s).acks == 4)
    assert not r.deadlocked and not detect_deadlock(r.events)
    assert r.events[-1].kind is EventKind.ACK_SINK
    assert not detect_deadlock([e for e in r.events if e.kind is EventKind.MOVE][:1])


@pytest.mark.parametrize("variant", [BASIC, queue(1), PARALLEL])
def test_stall_soundness(variant):
    cfg = ExperimentConfig(n=4, variant=variant, ordering=Ordering.NE_SW_X)
    dead = 0
    for seed in range(40):
        r = run(cfg, seed, debug_stall=10, keep_world=True)
        if r.deadlocked:
            dead += 1
            check_invariants(r.world, variant)
            g, _ = wait_for_graph(r.world, Network.for_config(cfg), max_cycle=cfg.n * cfg.n)
            nx.find_cycle(g)
    assert dead > 0


def test_completion_time_is_last_ack():
    cfg = ExperimentConfig(n=4, variant=ACKS_NE_QUEUE_1)
    r = run(cfg, 0, trace=True)
    assert r.acks == 16 and r.time == r.events[-1].tick
    assert not r.deadlocked


def test_horizon_cuts_run():
    cfg = ExperimentConfig(n=10, variant=ACKS_NE_QUEUE_1, horizon=50)
    r = run(cfg, 0)
    assert r.time == 50 and r.acks < 100 and not r.deadlocked


def test_n10_basic_sw_ne_y_mostly_deadlocks():
    cfg = ExperimentConfig(ordering=Ordering.SW_NE_Y)
    assert sum(run(cfg, s).deadlocked for s in range(20)) >= 18


def test_ne_gateway_receives_acks():
    cfg = ExperimentConfig(n=4, variant=ACKS_NE, ordering=Ordering.NE_SW_X)
    r = run(cfg, 0, keep_world=True)
    assert r.world.gateways[Gateway.NE].acks_received == r.acks == 16
    assert r.world.gateways[Gateway.SW].acks_received == 0


def test_parallel_two_sends_per_tick():
    cfg = ExperimentConfig(n=4, variant=PARALLEL, parallel_sends=2)
    w, net = empty_world(cfg)
    place(w, (0, 0), config(0, (2, 0)), config(1, (0, 2)))
    ev = []
    assert step(w, net, cfg, ScriptedChooser([]), ev) == 2
    assert w.nodes[(0, 0)].slot is None
    cfg1 = cfg.with_(parallel_sends=1)
    w, net = empty_world(cfg1)
    place(w, (0, 0), config(0, (2, 0)), config(1, (0, 2)))
    assert step(w, net, cfg1, ScriptedChooser([])) == 1
    assert w.nodes[(0, 0)].slot.id == 1


def test_parallel_fallback_when_primary_blocked():
    cfg = ExperimentConfig(n=4, variant=Variant(1, True))
    w, net = empty_world(cfg)
    place(w, (0, 0), config(0, (2, 0)), config(1, (0, 2)))
    place(w, (1, 0), config(2, (1, 0)), config(3, (1, 0)))
    ev = []
    step(w, net, cfg, ScriptedChooser([]), ev)
    moves = [e for e in ev if e.kind is EventKind.MOVE]
    assert [(m.src, m.dst, m.packet_id) for m in moves] == [((0, 0), (0, 1), 1)]
    assert w.nodes[(0, 0)].slot.id == 0 and w.nodes[(0, 0)].queue == []


def test_ack_sinks_at_sw():
    cfg = ExperimentConfig(n=4)
    w, net = empty_world(cfg)
    place(w, (0, 1), Packet(0, PacketKind.ACK, (0, 1), Side.WEST))
    w.acks_created = w.configs_consumed = 1
    ev = []
    assert step(w, net, cfg, ScriptedChooser([]), ev) == 1
    assert ev[0].kind is EventKind.ACK_SINK and ev[0].dst is Gateway.SW
    assert w.acks == 1


def test_audit_catches_tampering():
    from trace_audit import AuditError

    cfg = ExperimentConfig(n=4, variant=queue(1))
    r = run(cfg, 5, trace=True)
    net = Network.for_config(cfg)
    i = next(i for i, e in enumerate(r.events) if e.kind is EventKind.MOVE)
    bad = list(r.events)
    bad[i] = bad[i]._replace(dst=(3, 3))
    with pytest.raises(AuditError, match="teleport"):
        audit(bad, cfg, net)
    with pytest.raises(AuditError):
        audit([e for e in r.events if e.kind is not EventKind.ACK_SINK][:40] + [r.events[0]], cfg, net)
