from __future__ import annotations

import pytest

from hsf_sim.engine import Network
from hsf_sim.errors import EngineBug
from hsf_sim.node import (
    ACKS_NE,
    BASIC,
    PARALLEL,
    IntentKind,
    NodeState,
    Packet,
    PacketKind,
    Priority,
    Variant,
    VariantError,
    capacity_free,
    commit_deliver,
    commit_receive,
    commit_send,
    queue,
    select_intents,
)
from hsf_sim.routing import AckRoute, Side
from hsf_sim.topology import Axis, Gateway, in_ep


def cfg(i, dest):
    return Packet(i, PacketKind.CONFIG, dest)


@pytest.mark.parametrize(
    "name, v",
    [
        ("basic", BASIC),
        ("queue-1", queue(1)),
        ("queue-5", queue(5)),
        ("parallel", PARALLEL),
        ("acks-NE", ACKS_NE),
        ("acks-ne-queue-1", Variant(1, False, Gateway.NE)),
        ("parallel-queue-3", Variant(3, True)),
    ],
)
def test_variant_parse_and_name(name, v):
    assert Variant.parse(name) == v
    assert Variant.parse(v.name) == v


@pytest.mark.parametrize("bad", ["", "queue", "queue-x", "fast", "acks-NE-basic", "acks-SW"])
def test_variant_parse_rejects(bad):
    with pytest.raises(VariantError):
        Variant.parse(bad)


def test_parallel_needs_queue():
    with pytest.raises(VariantError):
        Variant(0, True)


def test_capacity_free():
    assert capacity_free(NodeState((0, 0)), BASIC) == 1
    assert capacity_free(NodeState((0, 0), cfg(0, (1, 1))), BASIC) == 0
    s = NodeState((0, 0), cfg(0, (1, 1)), [cfg(1, (1, 1)), cfg(2, (1, 1))])
    assert capacity_free(s, queue(5)) == 3


def test_select_intents():
    net = Network(10, BASIC)
    topo, rt = net.topology, net.routing
    assert select_intents(NodeState((0, 0)), BASIC, topo, rt) == []
    [it] = select_intents(NodeState((0, 0), cfg(0, (0, 0))), BASIC, topo, rt)
    assert it.kind is IntentKind.DELIVER
    # row 7 flows west so a rightward step detours vertically
    [it] = select_intents(NodeState((2, 7), cfg(0, (5, 3))), BASIC, topo, rt)
    assert it.kind is IntentKind.SEND and it.target == topo.target((2, 7), Axis.VERTICAL)


def test_select_ack_at_exit_sinks():
    net = Network(4, BASIC)
    ack = Packet(0, PacketKind.ACK, (0, 1), Side.WEST)
    [it] = select_intents(NodeState((0, 1), ack), BASIC, net.topology, net.routing)
    assert it.kind is IntentKind.SINK and it.receiver is Gateway.SW


def test_select_parallel_secondary():
    net = Network(4, PARALLEL)
    # (0,0): east along row 0 for (2,0), north up column 0 for (0,2)
    s = NodeState((0, 0), cfg(0, (2, 0)), [cfg(1, (0, 2))])
    its = select_intents(s, PARALLEL, net.topology, net.routing)
    assert [i.priority for i in its] == [Priority.PRIMARY, Priority.SECONDARY]
    assert its[0].target == in_ep((1, 0), Axis.HORIZONTAL)
    assert its[1].target == in_ep((0, 1), Axis.VERTICAL)
    # same output for both: no secondary
    s = NodeState((0, 0), cfg(0, (2, 0)), [cfg(1, (3, 0))])
    assert len(select_intents(s, PARALLEL, net.topology, net.routing)) == 1


def test_commit_receive():
    s = NodeState((1, 1))
    commit_receive(s, cfg(0, (2, 2)), queue(1))
    assert s.slot.id == 0
    commit_receive(s, cfg(1, (2, 2)), queue(1))
    assert [p.id for p in s.queue] == [1]
    with pytest.raises(EngineBug):
        commit_receive(s, cfg(2, (2, 2)), queue(1))
    with pytest.raises(EngineBug):
        commit_receive(NodeState((1, 1), cfg(0, (0, 0))), cfg(3, (2, 2)), BASIC)


def test_commit_send_promotes():
    s = NodeState((1, 1), cfg(0, (2, 2)), [cfg(1, (2, 2)), cfg(2, (2, 2))])
    assert commit_send(s, 0).id == 0
    assert s.slot.id == 1 and [p.id for p in s.queue] == [2]
    # secondary leaves from the queue, slot untouched
    assert commit_send(s, 2).id == 2
    assert s.slot.id == 1 and s.queue == []
    assert commit_send(s, 1).id == 1
    assert s.slot is None
    with pytest.raises(EngineBug):
        commit_send(s, 7)


def test_commit_deliver():
    s = NodeState((3, 3), cfg(5, (3, 3)))
    ack = commit_deliver(s, AckRoute((0, 1), Side.WEST), 9)
    assert ack.kind is PacketKind.ACK and ack.dest == (0, 1) and ack.ack_exit is Side.WEST
    assert ack.id == 5 and ack.created_tick == 9 and s.slot is ack
    s = NodeState((3, 3), cfg(6, (3, 3)))
    ack = commit_deliver(s, Network(4, ACKS_NE).ack, 1)
    assert (ack.dest, ack.ack_exit) == ((3, 2), Side.EAST)
    with pytest.raises(EngineBug):
        commit_deliver(NodeState((3, 3), cfg(0, (2, 2))), AckRoute((0, 1), Side.WEST), 1)
