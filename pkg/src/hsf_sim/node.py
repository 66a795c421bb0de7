"""Intra-tile controller state machine.

A controller holds at most ``1 + queue_size`` packets: one in its
processing slot and the rest in a FIFO receive queue that backfills the
slot whenever it frees up.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Union

from .errors import EngineBug
from .routing import AckRoute, RoutingTable, Side, exit_gateway
from .topology import Axis, Coord, Endpoint, Gateway, Topology


class VariantError(ValueError):
    pass


@dataclass(frozen=True)
class Variant:
    queue_size: int = 0
    parallel: bool = False
    acks: Gateway = Gateway.SW

    def __post_init__(self):
        if self.queue_size < 0:
            raise VariantError("queue size must be non-negative")
        if self.parallel and self.queue_size < 1:
            raise VariantError("parallel mode needs a queue to hold a second packet")

    @property
    def capacity(self) -> int:
        return 1 + self.queue_size

    @property
    def name(self) -> str:
        parts = []
        if self.acks is Gateway.NE:
            parts.append("acks-NE")
        if self.parallel:
            parts.append("parallel" if self.queue_size == 1 else f"parallel-queue-{self.queue_size}")
        elif self.queue_size:
            parts.append(f"queue-{self.queue_size}")
        return "-".join(parts) or "basic"

    @classmethod
    def parse(cls, name: str) -> "Variant":
        m = _VARIANT_RE.fullmatch(name.strip().lower())
        if not m or not name.strip():
            raise VariantError(f"unknown variant {name!r}")
        acks = Gateway.NE if m.group("ne") else Gateway.SW
        body = m.group("body")
        if body in (None, "basic"):
            if body == "basic" and m.group("ne"):
                raise VariantError(f"unknown variant {name!r}")
            return cls(0, False, acks)
        if body == "parallel":
            return cls(1, True, acks)
        q = int(m.group("q"))
        return cls(q, body.startswith("parallel"), acks)

    def __str__(self) -> str:
        return self.name


_VARIANT_RE = re.compile(
    r"(?:(?P<ne>acks-ne)(?:-|$))?(?P<body>basic|parallel|(?:parallel-)?queue-(?P<q>\d+))?"
)

BASIC = Variant(0, False, Gateway.SW)
PARALLEL = Variant(1, True, Gateway.SW)
ACKS_NE = Variant(0, False, Gateway.NE)
ACKS_NE_QUEUE_1 = Variant(1, False, Gateway.NE)


def queue(x: int) -> Variant:
    return Variant(x, False, Gateway.SW)


class PacketKind(Enum):
    CONFIG = "config"
    ACK = "ack"


@dataclass(slots=True)
class Packet:
    id: int
    kind: PacketKind
    dest: Coord
    ack_exit: Optional[Side] = None
    created_tick: int = 0

    @property
    def is_ack(self) -> bool:
        return self.kind is PacketKind.ACK


@dataclass(slots=True)
class NodeState:
    coord: Coord
    slot: Optional[Packet] = None
    queue: List[Packet] = field(default_factory=list)

    @property
    def held(self) -> int:
        return len(self.queue) + (self.slot is not None)

    def packets(self) -> List[Packet]:
        return ([self.slot] if self.slot is not None else []) + self.queue


class IntentKind(Enum):
    SEND = "send"
    DELIVER = "deliver"
    SINK = "sink"


class Priority(Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"


@dataclass(slots=True)
class Intent:
    sender: Union[Coord, Gateway]
    packet: Packet
    kind: IntentKind = IntentKind.SEND
    target: Optional[Endpoint] = None
    priority: Priority = Priority.PRIMARY

    @property
    def receiver(self):
        return None if self.target is None else self.target.owner


def capacity_free(s: NodeState, v: Variant) -> int:
    return v.capacity - s.held


def select_intents(s: NodeState, v: Variant, topo: Topology, routing: RoutingTable) -> List[Intent]:
    p = s.slot
    if p is None:
        return []
    axis = routing.output(s.coord, p.dest)
    if axis is None:
        if p.kind is PacketKind.CONFIG:
            return [Intent(s.coord, p, IntentKind.DELIVER)]
        # ack at its exit node leaves on the horizontal output into the gateway
        return [Intent(s.coord, p, IntentKind.SINK, topo.target(s.coord, Axis.HORIZONTAL))]
    out = [Intent(s.coord, p, IntentKind.SEND, topo.target(s.coord, axis))]
    if v.parallel:
        for q in s.queue:
            qa = routing.output(s.coord, q.dest)
            if qa is not None and qa != axis:
                out.append(Intent(s.coord, q, IntentKind.SEND, topo.target(s.coord, qa), Priority.SECONDARY))
                break
    return out


def commit_receive(s: NodeState, p: Packet, v: Variant) -> None:
    if capacity_free(s, v) < 1:
        raise EngineBug(f"over-capacity receive at {s.coord}")
    if s.slot is None:
        s.slot = p
    else:
        s.queue.append(p)


def commit_send(s: NodeState, packet_id: int) -> Packet:
    if s.slot is not None and s.slot.id == packet_id:
        p = s.slot
        s.slot = s.queue.pop(0) if s.queue else None
        return p
    for i, q in enumerate(s.queue):
        if q.id == packet_id:
            return s.queue.pop(i)
    raise EngineBug(f"node {s.coord} does not hold packet {packet_id}")


def commit_deliver(s: NodeState, route: AckRoute, tick: int) -> Packet:
    """Consume the configuration in the slot and put its acknowledgement there."""
    p = s.slot
    if p is None or p.kind is not PacketKind.CONFIG or p.dest != s.coord:
        raise EngineBug(f"deliver at {s.coord} without a configuration addressed to it")
    ack = Packet(p.id, PacketKind.ACK, route.dest, route.exit, tick)
    s.slot = ack
    return ack


def ack_gateway(p: Packet) -> Gateway:
    return exit_gateway(p.ack_exit)
