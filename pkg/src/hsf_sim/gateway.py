"""Configuration-sequence generation, injection into (0, 0) and ack sinking."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, List, Optional

from .errors import RoutingViolation
from .node import Intent, IntentKind, Packet, PacketKind, ack_gateway
from .topology import Axis, Coord, Gateway, check_size, in_ep


class Ordering(Enum):
    SW_NE_X = "sw-ne-x"
    SW_NE_Y = "sw-ne-y"
    NE_SW_X = "ne-sw-x"
    NE_SW_Y = "ne-sw-y"
    ALTERNATING = "alternating"

    @classmethod
    def parse(cls, text: str) -> "Ordering":
        key = text.strip().lower().replace("_", "-")
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown ordering {text!r}") from None

    @property
    def label(self) -> str:
        return _LABELS[self]


_ALIASES = {"ne<->sw": "alternating", "ne-sw": "alternating", "sw-ne": "alternating"}
_LABELS = {
    Ordering.SW_NE_X: "SW->NE(x)",
    Ordering.SW_NE_Y: "SW->NE(y)",
    Ordering.NE_SW_X: "NE->SW(x)",
    Ordering.NE_SW_Y: "NE->SW(y)",
    Ordering.ALTERNATING: "NE<->SW",
}


def generate_sequence(n: int, ordering: Ordering) -> List[Coord]:
    check_size(n)
    rng = range(n)
    if ordering is Ordering.SW_NE_X:
        return [(x, y) for y in rng for x in rng]
    if ordering is Ordering.SW_NE_Y:
        return [(x, y) for x in rng for y in rng]
    if ordering is Ordering.NE_SW_X:
        return [(x, y) for y in reversed(rng) for x in reversed(rng)]
    if ordering is Ordering.NE_SW_Y:
        return [(x, y) for x in reversed(rng) for y in reversed(rng)]
    # interleave the two row-major streams, skipping coordinates already sent
    streams = [iter(generate_sequence(n, Ordering.SW_NE_X)), iter(generate_sequence(n, Ordering.NE_SW_X))]
    seen = set()
    out: List[Coord] = []
    turn = 0
    while len(out) < n * n:
        for c in streams[turn]:
            if c not in seen:
                seen.add(c)
                out.append(c)
                break
        turn ^= 1
    return out


@dataclass
class GatewayState:
    gateway: Gateway
    pending: Deque[Coord] = field(default_factory=deque)
    injected: int = 0
    acks_received: int = 0
    last_ack_tick: Optional[int] = None


def injection_intent(g: GatewayState, tick: int) -> Optional[Intent]:
    """Intent to place the next configuration into the gateway-fed input of (0, 0)."""
    if not g.pending or g.gateway is not Gateway.SW:
        return None
    p = Packet(g.injected, PacketKind.CONFIG, g.pending[0], None, tick)
    return Intent(g.gateway, p, IntentKind.SEND, in_ep((0, 0), Axis.HORIZONTAL))


def commit_injection(g: GatewayState) -> Coord:
    g.injected += 1
    return g.pending.popleft()


def sink_ack(g: GatewayState, p: Packet, tick: int) -> None:
    if p.kind is not PacketKind.ACK:
        raise RoutingViolation(f"configuration packet {p.id} for {p.dest} reached gateway {g.gateway.value}")
    if ack_gateway(p) is not g.gateway:
        raise RoutingViolation(f"ack {p.id} addressed to {ack_gateway(p).value} arrived at {g.gateway.value}")
    g.acks_received += 1
    g.last_ack_tick = tick
