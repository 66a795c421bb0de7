"""XY routing variant for the Manhattan grid.

``route_decision`` is the logical XY step; ``map_to_output`` turns a
logical direction into one of the two physical outputs a controller has,
detouring onto the other axis when the requested direction runs against
the local flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

from .topology import Axis, Compass, Coord, Gateway, Orientation


class Action(Enum):
    DELIVER = "deliver"
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"


_COMPASS = {
    Action.UP: Compass.NORTH,
    Action.DOWN: Compass.SOUTH,
    Action.LEFT: Compass.WEST,
    Action.RIGHT: Compass.EAST,
}


class Side(Enum):
    WEST = "W"
    EAST = "E"


@dataclass(frozen=True)
class AckRoute:
    dest: Coord
    exit: Side


def route_decision(cur: Coord, dest: Coord) -> Action:
    x, y = cur
    a, b = dest
    if x == a:
        if y == b:
            return Action.DELIVER
        return Action.UP if y < b else Action.DOWN
    if x < a - 1:
        return Action.RIGHT
    if x == a - 1:
        if x % 2 == 0 and y < b:
            return Action.UP
        return Action.RIGHT
    # x > a
    if y < b:
        return Action.UP
    return Action.LEFT


def map_to_output(o: Orientation, act: Action) -> Axis:
    if act is Action.DELIVER:
        raise ValueError("DELIVER has no output channel")
    want = _COMPASS[act]
    if want is o.h_dir:
        return Axis.HORIZONTAL
    if want is o.v_dir:
        return Axis.VERTICAL
    # against the flow: take the other axis
    if act in (Action.LEFT, Action.RIGHT):
        return Axis.VERTICAL
    return Axis.HORIZONTAL


def ack_route(acks: Gateway, n: int) -> AckRoute:
    if acks is Gateway.SW:
        return AckRoute((0, 1), Side.WEST)
    return AckRoute((n - 1, n - 2), Side.EAST)


def exit_gateway(side: Side) -> Gateway:
    return Gateway.SW if side is Side.WEST else Gateway.NE


class RoutingTable:
    """Precomputed ``(cur, dest) -> output axis`` lookups for one grid size.

    ``None`` marks the deliver case. Both functions above are pure, so the
    table is just a cache.
    """

    def __init__(self, n: int):
        from .topology import orientation

        self.n = n
        self._table: Dict[Tuple[Coord, Coord], Optional[Axis]] = {}
        for cy in range(n):
            for cx in range(n):
                o = orientation((cx, cy))
                for dy in range(n):
                    for dx in range(n):
                        act = route_decision((cx, cy), (dx, dy))
                        self._table[(cx, cy), (dx, dy)] = (
                            None if act is Action.DELIVER else map_to_output(o, act)
                        )

    def output(self, cur: Coord, dest: Coord) -> Optional[Axis]:
        return self._table[cur, dest]
