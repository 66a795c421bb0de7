"""Manhattan grid with periphery wrap-arounds and gateway attachments.

Nodes are addressed ``(x, y)`` with ``x`` the column and ``y`` the row,
``(0, 0)`` at the south-west corner. Horizontal flow is eastward on even
rows and westward on odd rows; vertical flow is northward on even columns
and southward on odd columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Dict, List, Optional, Tuple, Union

Coord = Tuple[int, int]


class Compass(Enum):
    EAST = "E"
    WEST = "W"
    NORTH = "N"
    SOUTH = "S"


class Axis(IntEnum):
    HORIZONTAL = 0
    VERTICAL = 1


class Polarity(Enum):
    INPUT = "in"
    OUTPUT = "out"


class Gateway(Enum):
    SW = "SW"
    NE = "NE"


Owner = Union[Coord, Gateway]


@dataclass(frozen=True)
class Orientation:
    h_dir: Compass
    v_dir: Compass


@dataclass(frozen=True)
class Endpoint:
    owner: Owner
    axis: Axis
    polarity: Polarity

    def __str__(self) -> str:
        owner = self.owner.value if isinstance(self.owner, Gateway) else f"({self.owner[0]},{self.owner[1]})"
        return f"{owner}.{'h' if self.axis is Axis.HORIZONTAL else 'v'}{self.polarity.value}"


def out_ep(owner: Owner, axis: Axis) -> Endpoint:
    return Endpoint(owner, axis, Polarity.OUTPUT)


def in_ep(owner: Owner, axis: Axis) -> Endpoint:
    return Endpoint(owner, axis, Polarity.INPUT)


class TopologyError(ValueError):
    """Raised for invalid grid sizes or out-of-grid coordinates."""


def check_size(n: int) -> None:
    if not isinstance(n, int) or n < 2 or n % 2:
        raise TopologyError(f"n must be even and >= 2, got {n!r}")


def check_coord(c: Coord, n: int) -> None:
    x, y = c
    if not (0 <= x < n and 0 <= y < n):
        raise TopologyError(f"coordinate {c} outside {n}x{n} grid")


def orientation(c: Coord, n: Optional[int] = None) -> Orientation:
    """Flow directions of the controller at ``c``.

    When ``n`` is given the coordinate is bounds-checked against the grid.
    """
    x, y = c
    if n is not None:
        check_coord(c, n)
    elif x < 0 or y < 0:
        raise TopologyError(f"coordinate {c} outside grid")
    return Orientation(
        Compass.EAST if y % 2 == 0 else Compass.WEST,
        Compass.NORTH if x % 2 == 0 else Compass.SOUTH,
    )


LinkTable = Dict[Endpoint, Endpoint]


def gateway_attachments(n: int, acks: Gateway = Gateway.SW) -> List[Tuple[Gateway, Endpoint, Endpoint]]:
    """``(gateway, source endpoint, sink endpoint)`` for every attached gateway.

    The source is the gateway's own output endpoint; the sink is its input.
    """
    check_size(n)
    out = [(Gateway.SW, out_ep(Gateway.SW, Axis.HORIZONTAL), in_ep(Gateway.SW, Axis.HORIZONTAL))]
    if acks is Gateway.NE:
        out.append((Gateway.NE, out_ep(Gateway.NE, Axis.HORIZONTAL), in_ep(Gateway.NE, Axis.HORIZONTAL)))
    return out


def build_links(n: int, acks: Gateway = Gateway.SW) -> LinkTable:
    """Map every output endpoint (nodes and gateway sources) to the input it feeds."""
    check_size(n)
    H, V = Axis.HORIZONTAL, Axis.VERTICAL
    links: LinkTable = {}

    def link(src: Owner, src_axis: Axis, dst: Owner, dst_axis: Axis) -> None:
        links[out_ep(src, src_axis)] = in_ep(dst, dst_axis)

    for y in range(n):
        for x in range(n):
            o = orientation((x, y))
            # horizontal output
            if o.h_dir is Compass.EAST and x < n - 1:
                link((x, y), H, (x + 1, y), H)
            elif o.h_dir is Compass.WEST and x > 0:
                link((x, y), H, (x - 1, y), H)
            elif o.h_dir is Compass.WEST:
                # left edge, odd row y
                if y == 1:
                    link((0, 1), H, Gateway.SW, H)
                else:
                    link((0, y), H, (0, y - 1), H)
            else:
                # right edge, even row y
                if y == n - 2 and acks is Gateway.NE:
                    link((x, y), H, Gateway.NE, H)
                else:
                    link((x, y), H, (x, y + 1), H)
            # vertical output
            if o.v_dir is Compass.NORTH and y < n - 1:
                link((x, y), V, (x, y + 1), V)
            elif o.v_dir is Compass.SOUTH and y > 0:
                link((x, y), V, (x, y - 1), V)
            elif o.v_dir is Compass.NORTH:
                link((x, y), V, (x + 1, y), V)
            else:
                link((x, y), V, (x - 1, y), V)

    link(Gateway.SW, H, (0, 0), H)
    if acks is Gateway.NE:
        link(Gateway.NE, H, (n - 1, n - 1), H)
    return links


class Topology:
    """Immutable grid model with index-based lookup tables for the engine."""

    def __init__(self, n: int, acks: Gateway = Gateway.SW):
        check_size(n)
        self.n = n
        self.acks = acks
        self.links: LinkTable = build_links(n, acks)
        self.gateways = gateway_attachments(n, acks)
        # (x, y) -> (target for horizontal output, target for vertical output)
        self._targets: Dict[Coord, Tuple[Endpoint, Endpoint]] = {
            c: (self.links[out_ep(c, Axis.HORIZONTAL)], self.links[out_ep(c, Axis.VERTICAL)])
            for c in self.coords()
        }
        self._sources: Dict[Endpoint, Endpoint] = {v: k for k, v in self.links.items()}

    def coords(self) -> List[Coord]:
        return [(x, y) for y in range(self.n) for x in range(self.n)]

    def target(self, c: Coord, axis: Axis) -> Endpoint:
        """Input endpoint fed by the ``axis`` output of node ``c``."""
        return self._targets[c][axis]

    def source(self, inp: Endpoint) -> Endpoint:
        """Output endpoint feeding ``inp``."""
        return self._sources[inp]

    def orientation(self, c: Coord) -> Orientation:
        return orientation(c, self.n)

    def graph(self):
        """Directed node graph (gateways included as nodes) induced by the links."""
        import networkx as nx

        g = nx.DiGraph()
        for src, dst in self.links.items():
            g.add_edge(src.owner, dst.owner)
        return g
