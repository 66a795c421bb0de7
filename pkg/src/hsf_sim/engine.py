"""Lock-step tick scheduler.

Every tick runs in three phases over the state as it stood at the start of
the tick:

1. collect: each controller proposes one action for its slot packet
   (deliver, sink an ack, or send), plus a secondary send in parallel mode;
   the SW gateway proposes an injection into (0, 0).
2. resolve: local actions always commit; sends are grouped by receiver and
   admitted up to the receiver's start-of-tick free capacity, contended
   slots going to a uniformly random subset of the contenders. Parallel
   nodes whose primary send was refused then get one fallback round.
3. commit: admitted sends leave their senders, then land at their receivers.

A tick that commits nothing while work remains is a permanent deadlock:
nothing changed, so the next tick sees the same state.

``refill`` in the config relaxes step 2 so capacity vacated by a send or
sink admitted in the same tick can be reused; it is off by default.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from .config import ExperimentConfig
from .errors import InvariantBreach
from .gateway import GatewayState, commit_injection, generate_sequence, injection_intent, sink_ack
from .node import (
    Intent,
    IntentKind,
    NodeState,
    Packet,
    PacketKind,
    Variant,
    capacity_free,
    commit_deliver,
    commit_receive,
    commit_send,
    select_intents,
)
from .routing import AckRoute, RoutingTable, ack_route
from .topology import Coord, Gateway, Topology


class EventKind(Enum):
    INJECT = "Inject"
    MOVE = "Move"
    DELIVER = "Deliver"
    ACK_CREATE = "AckCreate"
    ACK_SINK = "AckSink"
    STALL = "Stall"


Place = Union[Coord, Gateway]


class TraceEvent(NamedTuple):
    tick: int
    kind: EventKind
    src: Optional[Place] = None
    dst: Optional[Place] = None
    packet_id: Optional[int] = None
    packet_kind: Optional[PacketKind] = None
    dest: Optional[Coord] = None


class Network:
    """Immutable per-(n, variant) model shared by every run."""

    def __init__(self, n: int, variant: Variant):
        self.n = n
        self.variant = variant
        self.topology = _topology(n, variant.acks)
        self.routing = _routing(n)
        self.ack: AckRoute = ack_route(variant.acks, n)

    @classmethod
    def for_config(cls, cfg: ExperimentConfig) -> "Network":
        return _network(cfg.n, cfg.variant)


@lru_cache(maxsize=None)
def _topology(n: int, acks: Gateway) -> Topology:
    return Topology(n, acks)


@lru_cache(maxsize=None)
def _routing(n: int) -> RoutingTable:
    return RoutingTable(n)


@lru_cache(maxsize=None)
def _network(n: int, variant: Variant) -> Network:
    return Network(n, variant)


@dataclass
class World:
    n: int
    nodes: Dict[Coord, NodeState]
    gateways: Dict[Gateway, GatewayState]
    tick: int = 0
    configs_consumed: int = 0
    acks_created: int = 0

    @property
    def acks(self) -> int:
        return sum(g.acks_received for g in self.gateways.values())

    @property
    def injector(self) -> GatewayState:
        return self.gateways[Gateway.SW]

    def complete(self) -> bool:
        return self.acks == self.n * self.n

    def has_work(self) -> bool:
        return bool(self.injector.pending) or any(s.slot is not None for s in self.nodes.values())


def initial_world(cfg: ExperimentConfig, net: Optional[Network] = None) -> World:
    net = net or Network.for_config(cfg)
    nodes = {c: NodeState(c) for c in net.topology.coords()}
    gws = {g: GatewayState(g) for g, _, _ in net.topology.gateways}
    gws[Gateway.SW].pending.extend(generate_sequence(cfg.n, cfg.ordering))
    return World(cfg.n, nodes, gws)


class RandomChooser:
    """Uniform choice of ``k`` contenders, recording every decision."""

    def __init__(self, rng: random.Random, record: bool = False):
        self.rng = rng
        self.log: Optional[List[Tuple[int, ...]]] = [] if record else None

    def choose(self, receiver: Place, contenders: Sequence[Intent], k: int) -> Tuple[int, ...]:
        picked = tuple(sorted(self.rng.sample(range(len(contenders)), k)))
        if self.log is not None:
            self.log.append(picked)
        return picked


class ScriptedChooser:
    """Replays a recorded sequence of choices (index tuples or combination ranks)."""

    def __init__(self, choices: Iterable):
        self._it = iter(choices)

    def choose(self, receiver: Place, contenders: Sequence[Intent], k: int) -> Tuple[int, ...]:
        try:
            c = next(self._it)
        except StopIteration:
            raise InvariantBreach("scripted choices exhausted") from None
        if isinstance(c, int):
            return list(combinations(range(len(contenders)), k))[c]
        return tuple(c)


class _Capacity(dict):
    """Start-of-tick free capacity, computed on first use."""

    def __init__(self, nodes: Dict[Coord, NodeState], variant: Variant):
        super().__init__()
        self.nodes = nodes
        self.cap = variant.capacity

    def __missing__(self, c: Coord) -> int:
        # capacity_free, inlined: this is the hottest lookup in a run
        s = self.nodes[c]
        k = self[c] = self.cap - len(s.queue) - (s.slot is not None)
        return k


def _admit(groups: Dict[Place, List[Intent]], remaining: Dict[Coord, int], chooser) -> Tuple[List[Intent], List[Intent]]:
    admitted: List[Intent] = []
    refused: List[Intent] = []
    for recv, conts in groups.items():
        if isinstance(recv, Gateway):
            admitted.extend(conts)
            continue
        k = remaining[recv]
        if k <= 0:
            refused.extend(conts)
            continue
        if len(conts) <= k:
            picked = range(len(conts))
        else:
            picked = chooser.choose(recv, conts, k)
        chosen = set(picked)
        for i, it in enumerate(conts):
            (admitted if i in chosen else refused).append(it)
        remaining[recv] = k - len(chosen)
    return admitted, refused


def _group(intents: Iterable[Intent]) -> Dict[Place, List[Intent]]:
    groups: Dict[Place, List[Intent]] = {}
    for it in intents:
        groups.setdefault(it.target.owner, []).append(it)
    return groups


def step(
    world: World,
    net: Network,
    cfg: ExperimentConfig,
    chooser,
    events: Optional[List[TraceEvent]] = None,
) -> int:
    """Advance one tick in place; returns the number of committed actions."""
    v = net.variant
    topo, rt = net.topology, net.routing
    t = world.tick + 1

    local: List[Intent] = []
    primary: List[Intent] = []
    secondary: Dict[Coord, Intent] = {}
    for c, s in world.nodes.items():
        if s.slot is None:
            continue
        its = select_intents(s, v, topo, rt)
        first = its[0]
        if first.kind is IntentKind.SEND:
            primary.append(first)
        else:
            local.append(first)
        if len(its) > 1:
            secondary[c] = its[1]
    if (t - 1) % cfg.injection_period == 0:
        inj = injection_intent(world.injector, t)
        if inj is not None:
            primary.append(inj)

    # admission reads only start-of-tick state; nothing is committed before it
    remaining = _Capacity(world.nodes, v)
    admitted, refused = _admit(_group(primary), remaining, chooser)
    if cfg.refill:
        # capacity vacated this tick is reusable; growing it from below never
        # frees a cycle of full nodes
        vacated = set()
        sinks = {it.sender for it in local if it.kind is IntentKind.SINK}
        while True:
            new = (sinks | {it.sender for it in admitted if not isinstance(it.sender, Gateway)}) - vacated
            if not new:
                break
            vacated |= new
            for c in new:
                remaining[c] += 1
            retry = [it for it in refused if it.target.owner in new]
            if retry:
                refused = [it for it in refused if it.target.owner not in new]
                more, still = _admit(_group(retry), remaining, chooser)
                admitted.extend(more)
                refused.extend(still)
    if secondary:
        if cfg.parallel_sends == 2:
            fallback = list(secondary.values())
        else:
            fallback = [secondary[it.sender] for it in refused if it.sender in secondary]
        if fallback:
            extra, _ = _admit(_group(fallback), remaining, chooser)
            admitted.extend(extra)

    actions = 0
    for it in local:
        s = world.nodes[it.sender]
        p = it.packet
        if it.kind is IntentKind.DELIVER:
            commit_deliver(s, net.ack, t)
            world.configs_consumed += 1
            world.acks_created += 1
            if events is not None:
                events.append(TraceEvent(t, EventKind.DELIVER, it.sender, it.sender, p.id, PacketKind.CONFIG, p.dest))
                events.append(TraceEvent(t, EventKind.ACK_CREATE, it.sender, it.sender, p.id, PacketKind.ACK, net.ack.dest))
        else:
            commit_send(s, p.id)
            gw = it.target.owner
            sink_ack(world.gateways[gw], p, t)
            if events is not None:
                events.append(TraceEvent(t, EventKind.ACK_SINK, it.sender, gw, p.id, p.kind, p.dest))
        actions += 1

    moved: List[Tuple[Intent, Packet]] = []
    for it in admitted:
        if isinstance(it.sender, Gateway):
            commit_injection(world.gateways[it.sender])
            p = it.packet
        else:
            p = commit_send(world.nodes[it.sender], it.packet.id)
        moved.append((it, p))
    for it, p in moved:
        recv = it.target.owner
        if isinstance(recv, Gateway):
            sink_ack(world.gateways[recv], p, t)
            kind = EventKind.ACK_SINK
        else:
            commit_receive(world.nodes[recv], p, v)
            kind = EventKind.INJECT if isinstance(it.sender, Gateway) else EventKind.MOVE
        if events is not None:
            events.append(TraceEvent(t, kind, it.sender, recv, p.id, p.kind, p.dest))
    actions += len(moved)

    world.tick = t
    if actions == 0 and events is not None and world.has_work():
        events.append(TraceEvent(t, EventKind.STALL))
    return actions


def detect_deadlock(events: Sequence[TraceEvent]) -> bool:
    """True when the trace ends in a tick that committed nothing with work left."""
    return bool(events) and events[-1].kind is EventKind.STALL


def check_invariants(world: World, variant: Variant) -> None:
    cap = variant.capacity
    configs = acks = 0
    for c, s in world.nodes.items():
        if s.slot is None:
            if s.queue:
                raise InvariantBreach(f"tick {world.tick}: node {c} has a queue but an empty slot")
            continue
        if len(s.queue) + 1 > cap:
            raise InvariantBreach(f"tick {world.tick}: node {c} holds {s.held} > {cap}")
        for p in s.packets():
            if p.kind is PacketKind.CONFIG:
                configs += 1
            else:
                acks += 1
    inj = world.injector
    if inj.injected + len(inj.pending) != world.n * world.n:
        raise InvariantBreach(f"tick {world.tick}: injected + pending != n^2")
    if inj.injected != configs + world.configs_consumed:
        raise InvariantBreach(
            f"tick {world.tick}: {inj.injected} injected != {configs} in flight + {world.configs_consumed} consumed"
        )
    if world.acks_created != acks + world.acks:
        raise InvariantBreach(f"tick {world.tick}: {world.acks_created} acks created != {acks} in flight + {world.acks} sunk")
    if world.acks > inj.injected:
        raise InvariantBreach(f"tick {world.tick}: more acks than injected configurations")


@dataclass
class RunResult:
    acks: int
    time: int
    deadlocked: bool
    deadlock_tick: Optional[int]
    seed: Optional[int]
    events: Optional[List[TraceEvent]] = None
    choices: Optional[List[Tuple[int, ...]]] = None
    world: Optional[World] = field(default=None, compare=False, repr=False)


def run(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    *,
    chooser=None,
    trace: Optional[bool] = None,
    check: bool = False,
    debug_stall: int = 0,
    keep_world: bool = False,
) -> RunResult:
    """Simulate one trace until completion, deadlock, or the horizon.

    ``check`` verifies conservation and capacity after every tick;
    ``debug_stall`` keeps ticking that many times past a detected deadlock
    and fails if anything moves.
    """
    seed = cfg.seed if seed is None else seed
    trace = cfg.trace if trace is None else trace
    net = Network.for_config(cfg)
    world = initial_world(cfg, net)
    if chooser is None:
        chooser = RandomChooser(random.Random(seed), record=trace)
    events: Optional[List[TraceEvent]] = [] if trace else None
    deadlock_tick = None
    while world.tick < cfg.horizon:
        actions = step(world, net, cfg, chooser, events)
        if check:
            check_invariants(world, net.variant)
        if world.complete():
            break
        if actions == 0:
            deadlock_tick = world.tick
            break
    if deadlock_tick is not None and debug_stall:
        for _ in range(debug_stall):
            if step(world, net, cfg, chooser, None):
                raise InvariantBreach(f"activity after deadlock at tick {deadlock_tick}")
        world.tick = deadlock_tick
    complete = world.complete()
    return RunResult(
        acks=world.acks,
        time=world.tick if complete else cfg.horizon,
        deadlocked=deadlock_tick is not None,
        deadlock_tick=deadlock_tick,
        seed=seed,
        events=events,
        choices=getattr(chooser, "log", None),
        world=world if keep_world else None,
    )


def wait_for_graph(world: World, net: Network, max_cycle: int = 8):
    """Wait-for graph over controllers and its elementary cycles.

    ``u -> v`` when ``u`` wants to send a packet to ``v`` and ``v`` has no
    free capacity.
    """
    import networkx as nx

    g = nx.DiGraph()
    v = net.variant
    for c, s in world.nodes.items():
        for it in select_intents(s, v, net.topology, net.routing):
            if it.kind is not IntentKind.SEND:
                continue
            recv = it.target.owner
            if isinstance(recv, Gateway):
                continue
            if capacity_free(world.nodes[recv], v) == 0:
                g.add_edge(c, recv)
    cycles = [list(cy) for cy in nx.simple_cycles(g, length_bound=max_cycle)]
    cycles.sort(key=lambda cy: (len(cy), sorted(cy)))
    return g, cycles
