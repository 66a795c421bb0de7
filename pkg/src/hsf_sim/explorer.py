"""Exhaustive breadth-first search over contention resolutions.

The successor relation is the engine's own ``step``: from a state, every
combination of contention choices the tick can make is enumerated, so a
counterexample found here replays unchanged through ``engine.run``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from .config import ExperimentConfig
from .engine import Network, ScriptedChooser, World, initial_world, run, step
from .node import NodeState, Packet, PacketKind

log = logging.getLogger(__name__)

_ACK = 255

# (node contents..., injected, acks, tick phase) packed into bytes
CanonicalState = bytes
Choices = Tuple[int, ...]


def canonical(world: World, cfg: ExperimentConfig) -> CanonicalState:
    n = world.n
    out = bytearray()
    for y in range(n):
        for x in range(n):
            s = world.nodes[(x, y)]
            held = s.packets()
            out.append(len(held))
            for p in held:
                out.append(_ACK if p.kind is PacketKind.ACK else p.dest[1] * n + p.dest[0])
    out.extend(world.injector.injected.to_bytes(2, "little"))
    out.extend(world.acks.to_bytes(2, "little"))
    out.append(world.tick % cfg.injection_period)
    return bytes(out)


def _start(cfg: ExperimentConfig, net: Network, total: Optional[int]) -> World:
    world = initial_world(cfg, net)
    if total is not None:
        pending = world.injector.pending
        while len(pending) > total:
            pending.pop()
    return world


def rebuild(state: CanonicalState, cfg: ExperimentConfig, net: Network, total: Optional[int] = None) -> World:
    """A ``World`` equivalent to ``state``; packet ids are synthetic negatives.

    ``total`` truncates the configuration sequence to its first entries.
    """
    world = _start(cfg, net, total)
    n = cfg.n
    pos = 0
    pid = -1
    acks_held = 0
    for y in range(n):
        for x in range(n):
            count = state[pos]
            pos += 1
            held = []
            for code in state[pos:pos + count]:
                if code == _ACK:
                    held.append(Packet(pid, PacketKind.ACK, net.ack.dest, net.ack.exit))
                    acks_held += 1
                else:
                    held.append(Packet(pid, PacketKind.CONFIG, (code % n, code // n)))
                pid -= 1
            pos += count
            world.nodes[(x, y)] = NodeState((x, y), held[0] if held else None, held[1:])
    injected = int.from_bytes(state[pos:pos + 2], "little")
    acks = int.from_bytes(state[pos + 2:pos + 4], "little")
    phase = state[pos + 4]
    inj = world.injector
    for _ in range(injected):
        inj.pending.popleft()
    inj.injected = injected
    # attribute every sunk ack to the variant's ack gateway
    world.gateways[net.variant.acks].acks_received = acks
    world.acks_created = acks + acks_held
    world.configs_consumed = world.acks_created
    world.tick = phase
    return world


class _EnumChooser:
    """Takes the choice given by ``prefix`` (then the first option) and records arity."""

    def __init__(self, prefix: Sequence[int]):
        self.prefix = prefix
        self.taken: List[int] = []
        self.sizes: List[int] = []

    def choose(self, receiver, contenders, k):
        options = list(combinations(range(len(contenders)), k))
        i = len(self.taken)
        pick = self.prefix[i] if i < len(self.prefix) else 0
        self.taken.append(pick)
        self.sizes.append(len(options))
        return options[pick]


def successors(
    state: CanonicalState,
    cfg: ExperimentConfig,
    net: Optional[Network] = None,
    total: Optional[int] = None,
) -> Dict[CanonicalState, Choices]:
    """Every state one tick away, each with one choice sequence reaching it.

    A state whose tick commits nothing has no successors.
    """
    net = net or Network.for_config(cfg)
    out: Dict[CanonicalState, Choices] = {}
    prefix: List[int] = []
    while True:
        world = rebuild(state, cfg, net, total)
        ch = _EnumChooser(prefix)
        if step(world, net, cfg, ch) == 0:
            return {}
        out.setdefault(canonical(world, cfg), tuple(ch.taken))
        # odometer over the recorded choice points
        i = len(ch.taken) - 1
        while i >= 0 and ch.taken[i] + 1 >= ch.sizes[i]:
            i -= 1
        if i < 0:
            return out
        prefix = ch.taken[:i] + [ch.taken[i] + 1]


class VerdictKind(Enum):
    DEADLOCK_FREE = "DeadlockFree"
    DEADLOCK_REACHABLE = "DeadlockReachable"
    BOUND_EXCEEDED = "BoundExceeded"


@dataclass
class Verdict:
    kind: VerdictKind
    states: int
    depth: int
    trace: Optional[List[Choices]] = None
    deadlock_state: Optional[World] = field(default=None, repr=False)

    def __str__(self) -> str:
        return self.kind.value

    @property
    def choices(self) -> List[int]:
        """The trace flattened into the order ``ScriptedChooser`` consumes."""
        return [c for tick in self.trace or [] for c in tick]


@dataclass(frozen=True)
class Bounds:
    max_states: int = 50_000_000
    max_depth: Optional[int] = None
    # number of sequence entries the gateway injects; None means all n^2
    sequence_prefix: Optional[int] = None


def initial_state(cfg: ExperimentConfig, total: Optional[int] = None) -> CanonicalState:
    return canonical(_start(cfg, Network.for_config(cfg), total), cfg)


def explore(cfg: ExperimentConfig, bounds: Bounds = Bounds()) -> Verdict:
    """BFS from the initial state until a deadlock, exhaustion, or a bound.

    The first deadlock found is at minimal depth, so its trace is shortest.
    """
    net = Network.for_config(cfg)
    total = cfg.n * cfg.n if bounds.sequence_prefix is None else min(bounds.sequence_prefix, cfg.n * cfg.n)
    root = initial_state(cfg, total)
    parent: Dict[CanonicalState, Tuple[Optional[CanonicalState], Choices]] = {root: (None, ())}
    frontier = [root]
    depth = 0
    while frontier:
        if bounds.max_depth is not None and depth >= bounds.max_depth:
            return Verdict(VerdictKind.BOUND_EXCEEDED, len(parent), depth)
        nxt = []
        for s in frontier:
            if _acks(s) == total:
                continue
            succ = successors(s, cfg, net, total)
            if not succ:
                log.info("deadlock at depth %d after %d states", depth, len(parent))
                return Verdict(
                    VerdictKind.DEADLOCK_REACHABLE, len(parent), depth, _trace(parent, s), rebuild(s, cfg, net, total)
                )
            for t, ch in succ.items():
                if t not in parent:
                    parent[t] = (s, ch)
                    nxt.append(t)
            if len(parent) > bounds.max_states:
                return Verdict(VerdictKind.BOUND_EXCEEDED, len(parent), depth)
        frontier = nxt
        depth += 1
        log.debug("depth %d: %d states, frontier %d", depth, len(parent), len(frontier))
    return Verdict(VerdictKind.DEADLOCK_FREE, len(parent), depth)


def _acks(state: CanonicalState) -> int:
    return int.from_bytes(state[-3:-1], "little")


def _trace(parent, s) -> List[Choices]:
    out = []
    while True:
        prev, ch = parent[s]
        if prev is None:
            break
        out.append(ch)
        s = prev
    out.reverse()
    return out


def replay(cfg: ExperimentConfig, verdict: Verdict, trace: bool = True):
    """Run the counterexample through the simulator."""
    return run(cfg, chooser=ScriptedChooser(verdict.choices), trace=trace, keep_world=True)
