"""Event-trace JSONL and wait-for-graph DOT files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from .engine import EventKind, Place, TraceEvent
from .node import PacketKind
from .topology import Gateway

TRACE_FIELDS = ("tick", "kind", "from", "to", "packet_id", "packet_kind", "dest")


class ExportError(Exception):
    pass


def _place(p: Optional[Place]):
    if p is None:
        return None
    if isinstance(p, Gateway):
        return p.value
    return list(p)


def _unplace(v) -> Optional[Place]:
    if v is None:
        return None
    if isinstance(v, str):
        return Gateway(v)
    return tuple(v)


def event_to_dict(e: TraceEvent) -> dict:
    return {
        "tick": e.tick,
        "kind": e.kind.value,
        "from": _place(e.src),
        "to": _place(e.dst),
        "packet_id": e.packet_id,
        "packet_kind": e.packet_kind.value if e.packet_kind else None,
        "dest": list(e.dest) if e.dest is not None else None,
    }


def event_from_dict(d: dict) -> TraceEvent:
    return TraceEvent(
        d["tick"],
        EventKind(d["kind"]),
        _unplace(d["from"]),
        _unplace(d["to"]),
        d["packet_id"],
        PacketKind(d["packet_kind"]) if d["packet_kind"] else None,
        tuple(d["dest"]) if d["dest"] is not None else None,
    )


def dumps_trace(events: Iterable[TraceEvent]) -> str:
    return "".join(json.dumps(event_to_dict(e), separators=(",", ":")) + "\n" for e in events)


def loads_trace(text: str) -> List[TraceEvent]:
    return [event_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def _write(path: Union[str, Path], text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from None


def write_trace(path: Union[str, Path], events: Optional[Sequence[TraceEvent]]) -> None:
    if events is None:
        raise ExportError("run was not traced; nothing to export")
    _write(path, dumps_trace(events))


def label(c) -> str:
    return f"({c[0]},{c[1]})"


def wait_for_dot(graph, cycles: Sequence[Sequence], n: Optional[int] = None, name: str = "waitfor") -> str:
    """DOT text with one node per controller and cycle edges highlighted."""
    on_cycle = {}
    for i, cy in enumerate(cycles):
        for a, b in zip(cy, list(cy[1:]) + [cy[0]]):
            on_cycle.setdefault((a, b), []).append(i)
    nodes = sorted(graph.nodes) if n is None else [(x, y) for y in range(n) for x in range(n)]
    lines = [f"digraph {name} {{"]
    for i, cy in enumerate(cycles):
        lines.append(f"  // cycle {i}: " + " -> ".join(label(c) for c in cy))
    for c in nodes:
        lines.append(f'  "{label(c)}" [label="{label(c)}", pos="{c[0]},{c[1]}!"];')
    for a, b in sorted(graph.edges):
        ids = on_cycle.get((a, b))
        attr = f' [color=red, label="cycle {",".join(map(str, ids))}"]' if ids else ""
        lines.append(f'  "{label(a)}" -> "{label(b)}"{attr};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(path: Union[str, Path], graph, cycles, n: Optional[int] = None) -> None:
    _write(path, wait_for_dot(graph, cycles, n))
