"""``hsf-sim`` command line: run, estimate, sweep and check."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .config import ConfigError, ExperimentConfig, parse_config
from .engine import Network, RunResult, run, wait_for_graph
from .errors import InvariantBreach
from .explorer import Bounds, VerdictKind, explore, replay
from .export import ExportError, write_dot, write_trace
from .gateway import Ordering
from .node import ACKS_NE, BASIC, PARALLEL, Variant, VariantError, queue
from .stats import EstimateRow, run_experiment, to_csv

log = logging.getLogger("hsf_sim")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_BREACH = 3
EXIT_BOUND = 4

SWEEP_VARIANTS = (BASIC, queue(1), PARALLEL, ACKS_NE)


def load_config(args) -> ExperimentConfig:
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror or exc}") from None
    cfg = parse_config(text)
    over = {}
    for key in ("n", "horizon", "seed", "runs"):
        v = getattr(args, key, None)
        if v is not None:
            over[key] = v
    if getattr(args, "variant", None):
        over["variant"] = _variant(args.variant)
    if getattr(args, "ordering", None):
        over["ordering"] = _ordering(args.ordering)
    if getattr(args, "trace", None):
        over["trace"] = True
    return cfg.with_(**over)


def _variant(text: str) -> Variant:
    try:
        return Variant.parse(text)
    except VariantError as exc:
        raise ConfigError(str(exc)) from None


def _ordering(text: str) -> Ordering:
    try:
        return Ordering.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _print_run(cfg: ExperimentConfig, r: RunResult, out) -> None:
    status = f"deadlock at tick {r.deadlock_tick}" if r.deadlocked else ("complete" if r.acks == cfg.n ** 2 else "horizon")
    print(f"{cfg.variant.name} {cfg.ordering.label} n={cfg.n} seed={r.seed}: acks={r.acks} time={r.time} {status}", file=out)


def _export(args, cfg: ExperimentConfig, r: RunResult, out) -> None:
    if args.trace:
        write_trace(args.trace, r.events)
    if r.deadlocked or args.dot:
        g, cycles = wait_for_graph(r.world, Network.for_config(cfg))
        for cy in cycles:
            print("cycle: " + " -> ".join(f"({x},{y})" for x, y in cy), file=out)
        if args.dot:
            write_dot(args.dot, g, cycles, cfg.n)


def cmd_run(args, out=None) -> int:
    out = out or sys.stdout
    cfg = load_config(args)
    r = run(cfg, cfg.seed, trace=bool(args.trace), check=True, keep_world=True)
    _print_run(cfg, r, out)
    _export(args, cfg, r, out)
    return EXIT_OK


def format_rows(rows: Sequence[EstimateRow]) -> str:
    head = f"{'':1} {'ordering':<12} {'variant':<16} {'runs':>5} {'acks':>18} {'time':>18} {'deadlock':>9}"
    lines = [head]
    for r in rows:
        mark = "*" if r.deadlocks else " "
        acks = f"{r.mean_acks:.2f} ± {r.hw_acks:.2f}"
        time = f"{r.mean_time:.2f} ± {r.hw_time:.2f}"
        lines.append(
            f"{mark} {Ordering(r.ordering).label:<12} {r.variant:<16} {r.runs:>5} {acks:>18} {time:>18} {r.deadlock_fraction:>9.4f}"
        )
    lines.append("* deadlock observed (deadlock_fraction > 0); ± is a 95% normal-approximation interval")
    return "\n".join(lines) + "\n"


def _write_csv(path, rows) -> None:
    try:
        Path(path).write_text(to_csv(rows), encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_estimate(args, out=None) -> int:
    out = out or sys.stdout
    cfg = load_config(args)
    row = run_experiment(cfg, cfg.runs, cfg.seed)
    out.write(format_rows([row]))
    if args.csv:
        _write_csv(args.csv, [row])
    return EXIT_OK


def sweep_configs(base: ExperimentConfig, variants=None, orderings=None) -> List[ExperimentConfig]:
    variants = variants or SWEEP_VARIANTS
    orderings = orderings or list(Ordering)
    return [base.with_(variant=v, ordering=o) for o in orderings for v in variants]


def cmd_sweep(args, out=None) -> int:
    out = out or sys.stdout
    base = load_config(args)
    variants = [_variant(v) for v in args.variants.split(",")] if args.variants else None
    orderings = [_ordering(o) for o in args.orderings.split(",")] if args.orderings else None
    rows = []
    failed = 0
    for cfg in sweep_configs(base, variants, orderings):
        try:
            rows.append(run_experiment(cfg, cfg.runs, cfg.seed))
        except InvariantBreach as exc:
            failed += 1
            print(f"cell {cfg.variant.name} {cfg.ordering.label} failed: {exc}", file=sys.stderr)
    out.write(format_rows(rows))
    if args.csv:
        _write_csv(args.csv, rows)
    return EXIT_BREACH if failed else EXIT_OK


def cmd_check(args, out=None) -> int:
    out = out or sys.stdout
    cfg = load_config(args)
    bounds = Bounds(
        max_states=args.max_states,
        max_depth=args.max_depth,
        sequence_prefix=args.prefix,
    )
    v = explore(cfg, bounds)
    print(v, file=out)
    print(f"states={v.states} depth={v.depth}", file=out)
    if v.kind is VerdictKind.BOUND_EXCEEDED:
        return EXIT_BOUND
    if v.kind is VerdictKind.DEADLOCK_REACHABLE and (args.trace or args.dot):
        r = replay(cfg, v, trace=True)
        _print_run(cfg, r, out)
        _export(args, cfg, r, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hsf-sim", description="HyperSurface controller network simulator")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value experiment file")
        sp.add_argument("--seed", type=int, help="seed (base seed for estimates)")
        sp.add_argument("--n", type=int, help="grid side")
        sp.add_argument("--variant", help="basic, queue-X, parallel, acks-NE, acks-NE-queue-X")
        sp.add_argument("--ordering", help="sw-ne-x, sw-ne-y, ne-sw-x, ne-sw-y, alternating")
        sp.add_argument("--horizon", type=int)
        return sp

    r = common(sub.add_parser("run", help="one seeded run"))
    r.add_argument("--trace", help="write the event trace as JSONL")
    r.add_argument("--dot", help="write the final wait-for graph as DOT")
    r.set_defaults(func=cmd_run)

    e = common(sub.add_parser("estimate", help="Monte Carlo estimate for one configuration"))
    e.add_argument("--runs", type=int)
    e.add_argument("--csv", help="write the result row as CSV")
    e.set_defaults(func=cmd_estimate)

    s = common(sub.add_parser("sweep", help="orderings x variants table"))
    s.add_argument("--runs", type=int)
    s.add_argument("--csv", help="write all rows as CSV")
    s.add_argument("--variants", help="comma-separated variant names")
    s.add_argument("--orderings", help="comma-separated ordering names")
    s.set_defaults(func=cmd_sweep)

    c = common(sub.add_parser("check", help="exhaustive deadlock search (small n)"))
    c.add_argument("--max-states", type=int, default=Bounds.max_states)
    c.add_argument("--max-depth", type=int)
    c.add_argument("--prefix", type=int, help="inject only the first K configurations")
    c.add_argument("--trace", help="write the counterexample replay as JSONL")
    c.add_argument("--dot", help="write the deadlock wait-for graph as DOT")
    c.set_defaults(func=cmd_check)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantBreach as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
