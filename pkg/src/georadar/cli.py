"""Command line entry point.

    radar run    replay a stream through the detector
    radar bench  per-shift incremental vs from-scratch timing and parity
    radar query  search stored events
    radar save   replay a stream, then persist full engine state
    radar load   restore persisted state; optionally continue or serve

Configuration comes from defaults, overridden by --config (JSON) or the
RADAR_CONFIG environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .classifier import LogRegModel
from .config import EngineConfig
from .engine import DetectionEngine, ShiftResult
from .events import EventQuery, EventStore, query_events
from .persist import read_state_file, write_state_file


def _load_model(path: str | None) -> LogRegModel | None:
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return LogRegModel.from_payload(json.load(fh))


def _shift_line(r: ShiftResult) -> str:
    return (
        f"shift {r.tick:4d} end={r.window_end} window={r.window_size:5d} "
        f"+{r.inserted}/-{r.removed} candidates={r.candidates} "
        f"events={r.events} {r.total_seconds:.3f}s"
    )


def _add_query_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--from", dest="t_from", type=int, default=None)
    p.add_argument("--to", dest="t_to", type=int, default=None)
    p.add_argument("--keyword", default=None)
    p.add_argument("--lat", type=float, default=None)
    p.add_argument("--lon", type=float, default=None)
    p.add_argument("--radius-m", type=float, default=None)
    p.add_argument("--limit", type=int, default=None)


def _serve(engine: DetectionEngine, host: str, port: int, static_dir: str | None) -> None:
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(engine, static_dir=static_dir), host=host, port=port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radar")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay a stream through the detector")
    run.add_argument("--stream", required=True)
    run.add_argument("--config", default=None)
    run.add_argument("--model", default=None)
    run.add_argument("--shifts", type=int, default=None)
    run.add_argument("--save-state", default=None)
    run.add_argument("--events-out", default=None)
    run.add_argument("--serve", action="store_true")
    run.add_argument("--host", default="127.0.0.1")
    run.add_argument("--port", type=int, default=8000)
    run.add_argument("--static-dir", default=None)
    run.add_argument("--quiet", action="store_true")

    bench = sub.add_parser("bench", help="incremental vs batch per shift")
    bench.add_argument("--stream", required=True)
    bench.add_argument("--config", default=None)
    bench.add_argument("--shifts", type=int, default=None)

    query = sub.add_parser("query", help="search stored events")
    src = query.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", default=None)
    src.add_argument("--events", default=None)
    _add_query_args(query)

    save = sub.add_parser("save", help="replay a stream, persist engine state")
    save.add_argument("--stream", required=True)
    save.add_argument("--state", required=True)
    save.add_argument("--config", default=None)
    save.add_argument("--model", default=None)
    save.add_argument("--shifts", type=int, default=None)
    save.add_argument("--quiet", action="store_true")

    load = sub.add_parser("load", help="restore persisted engine state")
    load.add_argument("--state", required=True)
    load.add_argument("--stream", default=None)
    load.add_argument("--shifts", type=int, default=None)
    load.add_argument("--save-state", default=None)
    load.add_argument("--serve", action="store_true")
    load.add_argument("--host", default="127.0.0.1")
    load.add_argument("--port", type=int, default=8000)
    load.add_argument("--static-dir", default=None)
    load.add_argument("--quiet", action="store_true")

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = EngineConfig.load(args.config)
    engine = DetectionEngine(cfg, model=_load_model(args.model))
    on_shift = None if args.quiet else lambda r: print(_shift_line(r))
    engine.run_stream(args.stream, max_shifts=args.shifts, on_shift=on_shift)
    status = engine.status()
    print(json.dumps(status["counters"]))
    if args.events_out:
        write_state_file(args.events_out, "events", engine.store.to_payload())
    if args.save_state:
        engine.save_state(args.save_state)
        print(f"state saved to {args.save_state}")
    if args.serve:
        _serve(engine, args.host, args.port, args.static_dir)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = EngineConfig.load(args.config)
    engine = DetectionEngine(cfg)
    print("tick,window,churn,incr_s,batch_s,speedup,identical")
    totals = [0.0, 0.0]
    mismatches = 0

    def on_shift(r: ShiftResult) -> None:
        nonlocal mismatches
        planes = engine.matches_batch()
        incr, batch = r.detect_seconds, planes["batch_seconds"]
        totals[0] += incr
        totals[1] += batch
        mismatches += 0 if planes["identical"] else 1
        speedup = batch / incr if incr > 0 else float("inf")
        print(
            f"{r.tick},{r.window_size},{r.churn:.3f},{incr:.4f},"
            f"{batch:.4f},{speedup:.2f},{planes['identical']}"
        )

    engine.run_stream(args.stream, max_shifts=args.shifts, on_shift=on_shift)
    print(
        f"# total incremental {totals[0]:.3f}s, batch {totals[1]:.3f}s, "
        f"mismatched shifts {mismatches}"
    )
    return 1 if mismatches else 0


def _cmd_query(args: argparse.Namespace) -> int:
    if args.state:
        engine = DetectionEngine.load_state(args.state)
        store = engine.store
    else:
        store = EventStore.from_payload(read_state_file(args.events, "events"))
    try:
        q = EventQuery(
            t_from=args.t_from,
            t_to=args.t_to,
            keyword=args.keyword,
            lat=args.lat,
            lon=args.lon,
            radius_m=args.radius_m,
        )
    except ValueError as exc:
        print(f"bad query: {exc}", file=sys.stderr)
        return 2
    records = query_events(store, q)
    if args.limit is not None:
        records = records[: args.limit]
    for r in records:
        print(json.dumps(r.to_payload(), sort_keys=True))
    return 0


def _cmd_save(args: argparse.Namespace) -> int:
    cfg = EngineConfig.load(args.config)
    engine = DetectionEngine(cfg, model=_load_model(args.model))
    on_shift = None if args.quiet else lambda r: print(_shift_line(r))
    engine.run_stream(args.stream, max_shifts=args.shifts, on_shift=on_shift)
    engine.save_state(args.state)
    print(f"state saved to {args.state}")
    return 0


def _cmd_load(args: argparse.Namespace) -> int:
    engine = DetectionEngine.load_state(args.state)
    if args.stream or args.shifts:
        on_shift = None if args.quiet else lambda r: print(_shift_line(r))
        engine.run_stream(args.stream, max_shifts=args.shifts, on_shift=on_shift)
    if args.save_state:
        engine.save_state(args.save_state)
        print(f"state saved to {args.save_state}")
    if args.serve:
        _serve(engine, args.host, args.port, args.static_dir)
    else:
        print(json.dumps(engine.status()["counters"]))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "bench": _cmd_bench,
        "query": _cmd_query,
        "save": _cmd_save,
        "load": _cmd_load,
    }
    try:
        return handlers[args.command](args)
    except BrokenPipeError:
        # downstream consumer (e.g. head) closed the pipe; not an error
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 141


if __name__ == "__main__":
    sys.exit(main())
