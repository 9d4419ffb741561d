"""Command-line front door: run, convert, replay, check, bench.

Exit codes: 0 success, 2 configuration/input error, 3 runtime error,
4 corrupt recording or config mismatch. Count/result lines printed to
stdout are stable and machine-parseable (key=value pairs).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Optional

from . import osm, recorder
from .config import load_config, resolve_config
from .context import create_context
from .errors import (
    ConfigError,
    ConfigMismatchError,
    CorruptRecordingError,
    SimulatorError,
    UnsupportedVersionError,
)
from .graph import document_to_json
from .scenarios import install_default_visuals

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_CORRUPT = 4

LOG_ENV_VAR = "GRAPHSIM_LOG_LEVEL"
_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
           "info": logging.INFO, "debug": logging.DEBUG}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsim",
                                     description="graph-based multi-agent simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario to termination")
    _add_common(run)
    run.add_argument("--max-turns", type=int, default=None,
                     help="stop after this many turns even without termination")
    run.add_argument("--vis", choices=["none", "stream"], default=None)
    run.add_argument("--listen", default=None, metavar="HOST:PORT")
    run.add_argument("--recording", default=None, metavar="PATH")
    run.add_argument("--wait-client", action="store_true",
                     help="in stream mode, wait for a viewer before starting")

    convert = sub.add_parser("convert", help="convert OSM XML to a GraphDocument")
    convert.add_argument("osm_path")
    convert.add_argument("--out", required=True, metavar="PATH")
    convert.add_argument("--resolution", type=float, default=10.0)
    convert.add_argument("--tolerance", type=float, default=None,
                         help="intersection consolidation tolerance (default resolution/2)")
    convert.add_argument("--highway-classes", default=None,
                         help="comma-separated allow-list (default: any highway)")
    convert.add_argument("--ignore-oneway", action="store_true")
    convert.add_argument("--log-level", choices=list(_LEVELS), default=None)

    replay = sub.add_parser("replay", help="replay a recording")
    replay.add_argument("recording")
    _add_common(replay)
    replay.add_argument("--vis", choices=["none", "stream"], default="none")
    replay.add_argument("--listen", default=None, metavar="HOST:PORT")
    replay.add_argument("--wait-client", action="store_true")
    replay.add_argument("--fps", type=float, default=20.0,
                        help="frame pacing in stream mode (0 = unpaced)")
    replay.add_argument("--dump-events", action="store_true",
                        help="print one JSON line per event and exit")

    check = sub.add_parser("check", help="verify a recording (hash + self-check)")
    check.add_argument("recording")
    _add_common(check)

    bench = sub.add_parser("bench", help="measure headless throughput")
    _add_common(bench)
    bench.add_argument("--turns", type=int, required=True)
    return parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, metavar="PATH")
    sub.add_argument("--preset", default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--log-level", choices=list(_LEVELS), default=None)


def _setup_logging(flag_level: Optional[str]) -> None:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    level = flag_level or os.environ.get(LOG_ENV_VAR)
    if level and level in _LEVELS:
        logging.getLogger("graphsim").setLevel(_LEVELS[level])


def _gather_config(args: argparse.Namespace) -> dict[str, Any]:
    """Flag > file > default precedence."""
    raw: dict[str, Any] = {}
    if args.config:
        raw = load_config(args.config)
    if args.preset:
        raw["preset"] = args.preset
    if "preset" not in raw and not args.config:
        raise ConfigError("config", "provide --config or --preset")
    if args.seed is not None:
        raw["seed"] = args.seed
    env_level = os.environ.get(LOG_ENV_VAR)
    if args.log_level is not None:
        raw["log_level"] = args.log_level
    elif env_level in _LEVELS:
        raw["log_level"] = env_level
    vis = getattr(args, "vis", None)
    if vis is not None:
        raw.setdefault("vis", {})["mode"] = vis
    listen = getattr(args, "listen", None)
    if listen is not None:
        raw.setdefault("vis", {})["listen"] = listen
    rec_path = getattr(args, "recording", None)
    if rec_path is not None and not isinstance(rec_path, bytes):
        raw.setdefault("recording", {})["path"] = rec_path
    return raw


def _parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise ConfigError("vis.listen", f"expected HOST:PORT, got {listen!r}") from None


def cmd_run(args: argparse.Namespace) -> int:
    resolved = resolve_config(_gather_config(args))
    ctx = create_context(resolved)
    streaming = resolved["vis"]["mode"] == "stream"
    started = time.perf_counter()
    try:
        if streaming:
            host, port = _parse_listen(resolved["vis"]["listen"])
            bound = ctx.visual.start_stream(host, port)
            install_default_visuals(ctx)
            print(f"listening on {host}:{bound}", file=sys.stderr)
            if args.wait_client:
                while ctx.visual.server.client_count() == 0:
                    time.sleep(0.02)
        while not ctx.is_terminated():
            if args.max_turns is not None and ctx.turn >= args.max_turns:
                break
            ctx.step()
    finally:
        if streaming:
            ctx.visual.stop_stream()
    wall = time.perf_counter() - started
    data = ctx.finish_recording()
    if data is not None:
        path = resolved["recording"]["path"]
        if path:
            Path(path).write_bytes(data)
    winner = ctx.outcome.winner if ctx.outcome and ctx.outcome.winner else "none"
    print(f"turn={ctx.turn} winner={winner} wall_time_s={wall:.3f}")
    return EXIT_OK


def cmd_convert(args: argparse.Namespace) -> int:
    if args.resolution <= 0:
        print("error: resolution must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        data = Path(args.osm_path).read_bytes()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    classes = args.highway_classes.split(",") if args.highway_classes else None
    network = osm.parse_osm_xml(data, classes)
    document = osm.build_graph(
        network,
        osm.IngestConfig(
            resolution=args.resolution,
            consolidation_tolerance=args.tolerance,
            respect_oneway=not args.ignore_oneway,
        ),
    )
    Path(args.out).write_text(document_to_json(document))
    print(f"nodes={len(document['nodes'])} edges={len(document['edges'])}")
    return EXIT_OK


_EVENT_NAMES = {
    recorder.TurnBegin: "turn_begin",
    recorder.AgentMoved: "agent_moved",
    recorder.AerialMoved: "aerial_moved",
    recorder.AgentReset: "agent_reset",
    recorder.Custom: "custom",
    recorder.Terminated: "terminated",
}


def cmd_replay(args: argparse.Namespace) -> int:
    data = Path(args.recording).read_bytes()
    if args.dump_events:
        header, events = recorder.decode(data)
        if header.version < recorder.CURRENT_VERSION:
            header, events = recorder.decode(
                recorder.translate(data, header.version, recorder.CURRENT_VERSION)
            )
        for event in events:
            entry = {"event": _EVENT_NAMES[type(event)]}
            for key, value in dataclasses.asdict(event).items():
                entry[key] = value.hex() if isinstance(value, bytes) else value
            print(json.dumps(entry, sort_keys=True))
        return EXIT_OK
    raw = _gather_config(args)
    resolved = resolve_config(raw)
    ctx = create_context(resolved, for_replay=True)
    streaming = resolved["vis"]["mode"] == "stream"
    turns = 0
    try:
        if streaming:
            host, port = _parse_listen(resolved["vis"]["listen"])
            bound = ctx.visual.start_stream(host, port)
            install_default_visuals(ctx)
            print(f"listening on {host}:{bound}", file=sys.stderr)
            if args.wait_client:
                while ctx.visual.server.client_count() == 0:
                    time.sleep(0.02)
        delay = 1.0 / args.fps if streaming and args.fps > 0 else 0.0
        for _ in recorder.replay(data, resolved, ctx=ctx):
            turns += 1
            ctx.visual.simulate(ctx)
            if delay:
                time.sleep(delay)
    finally:
        if streaming:
            time.sleep(0.2)  # let writer threads flush the last frames
            ctx.visual.stop_stream()
    print(f"turns={turns} state_digest={ctx.state_digest()}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    data = Path(args.recording).read_bytes()
    resolved = resolve_config(_gather_config(args))
    ok = recorder.self_check(data, resolved)
    print(f"self_check={'ok' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_CORRUPT


def cmd_bench(args: argparse.Namespace) -> int:
    if args.turns <= 0:
        print("error: --turns must be positive", file=sys.stderr)
        return EXIT_CONFIG
    raw = _gather_config(args)
    raw.setdefault("vis", {})["mode"] = "none"
    raw.setdefault("recording", {})["path"] = None
    resolved = resolve_config(raw)
    ctx = create_context(resolved, record=False)
    peak_events = 0
    started = time.perf_counter()
    turns = 0
    for _ in range(args.turns):
        if ctx.is_terminated():
            break
        ctx.step()
        turns += 1
        peak_events = max(peak_events, ctx.turn_event_count)
    wall = time.perf_counter() - started
    rate = turns / wall if wall > 0 else float("inf")
    print(
        f"turns={turns} turns_per_second={rate:.1f} "
        f"peak_events_per_turn={peak_events} state_digest={ctx.state_digest()}"
    )
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging(getattr(args, "log_level", None))
    handlers = {
        "run": cmd_run,
        "convert": cmd_convert,
        "replay": cmd_replay,
        "check": cmd_check,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorruptRecordingError, ConfigMismatchError, UnsupportedVersionError) as exc:
        print(f"recording error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except SimulatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _classify(exc)
    except BrokenPipeError:
        # downstream consumer (e.g. `head`) closed the pipe; not an error
        try:
            sys.stdout.close()
        except OSError:
            pass
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _classify(exc: SimulatorError) -> int:
    from .errors import IngestError

    if isinstance(exc, IngestError):
        return EXIT_CONFIG
    return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
