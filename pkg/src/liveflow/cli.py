"""Command-line driver: stream an event log through the engine, issue
queries on a timestamp interval, and emit per-query records plus a summary.

Exit status: 0 on success, 2 on configuration errors, 3 on an oracle
mismatch (with --oracle-check), 1 on I/O or stream errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from typing import IO, Callable, List, Optional

from .events import (
    StreamConfig,
    StreamFormatError,
    StreamOrderError,
    read_event_log,
    sliding_window_transform,
    throttle,
)
from .metrics import (
    QueryRecord,
    QuerySchedule,
    stability_score,
    summarize,
    write_header,
    write_record,
    write_summary,
)
from .oracle import StaticGraph, max_flow_reference
from .relabel import GrTunables
from .runtime import EngineConfig, StreamValidityError, create_engine

__all__ = ["RunConfig", "run_cli", "main"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_ORACLE = 3


@dataclass
class RunConfig:
    input_path: str
    source: int
    sink: int
    query_interval: int
    workers: int = 1
    window: Optional[int] = None
    offered_rate: Optional[float] = None
    oracle_check: bool = False
    deterministic_seed: Optional[int] = None
    alpha: float = 1.1
    gr: GrTunables = field(default_factory=GrTunables)
    output_format: str = "tsv"
    static_baseline: bool = False

    def validate(self) -> None:
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        if self.query_interval <= 0:
            raise ValueError("query interval must be positive")
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if self.window is not None and self.window <= 0:
            raise ValueError("window size must be positive")
        if self.offered_rate is not None and self.offered_rate <= 0:
            raise ValueError("offered rate must be positive")
        if self.alpha <= 1.0:
            raise ValueError("projection factor must exceed 1")
        if self.output_format not in ("tsv", "jsonl"):
            raise ValueError(f"unknown output format {self.output_format!r}")
        self.gr.validate()


def _engine_config(cfg: RunConfig) -> EngineConfig:
    return EngineConfig(
        source=cfg.source,
        sink=cfg.sink,
        workers=cfg.workers,
        alpha=cfg.alpha,
        deterministic_seed=cfg.deterministic_seed,
        gr=GrTunables(
            lift_threshold=cfg.gr.lift_threshold,
            time_factor=cfg.gr.time_factor,
            min_interval_ms=cfg.gr.min_interval_ms,
        ),
    )


class _OracleMismatch(Exception):
    def __init__(self, got: int, want: int, trigger_ts: int):
        super().__init__(
            f"query at ts {trigger_ts}: engine value {got} != reference {want}"
        )


def run_cli(
    cfg: RunConfig,
    out: Optional[IO[str]] = None,
    err: Optional[IO[str]] = None,
    engine_factory: Optional[Callable] = None,
) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    factory = engine_factory if engine_factory is not None else create_engine
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"liveflow: configuration error: {exc}", file=err)
        return EXIT_CONFIG

    stream_cfg = StreamConfig(window=cfg.window, offered_rate=cfg.offered_rate)
    try:
        fh = open(cfg.input_path, "r", encoding="utf-8")
    except OSError as exc:
        print(f"liveflow: cannot read input: {exc}", file=err)
        return EXIT_ERROR

    engine = None if cfg.static_baseline else factory(_engine_config(cfg))
    history: List = []  # retained only for static rebuilds and oracle checks
    records: List[QueryRecord] = []
    schedule = QuerySchedule(cfg.query_interval)
    prev_involved: Optional[frozenset] = None
    seg_events_base = 0
    seg_clock_base = time.perf_counter()
    static_graph = StaticGraph() if (cfg.static_baseline or cfg.oracle_check) else None
    write_header(out, cfg.output_format)

    def events_ingested() -> int:
        return len(history) if cfg.static_baseline else engine.events_ingested

    def ingest(ev) -> None:
        if static_graph is not None:
            key = (ev.src, ev.dst)
            cap = static_graph.caps.get(key, 0) + ev.delta
            if cap < 0:
                raise StreamValidityError(
                    f"edge {key}: cumulative capacity would become {cap}"
                )
            static_graph.caps[key] = cap
            static_graph.vertices.add(ev.src)
            static_graph.vertices.add(ev.dst)
        if cfg.static_baseline:
            history.append(ev)
        else:
            engine.ingest(ev)

    def static_query(trigger_ts: int):
        t0 = time.perf_counter()
        econf = _engine_config(cfg)
        if econf.deterministic_seed is not None:
            # a from-scratch run is a fresh execution, not a replay of the
            # incremental run's schedule; derive a distinct seed per rebuild
            econf.deterministic_seed += 1000 * (len(records) + 1)
        fresh = factory(econf)
        try:
            for ev in history:
                fresh.ingest(ev)
            res = fresh.query(trigger_ts)
        finally:
            fresh.close()
        res.latency_s = time.perf_counter() - t0  # rebuild cost included
        return res

    def run_query(trigger_ts: int) -> None:
        nonlocal prev_involved, seg_events_base, seg_clock_base
        seg_seconds = time.perf_counter() - seg_clock_base
        seg_events = events_ingested() - seg_events_base
        res = static_query(trigger_ts) if cfg.static_baseline else engine.query(trigger_ts)
        if cfg.oracle_check:
            want, _ = max_flow_reference(static_graph, cfg.source, cfg.sink)
            if want != res.flow_value:
                raise _OracleMismatch(res.flow_value, want, trigger_ts)
        stability = (
            None
            if prev_involved is None
            else stability_score(res.involved, prev_involved)
        )
        prev_involved = res.involved
        rate = seg_events / seg_seconds if seg_seconds > 0 else None
        records.append(
            QueryRecord(
                trigger_ts=trigger_ts,
                events_ingested=events_ingested(),
                flow_value=res.flow_value,
                latency_ms=res.latency_s * 1000.0,
                stability_pct=stability,
                events_per_sec=rate,
            )
        )
        write_record(out, cfg.output_format, records[-1])
        seg_events_base = events_ingested()
        seg_clock_base = time.perf_counter()

    last_ts = 0
    try:
        try:
            stream = read_event_log(fh, stream_cfg)
            if cfg.window is not None:
                stream = sliding_window_transform(stream, cfg.window)
            if cfg.offered_rate is not None:
                stream = throttle(stream, cfg.offered_rate)
            for ev in stream:
                if schedule.observe(ev.ts):
                    run_query(ev.ts)  # collection happens before the event lands
                ingest(ev)
                last_ts = ev.ts
            if events_ingested() > 0:
                run_query(last_ts)
        finally:
            fh.close()
            if engine is not None:
                engine.close()
    except _OracleMismatch as exc:
        print(f"liveflow: oracle mismatch: {exc}", file=err)
        return EXIT_ORACLE
    except (StreamFormatError, StreamOrderError, StreamValidityError, OSError) as exc:
        print(f"liveflow: {exc}", file=err)
        return EXIT_ERROR

    write_summary(out, cfg.output_format, summarize(records, events_ingested()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="liveflow",
        description=(
            "Maintain an (s,t) max-flow over a streamed event log and "
            "report per-query value, latency, stability, and throughput."
        ),
    )
    p.add_argument("--input", required=True, help="event log path")
    p.add_argument("--source", required=True, type=int, help="source vertex id")
    p.add_argument("--sink", required=True, type=int, help="sink vertex id")
    p.add_argument(
        "--query-interval",
        required=True,
        type=int,
        metavar="N",
        help="dataset time units between queries",
    )
    p.add_argument("--workers", type=int, default=1, metavar="N")
    p.add_argument(
        "--window",
        type=int,
        default=None,
        metavar="N",
        help="synthesize sliding-window deletions of this width",
    )
    p.add_argument(
        "--rate",
        type=float,
        default=None,
        metavar="N",
        help="offered event rate, events/second (default: unthrottled)",
    )
    p.add_argument(
        "--oracle-check",
        action="store_true",
        help="cross-check every query against the static reference solver",
    )
    p.add_argument(
        "--deterministic",
        type=int,
        default=None,
        metavar="SEED",
        help="single-threaded seeded scheduling for reproducible runs",
    )
    p.add_argument("--alpha", type=float, default=1.1, metavar="F")
    p.add_argument("--gr-lift-threshold", type=int, default=None, metavar="N")
    p.add_argument("--gr-time-factor", type=float, default=10.0, metavar="F")
    p.add_argument("--gr-min-interval", type=float, default=50.0, metavar="MS")
    p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    p.add_argument(
        "--static-baseline",
        action="store_true",
        help="recompute each query from scratch on the current snapshot",
    )
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        input_path=args.input,
        source=args.source,
        sink=args.sink,
        query_interval=args.query_interval,
        workers=args.workers,
        window=args.window,
        offered_rate=args.rate,
        oracle_check=args.oracle_check,
        deterministic_seed=args.deterministic,
        alpha=args.alpha,
        gr=GrTunables(
            lift_threshold=args.gr_lift_threshold,
            time_factor=args.gr_time_factor,
            min_interval_ms=args.gr_min_interval,
        ),
        output_format=args.format,
        static_baseline=args.static_baseline,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = run_cli(config_from_args(args))
    except KeyboardInterrupt:
        code = EXIT_ERROR
    if argv is None:
        sys.exit(code)
    return code
