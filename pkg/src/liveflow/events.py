"""Event-log parsing, sliding-window deletion synthesis, and rate pacing.

Event logs are plain text, one event per line, whitespace separated:

    [a|d] <timestamp> <src> <dst> [<weight>]

A missing op marker means ``a`` (add); a missing weight means the configured
default weight (1). A ``d`` marker negates the weight, turning the line into
a capacity removal. Lines starting with ``#`` are comments. Timestamps must
be non-decreasing across the file.

A stream is *delete-valid* when no prefix drives the cumulative capacity of
any ordered vertex pair negative. :func:`sliding_window_transform` always
produces delete-valid output from a sorted add-only input.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

__all__ = [
    "TopologyEvent",
    "StreamConfig",
    "StreamFormatError",
    "StreamOrderError",
    "parse_event_line",
    "format_event_line",
    "read_event_log",
    "sliding_window_transform",
    "throttle",
]


@dataclass(frozen=True)
class TopologyEvent:
    """One timestamped edge-capacity change. Deletions carry a negative delta."""

    ts: int
    src: int
    dst: int
    delta: int


@dataclass
class StreamConfig:
    """Knobs for reading and replaying an event log."""

    window: Optional[int] = None          # sliding-window size, dataset time units
    offered_rate: Optional[float] = None  # events per wall-clock second
    default_weight: int = 1

    def validate(self) -> None:
        if self.window is not None and self.window <= 0:
            raise ValueError("window size must be positive")
        if self.offered_rate is not None and self.offered_rate <= 0:
            raise ValueError("offered rate must be positive")
        if self.default_weight <= 0:
            raise ValueError("default weight must be positive")


class StreamFormatError(ValueError):
    """A line that does not match the event grammar."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class StreamOrderError(ValueError):
    """Timestamps regressed, or a transform received input it cannot order."""


_OP_MARKERS = ("a", "d")


def parse_event_line(
    line: str, config: Optional[StreamConfig] = None, line_no: Optional[int] = None
) -> TopologyEvent:
    """Decode one event line. Comments and blank lines are not events here;
    callers that read whole files should use :func:`read_event_log`."""
    default_weight = config.default_weight if config is not None else 1
    fields = line.split()
    if not fields:
        raise StreamFormatError("blank line is not an event", line_no)
    op = "a"
    if fields[0] in _OP_MARKERS:
        op = fields[0]
        fields = fields[1:]
    if len(fields) not in (3, 4):
        raise StreamFormatError(
            f"expected '[a|d] ts src dst [weight]', got {len(fields)} value fields", line_no
        )
    try:
        ts, src, dst = int(fields[0]), int(fields[1]), int(fields[2])
    except ValueError:
        raise StreamFormatError(f"non-integer field in {line.strip()!r}", line_no) from None
    if ts < 0 or src < 0 or dst < 0:
        raise StreamFormatError("timestamp and vertex ids must be non-negative", line_no)
    if len(fields) == 4:
        try:
            weight = int(fields[3])
        except ValueError:
            raise StreamFormatError(f"non-integer weight in {line.strip()!r}", line_no) from None
        if weight <= 0:
            raise StreamFormatError(f"weight must be positive, got {weight}", line_no)
    else:
        weight = default_weight
    delta = weight if op == "a" else -weight
    return TopologyEvent(ts, src, dst, delta)


def format_event_line(ev: TopologyEvent) -> str:
    """Inverse of :func:`parse_event_line` (round-trips exactly)."""
    op = "a" if ev.delta > 0 else "d"
    return f"{op} {ev.ts} {ev.src} {ev.dst} {abs(ev.delta)}"


def read_event_log(
    lines: Iterable[str], config: Optional[StreamConfig] = None
) -> Iterator[TopologyEvent]:
    """Parse an event log, skipping comments and blanks and enforcing
    non-decreasing timestamps. Accepts any iterable of lines (file objects
    included)."""
    last_ts = None
    for line_no, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        ev = parse_event_line(stripped, config, line_no)
        if last_ts is not None and ev.ts < last_ts:
            raise StreamFormatError(
                f"timestamp {ev.ts} regresses below {last_ts}", line_no
            )
        last_ts = ev.ts
        yield ev


def sliding_window_transform(
    stream: Iterable[TopologyEvent], window: Optional[int]
) -> Iterator[TopologyEvent]:
    """Emulate a sliding-window view of an add-only, timestamp-sorted stream.

    Before each input event with timestamp T, emits one deletion (at
    timestamp T) for every earlier add whose timestamp fell below T - window
    and that has not been deleted yet. ``window=None`` is the identity.
    """
    if window is None:
        yield from stream
        return
    if window <= 0:
        # A zero-width window would delete the triggering event itself;
        # that degenerate case is rejected rather than guessed at.
        raise ValueError("window size must be positive")
    live: deque[TopologyEvent] = deque()
    last_ts = None
    for ev in stream:
        if ev.delta <= 0:
            raise StreamOrderError("window transform requires an add-only input stream")
        if last_ts is not None and ev.ts < last_ts:
            raise StreamOrderError("window transform requires a timestamp-sorted input stream")
        last_ts = ev.ts
        cutoff = ev.ts - window
        while live and live[0].ts < cutoff:
            old = live.popleft()
            yield TopologyEvent(ev.ts, old.src, old.dst, -old.delta)
        yield ev
        live.append(ev)


def throttle(
    stream: Iterable[TopologyEvent], rate: Optional[float]
) -> Iterator[TopologyEvent]:
    """Pace a stream so the long-run release rate stays at or below ``rate``
    events per second. ``rate=None`` releases events as fast as they are
    consumed. The paced stream may be handed off to a different consumer
    thread; pacing state is confined to this generator."""
    if rate is None:
        yield from stream
        return
    if rate <= 0:
        raise ValueError("offered rate must be positive")
    start = time.monotonic()
    released = 0
    for ev in stream:
        due = start + released / rate
        while True:
            delay = due - time.monotonic()
            if delay <= 0:
                break
            time.sleep(delay)
        released += 1
        yield ev
