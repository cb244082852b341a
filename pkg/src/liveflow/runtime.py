"""Emulated-distributed execution of the vertex program.

Vertices are partitioned over workers by id modulo worker count. Each worker
owns a topology FIFO plus one message FIFO per sending worker (so per
ordered worker pair, messages arrive in send order), and never touches
another worker's vertices. Topology events are prioritized over algorithmic
messages. A single coordinator drives global-relabel phases and query
barriers.

Two execution modes share all of the above:

* threaded: one OS thread per worker; quiescence is detected from
  monotonic sent/received counters read twice consistently (received is
  incremented only after a handler fully completes, so an in-flight
  handler keeps the counts apart).
* deterministic (seeded): no threads; a seeded scheduler interleaves the
  logical workers one handler run at a time, and the global-relabel clock
  counts scheduler steps instead of wall time. Identical seeds replay
  identical schedules.
"""

from __future__ import annotations

import math
import random
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from . import vertex as vx
from .events import TopologyEvent
from .oracle import StaticGraph
from .relabel import (
    PHASE_DRAIN,
    PHASE_NORMAL,
    PHASE_RELABEL_DOWN,
    PHASE_RELABEL_UP,
    GrState,
    GrTunables,
    check_trigger,
)

__all__ = [
    "EngineConfig",
    "QueryRequest",
    "QueryResult",
    "GrSnapshot",
    "StreamValidityError",
    "GraphStore",
    "Engine",
    "SimEngine",
    "ThreadedEngine",
    "create_engine",
]

TOPO_EDGE = 0
TOPO_NEWMAX = 1

RUN_CAP = 32              # max handler invocations fused into one run
SIM_STEPS_PER_MS = 50.0   # step clock for the deterministic mode


class StreamValidityError(ValueError):
    """The stream violated delete-validity or basic event preconditions."""


@dataclass
class EngineConfig:
    source: int
    sink: int
    workers: int = 1
    alpha: float = 1.1                      # projection factor for the vertex count
    deterministic_seed: Optional[int] = None
    gr: GrTunables = field(default_factory=GrTunables)
    debug: bool = False

    def validate(self) -> None:
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if self.alpha <= 1.0:
            raise ValueError("projection factor must exceed 1")
        self.gr.validate()


@dataclass
class QueryRequest:
    trigger_ts: int
    requested_at: float


@dataclass
class QueryResult:
    trigger_ts: int
    flow_value: int
    involved: frozenset
    latency_s: float
    events_ingested: int


@dataclass
class GrSnapshot:
    """Frozen state right after a global relabel's descent converged,
    before normal execution resumes."""

    height_pos: Dict[int, int]
    height_neg: Dict[int, int]
    residual: Dict[Tuple[int, int], int]   # arcs with positive residual
    deficits: Set[int]
    n_projected: int


class GraphStore:
    """Aggregate ordered-pair capacities, vertex census, and the projected
    vertex count used for source/sink heights."""

    __slots__ = ("caps", "vertices", "n_max", "n_projected", "alpha")

    def __init__(self, alpha: float):
        self.caps: Dict[Tuple[int, int], int] = {}
        self.vertices: Set[int] = set()
        self.n_max = 0
        self.n_projected = 0
        self.alpha = alpha

    def apply_edge(self, ev: TopologyEvent) -> None:
        key = (ev.src, ev.dst)
        cap = self.caps.get(key, 0) + ev.delta
        if cap < 0:
            raise StreamValidityError(
                f"edge {key}: cumulative capacity would become {cap}"
            )
        self.caps[key] = cap

    def note_vertices(self, *vids: int) -> int:
        """Track vertex ids; returns the new projected count when it grew,
        else 0."""
        seen = self.vertices
        added = False
        for vid in vids:
            if vid not in seen:
                seen.add(vid)
                added = True
        if added:
            self.n_max = len(seen)
            if self.n_max > self.n_projected:
                self.n_projected = math.ceil(self.alpha * self.n_max)
                return self.n_projected
        return 0

    def snapshot(self) -> StaticGraph:
        return StaticGraph(dict(self.caps), set(self.vertices))


class Worker:
    """One shared-nothing partition: owned vertices, a topology FIFO, and a
    message FIFO per sending worker."""

    __slots__ = (
        "wid",
        "engine",
        "vertices",
        "ctx",
        "topo",
        "chans",
        "control",
        "topo_enabled",
        "msg_sent",
        "msg_received",
        "topo_received",
        "_rr",
        "_seq_out",
        "_seq_in",
        "trace",
    )

    def __init__(self, wid: int, nworkers: int, engine: "Engine"):
        self.wid = wid
        self.engine = engine
        self.vertices: Dict[int, vx.VertexState] = {}
        self.ctx = vx.OpContext()
        self.topo = deque()
        self.chans = [deque() for _ in range(nworkers)]
        self.control = deque()
        self.topo_enabled = True
        self.msg_sent = 0
        self.msg_received = 0
        self.topo_received = 0
        self._rr = 0
        self._seq_out = [0] * nworkers
        self._seq_in = [0] * nworkers
        self.trace: Optional[list] = None

    # -- vertex and message plumbing -------------------------------------

    def get_vertex(self, vid: int) -> vx.VertexState:
        v = self.vertices.get(vid)
        if v is None:
            eng = self.engine
            if vid == eng.source:
                vt = vx.SOURCE
            elif vid == eng.sink:
                vt = vx.SINK
            else:
                vt = vx.NORMAL
            v = vx.VertexState(vid, vt)
            self.vertices[vid] = v
        return v

    def route(self, out: list) -> None:
        if not out:
            return
        eng = self.engine
        workers = eng.workers
        n = eng.nworkers
        debug = eng.debug
        sent = 0
        for dst, m in out:
            tw = workers[dst % n]
            if debug:
                m.seq = self._seq_out[tw.wid]
                self._seq_out[tw.wid] += 1
            tw.chans[self.wid].append((dst, m))
            sent += 1
        self.msg_sent += sent

    def has_work(self) -> bool:
        if self.topo_enabled and self.topo:
            return True
        for c in self.chans:
            if c:
                return True
        return False

    def _enter(self, v: vx.VertexState) -> None:
        if self.engine.debug:
            if v.in_handler:
                raise RuntimeError(f"re-entrant handler on vertex {v.vid}")
            v.in_handler = True

    def _exit(self, v: vx.VertexState) -> None:
        if self.engine.debug:
            v.in_handler = False

    # -- handler runs ------------------------------------------------------

    def topo_run(self) -> None:
        topo = self.topo
        item = topo.popleft()
        out: list = []
        count = 1
        if item[0] == TOPO_NEWMAX:
            v = self.get_vertex(item[1])
            self._enter(v)
            vx.on_new_max_vertex_count(v, item[2], self.ctx, out)
            self._exit(v)
        else:
            src = item[1]
            v = self.get_vertex(src)
            self._enter(v)
            while True:
                vx.on_edge_changed(
                    v, item[2], item[3], self.ctx, out, self.engine.source, defer=True
                )
                if count >= RUN_CAP or not topo:
                    break
                nxt = topo[0]
                if nxt[0] != TOPO_EDGE or nxt[1] != src:
                    break
                item = topo.popleft()
                count += 1
            vx.finish_vertex(v, self.ctx, out)
            self._exit(v)
        self.route(out)
        self.topo_received += count

    def message_run(self, ci: int) -> None:
        eng = self.engine
        if eng.debug and eng.deterministic and self.topo_enabled and self.topo:
            raise RuntimeError("message consumed while topology events pending")
        chan = self.chans[ci]
        dst, m = chan.popleft()
        if eng.debug:
            if m.seq != self._seq_in[ci]:
                raise RuntimeError(
                    f"channel {ci}->{self.wid} out of order: {m.seq} != {self._seq_in[ci]}"
                )
            self._seq_in[ci] += 1
        v = self.get_vertex(dst)
        out: list = []
        count = 1
        self._enter(v)
        while True:
            vx.on_message_received(v, m, self.ctx, out, defer=True)
            if self.trace is not None:
                self.trace.append((dst, m.sender, m.kind, m.amount, m.hpos))
            if count >= RUN_CAP or not chan:
                break
            nd, nm = chan[0]
            if nd != dst:
                break
            chan.popleft()
            if eng.debug:
                if nm.seq != self._seq_in[ci]:
                    raise RuntimeError("channel FIFO violated inside run")
                self._seq_in[ci] += 1
            m = nm
            count += 1
        vx.finish_vertex(v, self.ctx, out)
        self._exit(v)
        self.route(out)
        self.msg_received += count

    def try_message_run(self) -> bool:
        n = len(self.chans)
        start = self._rr
        for k in range(n):
            ci = (start + k) % n
            if self.chans[ci]:
                self._rr = ci + 1
                self.message_run(ci)
                return True
        return False

    # -- deterministic scheduling -----------------------------------------

    def sim_step(self, rng: random.Random) -> bool:
        if self.topo_enabled and self.topo:
            self.topo_run()
            return True
        nonempty = [ci for ci, c in enumerate(self.chans) if c]
        if not nonempty:
            return False
        ci = nonempty[0] if len(nonempty) == 1 else rng.choice(nonempty)
        self.message_run(ci)
        return True

    # -- threaded execution -------------------------------------------------

    def run_thread(self) -> None:
        eng = self.engine
        idle = 0
        while not eng._stop:
            if self.control:
                self._handle_control(self.control.popleft())
                idle = 0
                continue
            if self.topo_enabled and self.topo:
                self.topo_run()
                idle = 0
                continue
            if self.try_message_run():
                idle = 0
                continue
            idle += 1
            time.sleep(0.00005 if idle < 16 else 0.001)

    def _handle_control(self, item) -> None:
        phase, n_projected, barrier = item
        out: list = []
        if phase == PHASE_DRAIN:
            self.ctx.lift_enabled = False
            self.topo_enabled = False
        elif phase == PHASE_RELABEL_UP:
            for v in self.vertices.values():
                vx.relabel_up(v, n_projected)
        elif phase == PHASE_RELABEL_DOWN:
            self.ctx.push_enabled = False
            for v in self.vertices.values():
                vx.broadcast_height_if_needed(v, out)
        elif phase == PHASE_NORMAL:
            self.ctx.push_enabled = True
            self.ctx.lift_enabled = True
            self.topo_enabled = True
            for v in self.vertices.values():
                if v.excess != 0:
                    vx.discharge(v, self.ctx, out)
                    vx.broadcast_height_if_needed(v, out)
        self.route(out)
        barrier.ack()


class _Barrier:
    def __init__(self, n: int):
        self.n = n
        self.count = 0
        self.cond = threading.Condition()

    def ack(self) -> None:
        with self.cond:
            self.count += 1
            self.cond.notify_all()

    def wait(self, should_stop=None) -> bool:
        with self.cond:
            while self.count < self.n:
                if should_stop is not None and should_stop():
                    return False
                self.cond.wait(0.05)
        return True


class Engine:
    """Shared engine core: ingestion, counters, extraction, quiescence."""

    deterministic = False

    def __init__(self, config: EngineConfig):
        config.validate()
        self.config = config
        self.source = config.source
        self.sink = config.sink
        self.nworkers = config.workers
        self.debug = config.debug
        self.store = GraphStore(config.alpha)
        self.gr = GrState(config.gr)
        self.workers = [Worker(i, config.workers, self) for i in range(config.workers)]
        self.topo_sent = 0
        self.events_ingested = 0
        self.last_event_ts = 0
        self._stop = False
        np0 = self.store.note_vertices(self.source, self.sink)
        if np0:
            self._schedule_newmax(np0)

    # -- ingestion ----------------------------------------------------------

    def ingest(self, ev: TopologyEvent) -> None:
        if ev.delta == 0:
            raise StreamValidityError("events must carry a nonzero capacity delta")
        self.store.apply_edge(ev)
        new_np = self.store.note_vertices(ev.src, ev.dst)
        if new_np:
            self._schedule_newmax(new_np)
        self.workers[ev.src % self.nworkers].topo.append(
            (TOPO_EDGE, ev.src, ev.dst, ev.delta)
        )
        self.topo_sent += 1
        self.events_ingested += 1
        self.last_event_ts = ev.ts

    def _schedule_newmax(self, n_projected: int) -> None:
        for vid in (self.source, self.sink):
            self.workers[vid % self.nworkers].topo.append(
                (TOPO_NEWMAX, vid, n_projected)
            )
            self.topo_sent += 1

    # -- quiescence ----------------------------------------------------------

    def _counters(self) -> Tuple[int, int, int]:
        ms = mr = tr = 0
        for w in self.workers:
            ms += w.msg_sent
            mr += w.msg_received
            tr += w.topo_received
        return ms, mr, tr

    def _queues_empty(self, include_topo: bool = True) -> bool:
        for w in self.workers:
            if include_topo and w.topo:
                return False
            for c in w.chans:
                if c:
                    return False
        return True

    def _quiescent_once(self) -> bool:
        ms, mr, tr = self._counters()
        return ms == mr and tr == self.topo_sent and self._queues_empty()

    def _quiescent_twice(self) -> bool:
        first = self._counters()
        if not (first[0] == first[1] and first[2] == self.topo_sent):
            return False
        if not self._queues_empty():
            return False
        second = self._counters()
        return second == first and self._queues_empty()

    def detect_quiescence(self) -> bool:
        """Sound check: True only when no queued or in-flight message or
        event exists anywhere (two consistent observations)."""
        return self.gr.phase == PHASE_NORMAL and self._quiescent_twice()

    # -- extraction ----------------------------------------------------------

    def _total_lifts(self) -> int:
        return sum(w.ctx.lift_count for w in self.workers)

    def vertices_items(self) -> Iterable[Tuple[int, vx.VertexState]]:
        for w in self.workers:
            yield from w.vertices.items()

    def _sink_excess(self) -> int:
        w = self.workers[self.sink % self.nworkers]
        v = w.vertices.get(self.sink)
        return v.excess if v is not None else 0

    def involved_vertices(self) -> Set[int]:
        """Vertices touching a pair that carries positive flow
        (flow = aggregate capacity minus outbound residual)."""
        caps = self.store.caps
        involved: Set[int] = set()
        for vid, v in self.vertices_items():
            ids = v.nbr_ids
            res_out = v.res_out
            for i in range(len(ids)):
                cap = caps.get((vid, ids[i]), 0)
                if cap > 0 and cap - res_out[i] > 0:
                    involved.add(vid)
                    involved.add(ids[i])
        return involved

    def _extract(self, req: QueryRequest) -> QueryResult:
        value = self._sink_excess()
        involved = frozenset(self.involved_vertices())
        return QueryResult(
            trigger_ts=req.trigger_ts,
            flow_value=value,
            involved=involved,
            latency_s=time.perf_counter() - req.requested_at,
            events_ingested=self.events_ingested,
        )

    def snapshot_static(self) -> StaticGraph:
        return self.store.snapshot()

    def scan_invariants(self) -> List[str]:
        from .invariants import scan

        return scan(self)

    # -- lifecycle ------------------------------------------------------------

    def close(self) -> None:
        self._stop = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class SimEngine(Engine):
    """Deterministic single-threaded engine with seeded scheduling over
    logical workers. The relabel clock counts scheduler steps."""

    deterministic = True

    def __init__(self, config: EngineConfig):
        super().__init__(config)
        self.rng = random.Random(config.deterministic_seed)
        self._steps = 0
        self.pump()  # settle the startup source/sink height events

    def _now_ms(self) -> float:
        return self._steps / SIM_STEPS_PER_MS

    def _sim_step(self) -> bool:
        workers = self.workers
        if len(workers) == 1:
            if workers[0].sim_step(self.rng):
                self._steps += 1
                return True
            return False
        candidates = [w for w in workers if w.has_work()]
        if not candidates:
            return False
        w = candidates[0] if len(candidates) == 1 else self.rng.choice(candidates)
        if w.sim_step(self.rng):
            self._steps += 1
            return True
        return False

    def pump(self, max_steps: Optional[int] = None) -> int:
        """Process up to max_steps handler runs (all pending work when None),
        honoring relabel triggers. Returns the number of steps executed."""
        done = 0
        probe = 0
        while max_steps is None or done < max_steps:
            probe -= 1
            if probe <= 0:  # trigger probes are amortized over steps
                probe = 32
                if check_trigger(
                    self.gr, self._now_ms(), self._total_lifts(), self.store.n_max
                ) and not self._queues_empty():
                    self._run_gr(capture=False)
            if not self._sim_step():
                break
            done += 1
        return done

    def query(self, trigger_ts: Optional[int] = None) -> QueryResult:
        req = QueryRequest(
            trigger_ts if trigger_ts is not None else self.last_event_ts,
            time.perf_counter(),
        )
        self.pump()
        return self._extract(req)

    def force_global_relabel(self, capture: bool = False) -> Optional[GrSnapshot]:
        """Run a full global relabel now. With ``capture=True`` returns the
        frozen post-descent state (heights are exact residual distances at
        that instant, before normal execution resumes)."""
        return self._run_gr(capture=capture)

    # -- global relabel (synchronous) -----------------------------------------

    def _drain_messages_sim(self) -> None:
        workers = self.workers
        single = len(workers) == 1
        while True:
            if single:
                if not any(workers[0].chans):
                    return
                w = workers[0]
            else:
                candidates = [w for w in workers if any(w.chans)]
                if not candidates:
                    return
                w = candidates[0] if len(candidates) == 1 else self.rng.choice(candidates)
            w.sim_step(self.rng)
            self._steps += 1

    def _run_gr(self, capture: bool = False) -> Optional[GrSnapshot]:
        gr = self.gr
        if gr.phase != PHASE_NORMAL:
            raise RuntimeError("relabel already in progress")
        t0 = self._now_ms()
        gr.advance(PHASE_DRAIN)
        for w in self.workers:
            w.ctx.lift_enabled = False
            w.topo_enabled = False
        self._drain_messages_sim()

        excess_before = None
        if self.debug:
            excess_before = {vid: v.excess for vid, v in self.vertices_items()}

        gr.advance(PHASE_RELABEL_UP)
        np_ = self.store.n_projected
        for w in self.workers:
            for v in w.vertices.values():
                vx.relabel_up(v, np_)

        ceilings = None
        if self.debug:
            ceilings = {
                vid: (v.height_pos, v.height_neg) for vid, v in self.vertices_items()
            }

        gr.advance(PHASE_RELABEL_DOWN)
        for w in self.workers:
            w.ctx.push_enabled = False
        for w in self.workers:
            out: list = []
            for v in w.vertices.values():
                vx.broadcast_height_if_needed(v, out)
            w.route(out)
        self._drain_messages_sim()

        if self.debug:
            for vid, v in self.vertices_items():
                if v.excess != excess_before.get(vid, 0):
                    raise RuntimeError(f"flow moved during relabel at vertex {vid}")
                hp, hn = ceilings[vid]
                if v.height_pos > hp or v.height_neg > hn:
                    raise RuntimeError(f"non-monotone descent at vertex {vid}")

        snap = self._capture_snapshot() if capture else None

        gr.advance(PHASE_NORMAL)
        gr.finish(self._now_ms(), t0, self._total_lifts())
        for w in self.workers:
            w.ctx.push_enabled = True
            w.ctx.lift_enabled = True
            w.topo_enabled = True
        for w in self.workers:
            out = []
            for v in w.vertices.values():
                if v.excess != 0:
                    vx.discharge(v, w.ctx, out)
                    vx.broadcast_height_if_needed(v, out)
            w.route(out)
        return snap

    def _capture_snapshot(self) -> GrSnapshot:
        hpos: Dict[int, int] = {}
        hneg: Dict[int, int] = {}
        residual: Dict[Tuple[int, int], int] = {}
        deficits: Set[int] = set()
        for vid, v in self.vertices_items():
            hpos[vid] = v.height_pos
            hneg[vid] = v.height_neg
            if v.excess < 0:
                deficits.add(vid)
            ids = v.nbr_ids
            res_out = v.res_out
            for i in range(len(ids)):
                if res_out[i] > 0:
                    residual[(vid, ids[i])] = res_out[i]
        return GrSnapshot(hpos, hneg, residual, deficits, self.store.n_projected)


class ThreadedEngine(Engine):
    """One thread per worker plus a coordinator thread for relabel phases."""

    deterministic = False

    def __init__(self, config: EngineConfig):
        super().__init__(config)
        self.gr.last_gr_end_ms = self._now_ms()
        self._lock = threading.Lock()
        self._force_gr = False
        self._threads = [
            threading.Thread(target=w.run_thread, daemon=True, name=f"liveflow-w{w.wid}")
            for w in self.workers
        ]
        self._coord = threading.Thread(
            target=self._coordinator_loop, daemon=True, name="liveflow-coord"
        )
        for t in self._threads:
            t.start()
        self._coord.start()

    def _now_ms(self) -> float:
        return time.monotonic() * 1000.0

    # -- coordinator -----------------------------------------------------------

    def _coordinator_loop(self) -> None:
        poll_s = min(self.gr.tunables.min_interval_ms / 4.0, 10.0) / 1000.0
        while not self._stop:
            time.sleep(poll_s)
            start = False
            with self._lock:
                if self.gr.phase == PHASE_NORMAL:
                    backlog = not self._quiescent_once()
                    if self._force_gr or (
                        backlog
                        and check_trigger(
                            self.gr,
                            self._now_ms(),
                            self._total_lifts(),
                            self.store.n_max,
                        )
                    ):
                        self._force_gr = False
                        self.gr.advance(PHASE_DRAIN)
                        start = True
            if start:
                self._run_gr_threaded()

    def _barrier(self, phase: str) -> bool:
        barrier = _Barrier(self.nworkers)
        np_ = self.store.n_projected
        for w in self.workers:
            w.control.append((phase, np_, barrier))
        return barrier.wait(should_stop=lambda: self._stop)

    def _wait_messages_drained(self) -> None:
        while not self._stop:
            ms, mr, _ = self._counters()
            if ms == mr and self._queues_empty(include_topo=False):
                ms2, mr2, _ = self._counters()
                if (ms2, mr2) == (ms, mr) and self._queues_empty(include_topo=False):
                    return
            time.sleep(0.0002)

    def _run_gr_threaded(self) -> None:
        t0 = self._now_ms()
        if not self._barrier(PHASE_DRAIN):
            return  # engine is closing mid-relabel
        self._wait_messages_drained()
        self.gr.advance(PHASE_RELABEL_UP)
        if not self._barrier(PHASE_RELABEL_UP):
            return
        self.gr.advance(PHASE_RELABEL_DOWN)
        if not self._barrier(PHASE_RELABEL_DOWN):
            return
        self._wait_messages_drained()
        # Reactivate parked excess before the phase reads NORMAL again;
        # otherwise a query could observe a drained-but-unfinished engine
        # as quiescent and extract a mid-relabel flow value.
        if not self._barrier(PHASE_NORMAL):
            return
        self.gr.advance(PHASE_NORMAL)
        self.gr.finish(self._now_ms(), t0, self._total_lifts())

    def force_global_relabel(self, capture: bool = False) -> None:
        if capture:
            raise ValueError("height capture requires the deterministic engine")
        runs = self.gr.runs
        self._force_gr = True
        while self.gr.runs == runs and not self._stop:
            time.sleep(0.001)

    # -- queries ----------------------------------------------------------------

    def query(self, trigger_ts: Optional[int] = None) -> QueryResult:
        req = QueryRequest(
            trigger_ts if trigger_ts is not None else self.last_event_ts,
            time.perf_counter(),
        )
        while True:
            if self.gr.phase != PHASE_NORMAL:
                time.sleep(0.0002)
                continue
            if self._quiescent_once():
                with self._lock:
                    if self.gr.phase == PHASE_NORMAL and self._quiescent_twice():
                        return self._extract(req)
            else:
                time.sleep(0.0002)

    def close(self) -> None:
        self._stop = True
        for t in self._threads:
            t.join(timeout=2.0)
        self._coord.join(timeout=2.0)


def create_engine(config: EngineConfig) -> Engine:
    """Deterministic seeded engine when a seed is configured, threaded
    otherwise."""
    if config.deterministic_seed is not None:
        return SimEngine(config)
    return ThreadedEngine(config)
