"""The dynamic push-relabel vertex program.

Each vertex is an independent agent owning its excess, two heights (one
guiding positive flow toward the sink, one guiding negative flow, i.e.
deficits, back toward the source), and per-neighbour mirrors of residual
capacities and heights. All effects leave a vertex as messages; nothing here
reads another vertex's state.

Conventions used throughout:

* ``res_out[i]`` is the residual capacity from this vertex to neighbour i,
  ``res_in[i]`` the residual capacity from neighbour i to this vertex as
  locally known. At quiescence ``v.res_out[w] == w.res_in[v]``.
* Heights use the sentinel ``INF``, strictly above any reachable label.
  New normal vertices start at (INF, INF) so they cannot attract flow
  before a real route to the sink (or source) is learned; they descend
  naturally while restoring the height invariant with neighbours.
* Every outbound message carries the sender's heights subject to a
  suppression rule: the positive height is attached only when the
  counterpart holds residual capacity toward us (``res_in[i] > 0``), the
  negative height only when we hold residual toward it (``res_out[i] > 0``).
  ``sent_hpos``/``sent_hneg`` record the last transmitted values so a
  suppressed change can be re-sent the moment the residual reopens.
* Deficits (negative excess) pin the positive height at zero, which turns
  the vertex into an attractor for positive flow; a deficit whose negative
  height is INF cannot push and simply waits to be cancelled.
"""

from __future__ import annotations

from typing import List, Tuple

__all__ = [
    "INF",
    "UNSENT",
    "SOURCE",
    "SINK",
    "NORMAL",
    "FLOW",
    "CAP_OFFSET",
    "InvariantViolation",
    "Msg",
    "OpContext",
    "VertexState",
    "add_neighbour",
    "slot_of",
    "push",
    "lift",
    "discharge",
    "restore_height_invariant",
    "broadcast_height_if_needed",
    "on_new_max_vertex_count",
    "on_edge_changed",
    "on_message_received",
    "finish_vertex",
    "relabel_up",
]

INF = 1 << 60     # height infinity: above any reachable label
UNSENT = -1       # "never transmitted" marker for sent-height tracking

SOURCE, SINK, NORMAL = 0, 1, 2
FLOW, CAP_OFFSET = 0, 1


class InvariantViolation(RuntimeError):
    """A vertex-local invariant that should be unbreakable was broken."""


class Msg:
    """Inter-vertex message: a flow amount or a capacity offset, plus the
    sender's heights. A height the receiver cannot use arrives as the INF
    sentinel (see :func:`_send`); ``None`` means "keep the old mirror" and
    appears only in hand-built messages.

    ``spos`` is the sender's slot in the receiver's neighbour table when the
    sender knows it (-1 otherwise); ``rpos`` is the receiver's slot in the
    sender's table so the receiver can learn its own position. ``seq`` is a
    per-channel sequence number stamped only in debug mode.
    """

    __slots__ = ("sender", "spos", "rpos", "kind", "amount", "hpos", "hneg", "seq")

    def __init__(self, sender, spos, rpos, kind, amount, hpos, hneg):
        self.sender = sender
        self.spos = spos
        self.rpos = rpos
        self.kind = kind
        self.amount = amount
        self.hpos = hpos
        self.hneg = hneg
        self.seq = -1

    def __repr__(self):  # pragma: no cover - debugging aid
        kind = "flow" if self.kind == FLOW else "cap"
        return (
            f"Msg(from={self.sender} {kind}={self.amount} "
            f"h={self.hpos} hn={self.hneg})"
        )


class OpContext:
    """Worker-local switches and counters shared by all handler calls.

    Pushes and lifts are disabled by the global-relabel phases; the lift
    counter feeds the relabel trigger.
    """

    __slots__ = ("push_enabled", "lift_enabled", "lift_count")

    def __init__(self):
        self.push_enabled = True
        self.lift_enabled = True
        self.lift_count = 0


class VertexState:
    """Per-vertex algorithm state with struct-of-arrays neighbour storage.

    Neighbour data lives in parallel lists indexed by slot; ``nbr_index``
    maps a neighbour id to its slot so that only the first contact from a
    new neighbour pays the dictionary lookup (messages carry slots).
    """

    __slots__ = (
        "vid",
        "vtype",
        "excess",
        "height_pos",
        "height_neg",
        "nbr_ids",
        "res_out",
        "res_in",
        "mirror_hpos",
        "mirror_hneg",
        "sent_hpos",
        "sent_hneg",
        "peer_pos",
        "nbr_index",
        "last_bcast_pos",
        "last_bcast_neg",
        "pending_dirty",
        "in_handler",
    )

    def __init__(self, vid: int, vtype: int):
        self.vid = vid
        self.vtype = vtype
        self.excess = 0
        if vtype == NORMAL:
            self.height_pos = INF
            self.height_neg = INF
        else:
            # Source/sink heights are raised by the projected-count event.
            self.height_pos = 0
            self.height_neg = 0
        self.nbr_ids: List[int] = []
        self.res_out: List[int] = []
        self.res_in: List[int] = []
        self.mirror_hpos: List[int] = []
        self.mirror_hneg: List[int] = []
        self.sent_hpos: List[int] = []
        self.sent_hneg: List[int] = []
        self.peer_pos: List[int] = []
        self.nbr_index: dict = {}
        self.last_bcast_pos = self.height_pos
        self.last_bcast_neg = self.height_neg
        self.pending_dirty: List[int] = []
        self.in_handler = False

    def degree(self) -> int:
        return len(self.nbr_ids)

    def __repr__(self):  # pragma: no cover - debugging aid
        t = {SOURCE: "S", SINK: "T", NORMAL: "N"}[self.vtype]
        return f"Vertex({self.vid}/{t} e={self.excess} h={self.height_pos} hn={self.height_neg})"


def add_neighbour(v: VertexState, w: int) -> int:
    """Materialize w in v's tables with zeroed residuals and mirrors."""
    i = len(v.nbr_ids)
    v.nbr_ids.append(w)
    v.res_out.append(0)
    v.res_in.append(0)
    v.mirror_hpos.append(0)
    v.mirror_hneg.append(0)
    v.sent_hpos.append(UNSENT)
    v.sent_hneg.append(UNSENT)
    v.peer_pos.append(-1)
    v.nbr_index[w] = i
    return i


def slot_of(v: VertexState, w: int) -> int:
    return v.nbr_index.get(w, -1)


def _send(v: VertexState, i: int, kind: int, amount: int, out: list) -> None:
    """Queue a message to neighbour slot i, attaching heights per the
    suppression rule evaluated on the current residuals.

    A height the counterpart does not need (the relevant residual is closed)
    is not frozen at its last value but actively invalidated with INF. A
    stale finite mirror on a closed arc invites the counterpart to push flow
    at a vertex that will bounce it right back, and a crossed push/retract
    pair can then orbit that arc forever; INF parks the flow until a real
    height is re-sent once the residual reopens."""
    if v.res_in[i] > 0:
        hpos = v.height_pos
    else:
        hpos = INF
    v.sent_hpos[i] = hpos
    if v.res_out[i] > 0:
        hneg = v.height_neg
    else:
        hneg = INF
    v.sent_hneg[i] = hneg
    out.append((v.nbr_ids[i], Msg(v.vid, v.peer_pos[i], i, kind, amount, hpos, hneg)))


def push(v: VertexState, i: int, ctx: OpContext, out: list) -> int:
    """Push as much flow (positive or negative) as possible to neighbour
    slot i; a no-op when the height or residual conditions fail. Returns the
    amount moved (negative for deficit pushes)."""
    if not ctx.push_enabled:
        return 0
    amount = 0
    e = v.excess
    if e > 0 and v.height_pos > v.mirror_hpos[i]:
        rc = v.res_out[i]
        if rc > 0:
            amount = e if e < rc else rc
    elif e < 0 and v.height_neg > v.mirror_hneg[i]:
        rc = v.res_in[i]
        if rc > 0:
            amount = -(-e if -e < rc else rc)
    if amount:
        v.excess = e - amount
        v.res_out[i] -= amount
        v.res_in[i] += amount
        _send(v, i, FLOW, amount, out)
        if v.vtype == NORMAL:
            # The push opened the reverse residual arc, so the opposite
            # height invariant now binds against this neighbour.
            if amount > 0:
                cap = v.mirror_hneg[i] + 1
                if v.height_neg > cap:
                    v.height_neg = cap
            else:
                cap = v.mirror_hpos[i] + 1
                if v.height_pos > cap:
                    v.height_pos = cap
    return amount


def lift(v: VertexState, ctx: OpContext) -> bool:
    """Raise the vertex to the minimum height that gives it a pushable
    neighbour. Only normal vertices with nonzero excess may lift. Returns
    False when every candidate neighbour's mirrored height is still INF
    (a refresh is in flight; the excess waits)."""
    if v.vtype != NORMAL or v.excess == 0:
        raise InvariantViolation(f"lift on vertex {v.vid} without liftable excess")
    positive = v.excess > 0
    res = v.res_out if positive else v.res_in
    mirrors = v.mirror_hpos if positive else v.mirror_hneg
    best = INF + 1
    for i in range(len(res)):
        if res[i] > 0 and mirrors[i] < best:
            best = mirrors[i]
    if best > INF:
        raise InvariantViolation(
            f"vertex {v.vid} holds excess {v.excess} but has no residual arc to relabel toward"
        )
    if best == INF:
        return False
    if positive:
        v.height_pos = best + 1
    else:
        v.height_neg = best + 1
    ctx.lift_count += 1
    return True


def discharge(v: VertexState, ctx: OpContext, out: list) -> None:
    """Drain the vertex's excess: push to every neighbour, lifting between
    passes, until nothing is left. The source and sink attempt each
    neighbour once and stop regardless of remaining excess; a deficit whose
    negative height is INF cannot push and returns immediately.

    The lift minimum is computed in the same pass that attempts the pushes,
    so large neighbour lists are scanned once per round.
    """
    if v.excess < 0 and v.height_neg >= INF:
        return
    n = len(v.nbr_ids)
    normal = v.vtype == NORMAL
    while v.excess != 0:
        positive = v.excess > 0
        if positive:
            res, mirrors = v.res_out, v.mirror_hpos
        else:
            res, mirrors = v.res_in, v.mirror_hneg
        best = INF + 1
        for i in range(n):
            push(v, i, ctx, out)
            if v.excess == 0:
                return
            if res[i] > 0 and mirrors[i] < best:
                best = mirrors[i]
        if not normal or not ctx.lift_enabled:
            return
        if best > INF:
            raise InvariantViolation(
                f"vertex {v.vid} holds excess {v.excess} but has no residual arc to relabel toward"
            )
        if best == INF:
            return  # every candidate mirror is INF; wait for a height refresh
        if positive:
            v.height_pos = best + 1
        else:
            v.height_neg = best + 1
        ctx.lift_count += 1


def restore_height_invariant(v: VertexState, i: int, ctx: OpContext, out: list) -> None:
    """Re-establish the local height invariant against neighbour slot i:
    first try to saturate the arc by pushing, then descend whichever own
    height still sits more than one level above the mirrored height on a
    positive residual."""
    push(v, i, ctx, out)
    if v.vtype != NORMAL:
        return
    cap = v.mirror_hpos[i] + 1
    if v.res_out[i] > 0 and v.height_pos > cap:
        v.height_pos = cap
    cap = v.mirror_hneg[i] + 1
    if v.res_in[i] > 0 and v.height_neg > cap:
        v.height_neg = cap


def broadcast_height_if_needed(
    v: VertexState, out: list, dirty: Tuple[int, ...] = ()
) -> None:
    """Send updated heights to neighbours that need them.

    A full scan runs only when a height changed since the last broadcast;
    otherwise only the ``dirty`` slots (neighbours whose residuals were
    touched by the current handler) are re-checked, which is what re-sends a
    previously suppressed height once the relevant residual reopens.
    """
    hp = v.height_pos
    hn = v.height_neg
    if hp != v.last_bcast_pos or hn != v.last_bcast_neg:
        res_in = v.res_in
        res_out = v.res_out
        sent_p = v.sent_hpos
        sent_n = v.sent_hneg
        for i in range(len(v.nbr_ids)):
            if (res_in[i] > 0 and sent_p[i] != hp) or (
                res_out[i] > 0 and sent_n[i] != hn
            ):
                _send(v, i, FLOW, 0, out)
        v.last_bcast_pos = hp
        v.last_bcast_neg = hn
    elif dirty:
        for i in dirty:
            if (v.res_in[i] > 0 and v.sent_hpos[i] != hp) or (
                v.res_out[i] > 0 and v.sent_hneg[i] != hn
            ):
                _send(v, i, FLOW, 0, out)


def on_new_max_vertex_count(
    v: VertexState, new_count: int, ctx: OpContext, out: list
) -> None:
    """React to growth of the projected vertex count: the source's positive
    height and the sink's negative height rise to the new count, then the
    vertex discharges (new push opportunities may have appeared)."""
    if v.vtype == SOURCE:
        v.height_pos = new_count
        discharge(v, ctx, out)
    elif v.vtype == SINK:
        v.height_neg = new_count
        discharge(v, ctx, out)
    broadcast_height_if_needed(v, out)


def on_edge_changed(
    v: VertexState,
    w: int,
    delta: int,
    ctx: OpContext,
    out: list,
    source_id: int,
    defer: bool = False,
) -> int:
    """Apply a capacity change on the outgoing edge (v, w).

    Loops, edges into the source, and edges out of the sink have no effect
    on the flow and are ignored. Returns the neighbour slot touched, or -1
    when ignored. With ``defer=True`` the trailing discharge/broadcast is
    postponed until :func:`finish_vertex` (used when more work for this
    vertex is already queued).
    """
    if v.vid == w or w == source_id or v.vtype == SINK:
        return -1
    i = v.nbr_index.get(w, -1)
    if i < 0:
        i = add_neighbour(v, w)
        _send(v, i, FLOW, 0, out)  # introduce ourselves to the new neighbour
    v.res_out[i] += delta
    if v.vtype == SOURCE:
        # The source keeps enough excess to saturate all outgoing edges.
        v.excess += delta
    _send(v, i, CAP_OFFSET, delta, out)
    restore_height_invariant(v, i, ctx, out)
    if defer:
        v.pending_dirty.append(i)
    else:
        discharge(v, ctx, out)
        broadcast_height_if_needed(v, out, dirty=(i,))
    return i


def on_message_received(
    v: VertexState, m: Msg, ctx: OpContext, out: list, defer: bool = False
) -> int:
    """Apply one inbound message: refresh mirrors, account the flow or
    capacity offset, return any flow needed to keep the inbound residual
    non-negative (which may leave this vertex with a deficit), then restore
    the height invariant and drain. Returns the sender's slot."""
    i = m.spos
    ids = v.nbr_ids
    if i < 0 or i >= len(ids) or ids[i] != m.sender:
        i = v.nbr_index.get(m.sender, -1)
        if i < 0:
            i = add_neighbour(v, m.sender)
            _send(v, i, FLOW, 0, out)  # reply so the sender learns our heights
    if m.rpos >= 0:
        v.peer_pos[i] = m.rpos
    if m.hpos is not None:
        v.mirror_hpos[i] = m.hpos
    if m.hneg is not None:
        v.mirror_hneg[i] = m.hneg

    res_in = v.res_in
    if m.kind == CAP_OFFSET:
        res_in[i] += m.amount
    else:
        amt = m.amount
        v.res_out[i] += amt
        res_in[i] -= amt
        v.excess += amt

    if res_in[i] < 0:
        # The inbound residual went negative (capacity decrease raced past
        # flow already sent); return enough flow to zero it, possibly going
        # into deficit ourselves.
        back = -res_in[i]
        v.excess -= back
        v.res_out[i] -= back
        res_in[i] = 0
        _send(v, i, FLOW, back, out)

    restore_height_invariant(v, i, ctx, out)

    if v.vtype == NORMAL and v.excess < 0 and v.height_pos > 0:
        # A deficit pins the positive height at zero so the vertex pulls
        # positive flow toward itself instead of being orbited forever.
        v.height_pos = 0

    if defer:
        v.pending_dirty.append(i)
    else:
        discharge(v, ctx, out)
        broadcast_height_if_needed(v, out, dirty=(i,))
    return i


def finish_vertex(v: VertexState, ctx: OpContext, out: list) -> None:
    """Run the discharge/broadcast tail once for a batch of deferred
    handler invocations on the same vertex."""
    discharge(v, ctx, out)
    broadcast_height_if_needed(v, out, dirty=tuple(v.pending_dirty))
    v.pending_dirty.clear()


def relabel_up(v: VertexState, n_projected: int) -> None:
    """Reset heights for the descent pass of a global relabel.

    Everything rises to INF except the fixed points: the source (projected
    count, 0), the sink (0, projected count), and deficit vertices (0, INF).
    Mirrors are reset to INF as well: neighbours' heights were just reset
    too, and a stale finite mirror would cap the descent below the true
    residual distance. Sent-height tracking is aligned so that only vertices
    whose heights differ from INF (the fixed points) broadcast at the start
    of the descent.
    """
    if v.vtype == SOURCE:
        v.height_pos, v.height_neg = n_projected, 0
    elif v.vtype == SINK:
        v.height_pos, v.height_neg = 0, n_projected
    elif v.excess < 0:
        v.height_pos, v.height_neg = 0, INF
    else:
        v.height_pos, v.height_neg = INF, INF
    n = len(v.nbr_ids)
    v.mirror_hpos = [INF] * n
    v.mirror_hneg = [INF] * n
    v.sent_hpos = [INF] * n
    v.sent_hneg = [INF] * n
    v.last_bcast_pos = INF
    v.last_bcast_neg = INF
    v.pending_dirty.clear()
