"""Quiescent-state invariant scanner.

All checks here are defined at quiescence: the engine is frozen, every
message delivered, every handler complete. The scanner walks every vertex
and reports violations as human-readable strings (empty list = clean).

Checked per vertex and per neighbour slot:

* residual capacities are non-negative and symmetric across the pair;
* residual symmetry sums match the aggregate stored capacities (skew
  symmetry), excluding pairs the algorithm ignores (loops, edges into the
  source, edges out of the sink);
* normal vertices hold zero excess; a deficit pins the positive height at 0;
* source/sink heights sit at their fixed points;
* the height invariant holds along every positive residual arc, for both
  the positive and the negative height (the sink is exempt from the
  negative-height rule, mirroring the source's exemption from pushing
  positive flow back);
* mirrored heights match the counterpart's true heights wherever the
  residual that makes them relevant is positive, and match the
  counterpart's last transmitted value unconditionally.
"""

from __future__ import annotations

from typing import Dict, List

from . import vertex as vx

__all__ = ["scan"]


def scan(engine) -> List[str]:
    if not engine.detect_quiescence():
        raise RuntimeError("invariant scan requires a quiescent engine")
    errors: List[str] = []
    err = errors.append

    verts: Dict[int, vx.VertexState] = dict(engine.vertices_items())
    caps = engine.store.caps
    s = engine.source
    t = engine.sink
    n_max = engine.store.n_max

    def alg_cap(u: int, w: int) -> int:
        if u == w or w == s or u == t:
            return 0
        return caps.get((u, w), 0)

    for vid, v in verts.items():
        if v.height_pos < 0 or v.height_neg < 0:
            err(f"vertex {vid}: negative height")
        if v.vtype == vx.NORMAL and v.excess != 0:
            if v.excess > 0 or v.height_neg < vx.INF:
                err(f"vertex {vid}: normal vertex holds excess {v.excess}")
            else:
                # A stranded deficit (negative height INF) is the one state
                # that may legitimately rest with nonzero excess; it still
                # counts as a violation for conservation purposes below.
                err(f"vertex {vid}: stranded deficit {v.excess}")
        if v.excess < 0 and v.height_pos != 0:
            err(f"vertex {vid}: deficit with positive height {v.height_pos}")
        if v.vtype == vx.SOURCE:
            if v.height_pos < n_max:
                err(f"source height {v.height_pos} below vertex count {n_max}")
            if v.height_neg != 0:
                err(f"source negative height {v.height_neg} != 0")
        if v.vtype == vx.SINK:
            if v.height_pos != 0:
                err(f"sink height {v.height_pos} != 0")
            if v.height_neg < n_max:
                err(f"sink negative height {v.height_neg} below vertex count {n_max}")

        ids = v.nbr_ids
        for i in range(len(ids)):
            wid = ids[i]
            ro = v.res_out[i]
            ri = v.res_in[i]
            if ro < 0:
                err(f"edge ({vid},{wid}): negative outbound residual {ro}")
            w = verts.get(wid)
            if w is None:
                err(f"edge ({vid},{wid}): neighbour never materialized")
                continue
            j = vx.slot_of(w, vid)
            if j < 0:
                err(f"edge ({vid},{wid}): neighbour tables are asymmetric")
                continue
            if ro != w.res_in[j]:
                err(
                    f"edge ({vid},{wid}): residual mismatch {ro} != {w.res_in[j]}"
                )
            expected = alg_cap(vid, wid) + alg_cap(wid, vid)
            if ro + ri != expected:
                err(
                    f"pair ({vid},{wid}): residual sum {ro + ri} != capacity sum {expected}"
                )
            # Mirror freshness where it matters.
            if ro > 0 and v.mirror_hpos[i] != w.height_pos:
                err(
                    f"edge ({vid},{wid}): stale height mirror "
                    f"{v.mirror_hpos[i]} != {w.height_pos}"
                )
            if ri > 0 and v.mirror_hneg[i] != w.height_neg:
                err(
                    f"edge ({vid},{wid}): stale negative-height mirror "
                    f"{v.mirror_hneg[i]} != {w.height_neg}"
                )
            # Mirrors always equal the last transmitted value.
            if w.sent_hpos[j] != vx.UNSENT and v.mirror_hpos[i] != w.sent_hpos[j]:
                err(
                    f"edge ({vid},{wid}): mirror {v.mirror_hpos[i]} != "
                    f"last sent {w.sent_hpos[j]}"
                )
            if w.sent_hneg[j] != vx.UNSENT and v.mirror_hneg[i] != w.sent_hneg[j]:
                err(
                    f"edge ({vid},{wid}): negative mirror {v.mirror_hneg[i]} != "
                    f"last sent {w.sent_hneg[j]}"
                )
            # Height invariant along positive residual arcs.
            if ro > 0 and v.height_pos > w.height_pos + 1:
                err(
                    f"arc ({vid},{wid}): height {v.height_pos} > "
                    f"{w.height_pos} + 1 with residual {ro}"
                )
            # Negative-height invariant along inbound residual arcs (t exempt).
            if ri > 0 and v.vtype != vx.SINK and v.height_neg > w.height_neg + 1:
                err(
                    f"arc ({wid},{vid}): negative height {v.height_neg} > "
                    f"{w.height_neg} + 1 with residual {ri}"
                )

    stuck = any(
        v.excess < 0 and v.height_neg >= vx.INF
        for v in verts.values()
        if v.vtype == vx.NORMAL
    )
    if not stuck:
        total = sum(v.excess for v in verts.values() if v.vtype == vx.NORMAL)
        if total != 0:
            err(f"normal excess does not conserve: sum {total}")

    return errors
