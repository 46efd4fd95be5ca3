"""Columnar per-hop trace, per-flow statistics, CSV output and invariant checks."""

from __future__ import annotations

import csv
from array import array
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .dataplane import NodeClock

COLUMNS = ("flow", "seq", "hop", "node", "t_in", "E", "t_out", "q", "d", "cycle", "size")


@dataclass(frozen=True)
class FlowPlan:
    """What the checker needs to know about one admitted flow."""

    flow_id: Hashable
    nodes: tuple[int, ...]  # node indices along the path
    Q: tuple[int, ...]
    P: tuple[int, ...]
    m: int
    b_prime: int
    beta: int
    delay_bound: int
    jitter_bound: int


@dataclass
class FlowStats:
    flow_id: Hashable
    packets: int
    min_e2e: int
    max_e2e: int
    mean_e2e: float
    jitter: int
    bound: int
    delay_bound: int
    faults: int = 0

    @property
    def ok(self) -> bool:
        return (self.packets > 0 and self.faults == 0 and self.jitter <= self.bound
                and self.max_e2e <= self.delay_bound)


class SimTrace:
    def __init__(self, plans: Sequence[FlowPlan], node_ids: Sequence, clocks: dict[int, NodeClock]):
        self.plans = list(plans)
        self.node_ids = list(node_ids)
        self.clocks = clocks
        self.cols = {c: array("q") for c in COLUMNS}
        self._e2e = [array("q") for _ in self.plans]
        self._append = [self.cols[c].append for c in COLUMNS]

    def append(self, flow, seq, hop, node, t_in, E, t_out, q, d, cycle, size=0):
        for add, v in zip(self._append, (flow, seq, hop, node, t_in, E, t_out, q, d, cycle, size)):
            add(v)

    def deliver(self, flow: int, e2e: int) -> None:
        self._e2e[flow].append(e2e)

    def __len__(self) -> int:
        return len(self.cols["flow"])

    def arrays(self) -> dict[str, np.ndarray]:
        return {c: np.frombuffer(self.cols[c], dtype=np.int64) if len(self.cols[c]) else
                np.zeros(0, dtype=np.int64) for c in COLUMNS}

    def e2e(self, flow: int) -> np.ndarray:
        return np.array(self._e2e[flow], dtype=np.int64)

    def flow_stats(self, flow_faults: Sequence[int] | None = None) -> list[FlowStats]:
        out = []
        for i, plan in enumerate(self.plans):
            e = self.e2e(i)
            faults = flow_faults[i] if flow_faults is not None else 0
            if e.size:
                lo, hi = int(e.min()), int(e.max())
                out.append(FlowStats(plan.flow_id, int(e.size), lo, hi, float(e.mean()), hi - lo,
                                     plan.jitter_bound, plan.delay_bound, faults))
            else:
                out.append(FlowStats(plan.flow_id, 0, 0, 0, 0.0, 0, plan.jitter_bound,
                                     plan.delay_bound, faults))
        return out

    def sorted_index(self) -> np.ndarray:
        a = self.arrays()
        return np.lexsort((a["hop"], a["seq"], a["flow"]))

    def write_csv(self, path) -> None:
        a = self.arrays()
        order = self.sorted_index()
        fids = [p.flow_id for p in self.plans]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["flow", "seq", "hop", "node", "t_in_ns", "E_ns", "t_out_ns", "q_ns", "d_ns"])
            cols = [a[c][order].tolist() for c in ("flow", "seq", "hop", "node", "t_in", "E", "t_out", "q", "d")]
            for f, s, h, n, ti, e, to, q, d in zip(*cols):
                w.writerow((fids[f], s, h, self.node_ids[n], ti, e, to, q, d))


def write_stats_csv(stats: Sequence[FlowStats], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["flow", "packets", "min_e2e_ns", "max_e2e_ns", "mean_e2e_ns", "jitter_ns", "bound_ns", "ok"])
        for s in stats:
            w.writerow([s.flow_id, s.packets, s.min_e2e, s.max_e2e, f"{s.mean_e2e:.3f}", s.jitter, s.bound,
                        int(s.ok)])


@dataclass
class InvariantReport:
    violations: list[str] = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    packets: int = 0
    damper_pairs: int = 0
    same_cycle_pairs: int = 0
    same_cycle_pairs_long: int = 0  # pairs on paths with at least 4 hops
    merged_pairs: int = 0  # same-cycle pairs with a non-zero eligibility gap
    max_queue_ratio: float = 0.0  # max over packets of q / (2 * local cycle)

    @property
    def ok(self) -> bool:
        return not self.counts

    def flag(self, check: str, message: str, n: int = 1) -> None:
        self.counts[check] = self.counts.get(check, 0) + n
        if len(self.violations) < 200:
            self.violations.append(f"{check}: {message}")


def _boundaries(clock: NodeClock, n: np.ndarray) -> np.ndarray:
    return clock.offset + (n * clock.T * clock._scale + 10**9 // 2) // 10**9


def check_invariants(trace: SimTrace) -> InvariantReport:
    """Replay the trace and verify the damper data-plane guarantees packet by packet.

    Checks: constant per-pair delay, constant eligibility offset per hop, the
    same-cycle gap bound and its preservation along the path, the two-cycle
    queuing bound, the per-cycle reservation bound, and time ordering.
    """
    rep = InvariantReport()
    a = trace.arrays()
    if not a["flow"].size:
        return rep
    order = trace.sorted_index()
    cols = {c: v[order] for c, v in a.items()}
    flow_starts = np.searchsorted(cols["flow"], np.arange(len(trace.plans) + 1))
    for fi, plan in enumerate(trace.plans):
        lo, hi = flow_starts[fi], flow_starts[fi + 1]
        if lo == hi:
            continue
        nh = len(plan.nodes)
        seq = cols["seq"][lo:hi]
        # keep packets that left every hop
        uniq, first, counts = np.unique(seq, return_index=True, return_counts=True)
        full = counts == nh
        if not full.all():
            rep.flag("incomplete", f"flow {plan.flow_id!r}: {int((~full).sum())} packets miss hops",
                     int((~full).sum()))
        idx = (lo + first[full])[:, None] + np.arange(nh)[None, :]
        if not idx.size:
            continue
        M = {c: cols[c][idx] for c in ("t_in", "E", "t_out", "q", "d", "cycle", "size", "hop")}
        if (M["hop"] != np.arange(nh)[None, :]).any():
            rep.flag("hops", f"flow {plan.flow_id!r}: hop numbering broken")
            continue
        npk = idx.shape[0]
        rep.packets += npk
        tag = f"flow {plan.flow_id!r}"
        Qv, Pv = np.array(plan.Q), np.array(plan.P)

        # time ordering
        bad = (M["t_in"] > M["E"]) | (M["E"] > M["t_out"])
        if bad.any():
            rep.flag("ordering", f"{tag}: {int(bad.sum())} hop records with t_in > E or E > t_out", int(bad.sum()))
        if nh > 1:
            bad = M["t_out"][:, :-1] > M["t_in"][:, 1:]
            if bad.any():
                rep.flag("ordering", f"{tag}: arrival before departure upstream", int(bad.sum()))

        # constant delay over each complete damper pair
        if nh > 1:
            lhs = M["q"][:, :-1] + Pv[None, 1:] + M["d"][:, 1:]
            rhs = Qv[None, :-1] + Pv[None, 1:]
            bad = lhs != rhs
            rep.damper_pairs += int(lhs.size)
            if bad.any():
                r, h = np.argwhere(bad)[0]
                rep.flag("pair-delay", f"{tag} packet {int(uniq[full][r])} hop {int(h)}: q+p+d = {int(lhs[r, h])}"
                         f" != Q+P = {int(rhs[0, h])}", int(bad.sum()))
        # the trace q must be what the node measured
        bad = M["q"] != M["t_out"] - M["E"]
        if bad.any():
            rep.flag("header", f"{tag}: carried q differs from t_out - E", int(bad.sum()))

        offs = M["E"] - M["E"][:, :1]
        bad = (offs != offs[:1]).any(axis=0)
        if bad.any():
            rep.flag("eligibility-offset", f"{tag}: E^h - E^0 varies across packets at hops "
                     f"{np.flatnonzero(bad).tolist()}", int(bad.sum()))

        for h in range(nh):
            clock = trace.clocks[plan.nodes[h]]
            k = M["cycle"][:, h]
            b_prev, b_k, b_next = (_boundaries(clock, k - 1), _boundaries(clock, k),
                                   _boundaries(clock, k + 1))
            wait = M["t_out"][:, h] - M["E"][:, h]
            two_cycles = b_next - b_prev
            rep.max_queue_ratio = max(rep.max_queue_ratio, float((wait / two_cycles).max()))
            bad = wait > two_cycles
            if bad.any():
                rep.flag("queue-bound", f"{tag} hop {h}: waited more than two cycles", int(bad.sum()))
            bad = wait > Qv[h]
            if bad.any():
                rep.flag("queue-bound", f"{tag} hop {h}: queuing exceeded Q={int(Qv[h])}", int(bad.sum()))
            bad = (M["E"][:, h] < b_prev) | (M["E"][:, h] >= b_k) | (M["t_out"][:, h] > b_next)
            if bad.any():
                rep.flag("cycle", f"{tag} hop {h}: packet outside its cycle window", int(bad.sum()))
            # reservation bound per cycle at this hop
            cyc, inv = np.unique(k, return_inverse=True)
            load = np.bincount(inv, weights=M["size"][:, h])
            if (load > plan.beta).any():
                rep.flag("reservation", f"{tag} hop {h}: {int((load > plan.beta).sum())} cycles carry "
                         f"more than {plan.beta} B", int((load > plan.beta).sum()))
            # same-cycle pairs: neighbours in eligibility order sharing the cycle
            o = np.lexsort((M["E"][:, h], k))
            same = k[o][1:] == k[o][:-1]
            if not same.any():
                continue
            pa, pb = o[:-1][same], o[1:][same]
            gaps = M["E"][pb] - M["E"][pa]
            window = (b_k - b_prev)[pa]
            rep.same_cycle_pairs += int(pa.size)
            if nh >= 4:
                rep.same_cycle_pairs_long += int(pa.size)
            rep.merged_pairs += int((gaps[:, h] != 0).sum())
            bad = gaps[:, h] > window
            if bad.any():
                rep.flag("gap-bound", f"{tag} hop {h}: same-cycle gap above the cycle length", int(bad.sum()))
            bad = (gaps != gaps[:, :1]).any(axis=1)
            if bad.any():
                rep.flag("gap-preserved", f"{tag} hop {h}: same-cycle gap changes along the path", int(bad.sum()))

        e2e = M["t_out"][:, -1] - M["E"][:, 0]
        if int(e2e.max() - e2e.min()) > plan.jitter_bound:
            rep.flag("jitter", f"{tag}: jitter {int(e2e.max() - e2e.min())} > {plan.jitter_bound}")
        if int(e2e.max()) > plan.delay_bound:
            rep.flag("delay", f"{tag}: max delay {int(e2e.max())} > {plan.delay_bound}")
    return rep
