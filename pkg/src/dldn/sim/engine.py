"""Event-driven run of shaped flows through damper-equipped, gate-controlled ports."""

from __future__ import annotations

import heapq
import logging
import random
from array import array
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..model import FlowSpec, NetworkInstance, e2e_bounds
from ..solution import AdmissionSolution
from .dataplane import (
    DamperHeader,
    IngressShaper,
    NodeClock,
    PortScheduler,
    QueueBoundFault,
    compute_eligibility,
    packetize,
    serialization_ns,
)
from .trace import FlowPlan, FlowStats, SimTrace

log = logging.getLogger(__name__)

# event kinds
_SRC, _ELIG, _GATE, _BE_SRC, _BE_ARR, _KICK = range(6)


class AdmissionMismatch(ValueError):
    """The admission does not fit the instance the simulator was given."""


@dataclass
class SimConfig:
    horizon_ns: int
    seed: int = 0
    drift_ppm: Mapping | None = None
    offsets: Mapping | None = None
    be_queue_bytes: int = 64_000
    # per-flow reservation phase (cycle index modulo m); random when absent
    phases: Mapping | None = None


@dataclass
class SimResult:
    trace: SimTrace
    stats: list[FlowStats]
    faults: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    hp_dropped: int = 0
    be_delivered: int = 0
    be_dropped: int = 0

    @property
    def ok(self) -> bool:
        return not self.faults and all(s.ok for s in self.stats)


class _Port:
    __slots__ = ("sched", "node", "next", "prop", "P_next", "be", "be_bytes", "kick")

    def __init__(self, sched, node, nxt, prop, P_next):
        self.sched, self.node, self.next, self.prop, self.P_next = sched, node, nxt, prop, P_next
        self.be = deque()
        self.be_bytes = 0
        self.kick = False


def check_admission(instance: NetworkInstance, flows: Sequence[FlowSpec],
                    admission: AdmissionSolution) -> tuple[list[str], list[str]]:
    """Errors that make a run meaningless, and warnings about worst-case reservations.

    The hard requirement is that the per-cycle shaped bytes of all flows on a
    link can be serialized within one cycle.
    """
    errors, warnings = [], []
    by_id = {f.id: f for f in flows}
    shaped: dict = {}
    worst: dict = {}
    for fid, pp in admission.selections.items():
        if pp is None:
            continue
        f = by_id.get(fid)
        if f is None:
            errors.append(f"flow {fid!r}: not in the flow list")
            continue
        if pp.k >= len(f.patterns):
            errors.append(f"flow {fid!r}: pattern index {pp.k} out of range")
            continue
        if pp.nodes[0] != f.src or pp.nodes[-1] != f.dst:
            errors.append(f"flow {fid!r}: path does not join its endpoints")
        for a in pp.arcs:
            if a not in instance.arc:
                errors.append(f"flow {fid!r}: path uses missing arc {a[0]!r}->{a[1]!r}")
                continue
            p = f.patterns[pp.k]
            shaped[a] = shaped.get(a, 0) + p.b_prime
            worst[a] = worst.get(a, 0) + p.beta
    T = instance.cycle.T
    for a, load in sorted(shaped.items(), key=repr):
        per_cycle = instance.link_rate(instance.arc[a]) * T // (8 * 10**9)
        if load > per_cycle:
            errors.append(f"arc {a[0]!r}->{a[1]!r}: {load} B shaped per cycle but only {per_cycle} B fit in T")
        if worst[a] > instance.arc[a].capacity:
            warnings.append(f"arc {a[0]!r}->{a[1]!r}: worst-case reservation {worst[a]} B exceeds "
                            f"capacity {instance.arc[a].capacity} B; merged cycles may overrun")
    return errors, warnings


def _be_route(instance: NetworkInstance, src, dst) -> list | None:
    prev = {src: None}
    frontier = deque([src])
    while frontier:
        v = frontier.popleft()
        if v == dst:
            break
        for a in instance.succ[v]:
            if a.head not in prev:
                prev[a.head] = v
                frontier.append(a.head)
    if dst not in prev:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def run_simulation(instance: NetworkInstance, flows: Sequence[FlowSpec],
                   admission: AdmissionSolution, traffic: Sequence[dict] = (),
                   config: SimConfig | None = None, *, horizon_ns: int | None = None,
                   seed: int | None = None) -> SimResult:
    """Simulate every admitted flow as a greedy leaky-bucket source plus Poisson best-effort load."""
    if config is None:
        if horizon_ns is None:
            raise ValueError("need a horizon")
        config = SimConfig(horizon_ns, seed or 0)
    errors, warnings = check_admission(instance, flows, admission)
    if errors:
        raise AdmissionMismatch("; ".join(errors))
    T, N = instance.cycle.T, instance.cycle.N
    hc_span = instance.cycle.HC * T
    if config.horizon_ns < 3 * hc_span:
        warnings.append(f"horizon {config.horizon_ns} ns is shorter than 3 hypercycles ({3 * hc_span} ns)")
    for w in warnings:
        log.info(w)

    node_ids = sorted(instance.node, key=instance.order.__getitem__)
    nidx = {v: i for i, v in enumerate(node_ids)}
    clk_rng = random.Random(f"clock/{config.seed}")
    drift = config.drift_ppm or {}
    clocks = {}
    for v in node_ids:
        off = clk_rng.randrange(T)
        if config.offsets is not None and v in config.offsets:
            off = config.offsets[v]
        clocks[v] = NodeClock(T, off, drift.get(v, 0.0))

    ports: list[_Port] = []
    arc_port: dict = {}

    def arc_port_index(u, v) -> int:
        if (u, v) not in arc_port:
            arc = instance.arc[(u, v)]
            sched = PortScheduler(clocks[u], instance.link_rate(arc), N)
            arc_port[(u, v)] = len(ports)
            ports.append(_Port(sched, nidx[u], v, arc.prop, instance.node[v].P))
        return arc_port[(u, v)]

    # -- admitted flows ------------------------------------------------------
    plans: list[FlowPlan] = []
    shapers, hop_ports, sources = [], [], []
    src_rng = random.Random(f"sources/{config.seed}")
    for f in flows:
        pp = admission.selections.get(f.id)
        if pp is None:
            continue
        pattern = f.patterns[pp.k]
        hops = []
        for u, v in pp.arcs:
            hops.append(arc_port_index(u, v))
        egw = pp.nodes[-1]
        sched = PortScheduler(clocks[egw], instance.client_port_rate(egw), N)
        hops.append(len(ports))
        ports.append(_Port(sched, nidx[egw], None, 0, 0))
        phase = src_rng.randrange(pattern.m)
        if config.phases is not None and f.id in config.phases:
            phase = config.phases[f.id]
        shapers.append(IngressShaper(clocks[f.src], pattern.m, pattern.b_prime, phase))
        hop_ports.append(hops)
        period_num = f.burst_bytes * 8 * 10**9
        start = src_rng.randrange(max(1, period_num // f.rate_bps))
        sources.append((start, period_num, f.rate_bps, packetize(f.burst_bytes, f.max_packet_bytes)))
        delay_bound, jitter_bound = e2e_bounds(pp, instance, include_propagation=True)
        plans.append(FlowPlan(
            f.id, tuple(nidx[v] for v in pp.nodes),
            tuple(instance.node[v].Q for v in pp.nodes), tuple(instance.node[v].P for v in pp.nodes),
            pattern.m, pattern.b_prime, pattern.beta, delay_bound, jitter_bound))

    # -- best-effort flows ----------------------------------------------------
    be_flows = []
    for b in traffic:
        route = _be_route(instance, b["src"], b["dst"])
        if route is None or len(route) < 2:
            warnings.append(f"best-effort flow {b['src']!r}->{b['dst']!r} has no route; ignored")
            continue
        be_flows.append((route, [arc_port_index(u, v) for u, v in zip(route[:-1], route[1:])],
                         int(b["packet_bytes"]), int(b["rate_bps"])))
    be_rng = random.Random(f"best-effort/{config.seed}")

    # -- state -----------------------------------------------------------------
    heap: list = []
    seqno = 0

    def push(t, prio, kind, x, y=0):
        nonlocal seqno
        heapq.heappush(heap, (t, prio, seqno, kind, x, y))
        seqno += 1

    p_flow, p_seq, p_size, p_hop = array("q"), array("q"), array("q"), array("q")
    p_tin, p_E, p_E0 = array("q"), array("q"), array("q")
    flow_seq = [0] * len(plans)
    trace = SimTrace(plans, node_ids, {nidx[v]: clocks[v] for v in node_ids})
    rec = trace.append
    faults: list[str] = []
    flow_faults = [0] * len(plans)
    occupancy = [0] * len(node_ids)
    pending_out: list[list] = [[] for _ in node_ids]
    buffer_cap = [instance.node[v].buffer for v in node_ids]
    hp_dropped = 0
    be_pkts: list[list] = []
    be_delivered = be_dropped = 0
    horizon = config.horizon_ns

    for fi, (start, _, _, _) in enumerate(sources):
        push(start, 0, _SRC, fi, 0)
    for bi, (route, _, size, rate) in enumerate(be_flows):
        push(be_rng.randrange(max(1, size * 8 * 10**9 // rate)), 0, _BE_SRC, bi)

    while heap:
        now, _, _, kind, x, y = heapq.heappop(heap)
        if kind == _ELIG:
            pid = x
            fi, hop = p_flow[pid], p_hop[pid]
            port = ports[hop_ports[fi][hop]]
            node = port.node
            out = pending_out[node]
            while out and out[0][0] <= now:
                occupancy[node] -= heapq.heappop(out)[1]
            size = p_size[pid]
            if occupancy[node] + size > buffer_cap[node]:
                hp_dropped += 1
                flow_faults[fi] += 1
                faults.append(f"buffer overflow at node {node_ids[node]!r}: dropped packet "
                              f"{p_seq[pid]} of flow {plans[fi].flow_id!r}")
                continue
            try:
                _, k, opening = port.sched.enqueue(pid, now, pid)
            except RuntimeError as exc:
                hp_dropped += 1
                flow_faults[fi] += 1
                faults.append(f"node {node_ids[node]!r}: {exc}")
                continue
            occupancy[node] += size
            if len(port.sched.slots[k % N][1]) == 1:
                push(opening, 1, _GATE, hop_ports[fi][hop], k)
        elif kind == _GATE:
            port = ports[x]
            sched = port.sched
            k = y
            b_end = sched.clock.boundary(k + 1)
            t = max(now, sched.link_free)
            node = port.node
            overrun = False
            for pid in sched.open(k):
                size = p_size[pid]
                t += serialization_ns(size, sched.rate_bps)
                if t > b_end and not overrun:
                    overrun = True
                    faults.append(f"cycle overrun on port {node_ids[node]!r}->{port.next!r} in cycle {k}")
                fi, hop = p_flow[pid], p_hop[pid]
                E = p_E[pid]
                q = t - E
                tin = p_tin[pid]
                d = E - tin - (plans[fi].P[hop] if hop else 0)
                rec(fi, p_seq[pid], hop, node, tin, E, t, q, d, k, size)
                heapq.heappush(pending_out[node], (t, size))
                if port.next is None:
                    trace.deliver(fi, t - p_E0[pid])
                    continue
                t_in = t + port.prop
                header = DamperHeader(q, plans[fi].Q[hop])
                try:
                    E_next = compute_eligibility(t_in, port.P_next, header)
                except QueueBoundFault as exc:
                    flow_faults[fi] += 1
                    faults.append(f"flow {plans[fi].flow_id!r} packet {p_seq[pid]} hop {hop + 1}: {exc}")
                    E_next = t_in + port.P_next
                p_hop[pid] = hop + 1
                p_tin[pid] = t_in
                p_E[pid] = E_next
                push(E_next, 0, _ELIG, pid)
            sched.link_free = t
            if port.be and not port.kick:
                port.kick = True
                push(max(t, now), 2, _KICK, x)
        elif kind == _SRC:
            fi, burst_k = x, y
            start, period_num, rate, sizes = sources[fi]
            E0s = shapers[fi].inject(now, sizes)
            for size, E0 in zip(sizes, E0s):
                pid = len(p_flow)
                p_flow.append(fi)
                p_seq.append(flow_seq[fi])
                flow_seq[fi] += 1
                p_size.append(size)
                p_hop.append(0)
                p_tin.append(now)
                p_E.append(E0)
                p_E0.append(E0)
                push(E0, 0, _ELIG, pid)
            t_next = start + (burst_k + 1) * period_num // rate
            if t_next < horizon:
                push(t_next, 0, _SRC, fi, burst_k + 1)
        elif kind == _KICK:
            port = ports[x]
            port.kick = False
            sched = port.sched
            t = max(now, sched.link_free)
            while port.be:
                bpid = port.be[0]
                size = be_pkts[bpid][1]
                ser = serialization_ns(size, sched.rate_bps)
                c = sched.clock.cycle_after(t)
                b_next = sched.clock.boundary(c)
                window_start = sched.clock.boundary(c - 1)
                if window_start > now:
                    # that cycle's gated traffic has not been scheduled yet
                    port.kick = True
                    push(window_start, 2, _KICK, x)
                    break
                if t + ser > b_next:
                    # guard band: best effort never crosses a cycle boundary
                    if ser > sched.clock.local_T(c):
                        port.be.popleft()
                        port.be_bytes -= size
                        be_dropped += 1
                        continue
                    port.kick = True
                    push(b_next, 2, _KICK, x)
                    break
                t += ser
                port.be.popleft()
                port.be_bytes -= size
                be_pkts[bpid][2] += 1
                push(t + port.prop + port.P_next, 0, _BE_ARR, bpid)
            sched.link_free = max(sched.link_free, t)
        elif kind == _BE_ARR:
            bpid = x
            bi, size, h = be_pkts[bpid]
            route, bports = be_flows[bi][0], be_flows[bi][1]
            if h == len(bports):
                be_delivered += 1
                continue
            port = ports[bports[h]]
            if port.be_bytes + size > config.be_queue_bytes:
                be_dropped += 1
                continue
            port.be.append(bpid)
            port.be_bytes += size
            if not port.kick:
                port.kick = True
                push(now, 2, _KICK, bports[h])
        elif kind == _BE_SRC:
            bi = x
            route, bports, size, rate = be_flows[bi]
            be_pkts.append([bi, size, 0])
            push(now, 0, _BE_ARR, len(be_pkts) - 1)
            gap = max(1, round(be_rng.expovariate(rate / (size * 8 * 10**9))))
            if now + gap < horizon:
                push(now + gap, 0, _BE_SRC, bi)

    stats = trace.flow_stats(flow_faults)
    return SimResult(trace, stats, faults, warnings, hp_dropped, be_delivered, be_dropped)
