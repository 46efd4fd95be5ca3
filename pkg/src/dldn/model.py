"""Static domain model: topology, flows, transmission patterns and delay formulas.

All durations are integer nanoseconds. Data sizes are integer bytes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from decimal import Decimal
from functools import cached_property
from typing import Hashable, Iterable, Sequence

NodeId = Hashable

DEFAULT_MAX_PACKET = 1500


def us_to_ns(value) -> int:
    """Convert microseconds to integer nanoseconds, refusing sub-ns inputs."""
    ns = Decimal(str(value)) * 1000
    if ns != ns.to_integral_value():
        raise ValueError(f"{value} us is not a whole number of nanoseconds")
    return int(ns)


def ns_to_us(value: int) -> float | int:
    if value % 1000 == 0:
        return value // 1000
    return value / 1000


@dataclass(frozen=True)
class CycleConfig:
    T: int
    HC: int = 8
    N: int = 3

    def violations(self) -> list[str]:
        out = []
        if self.T <= 0:
            out.append(f"cycle: T must be > 0 (got {self.T})")
        if self.HC < 1:
            out.append(f"cycle: HC must be >= 1 (got {self.HC})")
        if self.N < 3:
            out.append(f"cycle: N must be >= 3 (got {self.N})")
        return out


@dataclass(frozen=True)
class NodeSpec:
    id: NodeId
    Q: int
    P: int
    buffer: int
    # rate of the delivery port towards attached clients (E-GW role)
    port_rate_bps: int | None = None


@dataclass(frozen=True)
class ArcSpec:
    tail: NodeId
    head: NodeId
    prop: int
    capacity: int  # bytes per cycle
    rate_bps: int | None = None

    @property
    def key(self) -> tuple[NodeId, NodeId]:
        return (self.tail, self.head)


@dataclass(frozen=True)
class TransmissionPattern:
    """Regular reservation of ``b_prime`` bytes every ``m`` cycles."""

    m: int
    b_prime: int

    def period(self, cycle: CycleConfig) -> int:
        return self.m * cycle.T

    @property
    def beta(self) -> int:
        return max_reservation(self)


@dataclass(frozen=True)
class FlowSpec:
    id: Hashable
    src: NodeId
    dst: NodeId
    rate_bps: int
    burst_bytes: int
    throughput_bps: int
    deadline: int
    patterns: tuple[TransmissionPattern, ...] = ()
    max_packet_bytes: int = DEFAULT_MAX_PACKET

    def violations(self, cycle: CycleConfig | None = None) -> list[str]:
        out = []
        tag = f"flow {self.id!r}"
        if self.src == self.dst:
            out.append(f"{tag}: source equals destination")
        if self.burst_bytes <= 0:
            out.append(f"{tag}: burst must be > 0")
        if self.throughput_bps <= 0:
            out.append(f"{tag}: throughput must be > 0")
        if self.deadline <= 0:
            out.append(f"{tag}: deadline must be > 0")
        if not self.patterns:
            out.append(f"{tag}: empty pattern set")
        for k, p in enumerate(self.patterns):
            if p.m < 1:
                out.append(f"{tag}: pattern {k} has m < 1")
            elif cycle is not None and cycle.HC % p.m:
                out.append(f"{tag}: pattern {k} period m={p.m} does not divide HC={cycle.HC}")
            if p.b_prime < self.max_packet_bytes:
                out.append(f"{tag}: pattern {k} b_prime below max packet size")
        return out


@dataclass(frozen=True)
class PathPattern:
    """One element of S_f: a delay-feasible (path, pattern) couple for a flow."""

    flow_id: Hashable
    nodes: tuple
    k: int
    total_delay: int
    beta: int

    @property
    def arcs(self) -> tuple[tuple, ...]:
        return tuple(zip(self.nodes[:-1], self.nodes[1:]))


@dataclass(frozen=True)
class NetworkInstance:
    nodes: tuple[NodeSpec, ...]
    arcs: tuple[ArcSpec, ...]
    cycle: CycleConfig
    name: str = field(default="", compare=False)

    @cached_property
    def node(self) -> dict[NodeId, NodeSpec]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def arc(self) -> dict[tuple, ArcSpec]:
        return {a.key: a for a in self.arcs}

    @cached_property
    def order(self) -> dict[NodeId, int]:
        """Rank of each node id, used for deterministic tie-breaking."""
        try:
            ranked = sorted(self.node)
        except TypeError:
            ranked = sorted(self.node, key=repr)
        return {v: i for i, v in enumerate(ranked)}

    @cached_property
    def succ(self) -> dict[NodeId, tuple[ArcSpec, ...]]:
        out: dict[NodeId, list[ArcSpec]] = {n.id: [] for n in self.nodes}
        for a in self.arcs:
            if a.tail in out:
                out[a.tail].append(a)
        return {v: tuple(sorted(lst, key=lambda a: self.order.get(a.head, 0)))
                for v, lst in out.items()}

    @cached_property
    def pred(self) -> dict[NodeId, tuple[ArcSpec, ...]]:
        out: dict[NodeId, list[ArcSpec]] = {n.id: [] for n in self.nodes}
        for a in self.arcs:
            if a.head in out:
                out[a.head].append(a)
        return {v: tuple(lst) for v, lst in out.items()}

    @cached_property
    def arc_delays(self) -> dict[tuple, int]:
        return {a.key: arc_delay(a, self.node[a.tail], self.node[a.head]) for a in self.arcs}

    def link_rate(self, arc: ArcSpec) -> int:
        """Serialization rate of an arc; defaults to exactly one capacity per cycle."""
        if arc.rate_bps is not None:
            return arc.rate_bps
        return arc.capacity * 8 * 10**9 // self.cycle.T

    def client_port_rate(self, v: NodeId) -> int:
        spec = self.node[v]
        if spec.port_rate_bps is not None:
            return spec.port_rate_bps
        rates = [self.link_rate(a) for a in self.succ[v]] + [self.link_rate(a) for a in self.pred[v]]
        if not rates:
            raise ValueError(f"node {v!r} has no links and no port rate")
        return max(rates)


# -- formulas ---------------------------------------------------------------

def arc_delay(arc: ArcSpec, tail: NodeSpec, head: NodeSpec) -> int:
    """Transmission delay of an arc: queuing bound at the tail, processing at the head, propagation."""
    if arc.tail != tail.id or arc.head != head.id:
        raise ValueError(f"arc {arc.tail!r}->{arc.head!r} does not connect {tail.id!r}->{head.id!r}")
    return tail.Q + head.P + arc.prop


def shaping_delay(flow: FlowSpec, pattern: TransmissionPattern, cycle: CycleConfig) -> int:
    """Extra delay seen by the last packet of a maximal burst at the ingress shaper."""
    if pattern.b_prime <= 0:
        raise ValueError("b_prime must be positive")
    chunks = -(-flow.burst_bytes // pattern.b_prime)
    return pattern.m * cycle.T * chunks


def max_reservation(pattern: TransmissionPattern) -> int:
    # a damper may shift a chunk into the following cycle; only uniform patterns can collide
    return 2 * pattern.b_prime if pattern.m == 1 else pattern.b_prime


def sustaining_b_prime(rate_bps: int, m: int, T: int, max_packet: int) -> int:
    """Smallest multiple of the packet size that carries ``rate_bps`` when sent every m cycles."""
    need = -(-rate_bps * m * T // (8 * 10**9))
    packets = max(1, -(-need // max_packet))
    return packets * max_packet


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def path_delay(instance: NetworkInstance, nodes: Sequence) -> int:
    delays = instance.arc_delays
    total = 0
    for u, v in zip(nodes[:-1], nodes[1:]):
        if (u, v) not in delays:
            raise ValueError(f"path uses missing arc {u!r}->{v!r}")
        total += delays[(u, v)]
    return total


def path_feasibility(instance: NetworkInstance, flow: FlowSpec, k: int,
                     nodes: Sequence) -> PathPattern | None:
    """Return the PathPattern when the path fits within the flow's deadline, else None."""
    if k >= len(flow.patterns):
        return None
    nodes = tuple(nodes)
    if len(nodes) < 2 or nodes[0] != flow.src or nodes[-1] != flow.dst:
        raise ValueError(f"path {nodes!r} does not connect {flow.src!r}->{flow.dst!r}")
    if len(set(nodes)) != len(nodes):
        raise ValueError(f"path {nodes!r} is not simple")
    pattern = flow.patterns[k]
    total = path_delay(instance, nodes) + shaping_delay(flow, pattern, instance.cycle)
    if total > flow.deadline:
        return None
    return PathPattern(flow.id, nodes, k, total, max_reservation(pattern))


def e2e_bounds(path_pattern: PathPattern, instance: NetworkInstance,
               include_shaping: bool = False, include_propagation: bool = False) -> tuple[int, int]:
    """(delay bound, jitter bound) for a routed flow.

    Every complete damper pair contributes Q^h + P^{h+1}; the egress node is an
    incomplete pair contributing only its queuing bound, which is also the
    end-to-end jitter bound.
    """
    nodes = path_pattern.nodes
    spec = instance.node
    delay = sum(spec[u].Q + spec[v].P for u, v in zip(nodes[:-1], nodes[1:]))
    last_q = spec[nodes[-1]].Q
    delay += last_q
    if include_propagation:
        delay += sum(instance.arc[a].prop for a in path_pattern.arcs)
    if include_shaping:
        # total_delay already holds the shaping delay on top of the arc delays
        delay += path_pattern.total_delay - path_delay(instance, nodes)
    return delay, last_q


def min_delay_to(instance: NetworkInstance, dst: NodeId) -> dict[NodeId, int]:
    """Shortest arc-delay distance from every node to ``dst``."""
    dist = {dst: 0}
    heap = [(0, instance.order[dst], dst)]
    delays = instance.arc_delays
    while heap:
        d, _, v = heapq.heappop(heap)
        if d > dist.get(v, math.inf):
            continue
        for a in instance.pred[v]:
            nd = d + delays[a.key]
            if nd < dist.get(a.tail, math.inf):
                dist[a.tail] = nd
                heapq.heappush(heap, (nd, instance.order[a.tail], a.tail))
    return dist


def pattern_catalog(instance: NetworkInstance, src: NodeId, dst: NodeId, rate_bps: int,
                    burst_bytes: int, deadline: int,
                    max_packet: int = DEFAULT_MAX_PACKET) -> tuple[TransmissionPattern, ...]:
    """One rate-sustaining pattern per divisor of HC, pruned to those that leave a feasible path.

    When no pattern survives the pruning the full catalog is returned; the flow
    then simply has no feasible column.
    """
    cycle = instance.cycle
    full = tuple(TransmissionPattern(m, sustaining_b_prime(rate_bps, m, cycle.T, max_packet))
                 for m in divisors(cycle.HC))
    best = min_delay_to(instance, dst).get(src)
    if best is None:
        return full
    probe = FlowSpec("_", src, dst, rate_bps, burst_bytes, rate_bps, deadline, full, max_packet)
    kept = tuple(p for p in full if best + shaping_delay(probe, p, cycle) <= deadline)
    return kept or full


def validate_instance(instance: NetworkInstance,
                      flows: Iterable[FlowSpec] = ()) -> list[str]:
    """Every violated structural invariant, as human-readable lines. Empty means well-formed."""
    report = list(instance.cycle.violations())
    seen = set()
    kinds = set()
    for n in instance.nodes:
        if n.id in seen:
            report.append(f"node {n.id!r}: duplicate id")
        seen.add(n.id)
        kinds.add(type(n.id))
        if n.Q <= 0:
            report.append(f"node {n.id!r}: Q must be > 0")
        if n.P < 0:
            report.append(f"node {n.id!r}: P must be >= 0")
        if n.buffer <= 0:
            report.append(f"node {n.id!r}: buffer capacity must be > 0")
    if len(kinds) > 1:
        report.append("nodes: ids mix several types")
    arc_keys = set()
    for a in instance.arcs:
        tag = f"arc {a.tail!r}->{a.head!r}"
        for end in (a.tail, a.head):
            if end not in seen:
                report.append(f"{tag}: endpoint {end!r} is not a node")
        if a.tail == a.head:
            report.append(f"{tag}: self loop")
        if a.key in arc_keys:
            report.append(f"{tag}: duplicate arc")
        arc_keys.add(a.key)
        if a.prop < 0:
            report.append(f"{tag}: propagation delay must be >= 0")
        if a.capacity <= 0:
            report.append(f"{tag}: capacity must be > 0")
        if a.rate_bps is not None and a.rate_bps * instance.cycle.T < a.capacity * 8 * 10**9:
            report.append(f"{tag}: capacity per cycle exceeds what the link rate can serialize in T")
    flow_ids = set()
    for f in flows:
        if f.id in flow_ids:
            report.append(f"flow {f.id!r}: duplicate id")
        flow_ids.add(f.id)
        for end in (f.src, f.dst):
            if end not in seen:
                report.append(f"flow {f.id!r}: endpoint {end!r} is not a node")
        report.extend(f.violations(instance.cycle))
    return report
