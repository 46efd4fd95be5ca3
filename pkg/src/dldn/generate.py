"""Seeded random instances: topology with capacity levels, and random flow demands."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .model import (
    ArcSpec,
    CycleConfig,
    FlowSpec,
    NetworkInstance,
    NodeSpec,
    pattern_catalog,
)

GBPS = 10**9


@dataclass(frozen=True)
class GenSpec:
    nodes: int = 50
    links: int = 106
    max_prop_ns: int = 40_000
    level: int = 10
    flows: int = 100
    deadline_ns: int = 1_000_000
    burst_bytes: int = 1500
    throughput_gbps: tuple[int, int] = (1, 10)
    seed: int = 0
    T_ns: int = 10_000
    HC: int = 8
    N: int = 3
    P_ns: int = 1_000
    max_packet_bytes: int = 1500
    name: str = field(default="")

    def violations(self) -> list[str]:
        out = []
        if self.nodes < 2:
            out.append("need at least 2 nodes")
        if self.links < self.nodes - 1:
            out.append(f"{self.links} links cannot connect {self.nodes} nodes")
        if self.links > self.nodes * (self.nodes - 1) // 2:
            out.append(f"{self.links} links exceed the simple-graph maximum for {self.nodes} nodes")
        if not 1 <= self.level <= 10:
            out.append(f"capacity level {self.level} outside 1..10")
        if self.flows < 0:
            out.append("flow count must be >= 0")
        lo, hi = self.throughput_gbps
        if not 0 < lo <= hi:
            out.append(f"bad throughput range {self.throughput_gbps}")
        if self.max_prop_ns < 1 or self.T_ns <= 0 or self.deadline_ns <= 0 or self.burst_bytes <= 0:
            out.append("durations and burst must be positive")
        if self.N < 3 or self.HC < 1:
            out.append("need N >= 3 and HC >= 1")
        return out


def generate_topology(spec: GenSpec) -> NetworkInstance:
    """Random spanning tree plus uniformly drawn extra links, each link giving two arcs."""
    bad = spec.violations()
    if bad:
        raise ValueError("; ".join(bad))
    rng = random.Random(f"topology/{spec.seed}")
    n = spec.nodes
    perm = list(range(n))
    rng.shuffle(perm)
    links = set()
    for i in range(1, n):
        u, v = perm[i], perm[rng.randrange(i)]
        links.add((min(u, v), max(u, v)))
    while len(links) < spec.links:
        u, v = rng.sample(range(n), 2)
        links.add((min(u, v), max(u, v)))
    rate = spec.level * 100 * GBPS
    capacity = rate * spec.T_ns // (8 * GBPS)
    buffer = spec.level * 10**7 // 8  # level x 10 megabit
    cycle = CycleConfig(spec.T_ns, spec.HC, spec.N)
    nodes = tuple(NodeSpec(v, 2 * spec.T_ns, spec.P_ns, buffer) for v in range(n))
    arcs = []
    for u, v in sorted(links):
        prop = rng.randint(1, spec.max_prop_ns)
        arcs.append(ArcSpec(u, v, prop, capacity, rate))
        arcs.append(ArcSpec(v, u, prop, capacity, rate))
    name = spec.name or f"rand-n{n}-l{spec.links}-lvl{spec.level}-s{spec.seed}"
    return NetworkInstance(nodes, tuple(arcs), cycle, name)


def generate_flows(spec: GenSpec, instance: NetworkInstance) -> list[FlowSpec]:
    """Random origin/destination pairs with integer-Gb/s throughput and a shared deadline."""
    rng = random.Random(f"flows/{spec.seed}")
    ids = sorted(instance.node, key=instance.order.__getitem__)
    lo, hi = spec.throughput_gbps
    flows = []
    for i in range(spec.flows):
        src, dst = rng.sample(ids, 2)
        r = rng.randint(lo, hi) * GBPS
        patterns = pattern_catalog(instance, src, dst, r, spec.burst_bytes, spec.deadline_ns,
                                   spec.max_packet_bytes)
        flows.append(FlowSpec(i, src, dst, r, spec.burst_bytes, r, spec.deadline_ns, patterns,
                              spec.max_packet_bytes))
    return flows
