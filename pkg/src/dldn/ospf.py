"""Shortest-path baseline: inverse-capacity weights, Dijkstra routing, greedy admission."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

from .model import FlowSpec, NetworkInstance, path_feasibility, shaping_delay
from .solution import AdmissionSolution


@dataclass(frozen=True)
class OspfConfig:
    reference: float = 1e8
    # "input" keeps the given flow order; "throughput" sorts by decreasing R_f
    order: str = "input"


def ospf_weights(instance: NetworkInstance, reference: float = 1e8) -> dict[tuple, float]:
    """Arc cost reference / (8 * c_a), with c_a in bytes per cycle."""
    out = {}
    for a in instance.arcs:
        if a.capacity <= 0:
            raise ValueError(f"arc {a.tail!r}->{a.head!r} has non-positive capacity")
        out[a.key] = reference / (8 * a.capacity)
    return out


def dijkstra_path(instance: NetworkInstance, weights: dict, src, dst) -> tuple | None:
    """Minimum-weight path; equal-weight ties go to the lower-ranked node."""
    rank = instance.order
    dist = {src: 0.0}
    prev: dict = {}
    heap = [(0.0, rank[src], src)]
    done = set()
    while heap:
        d, _, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == dst:
            break
        for a in instance.succ[v]:
            w = a.head
            nd = d + weights[a.key]
            if nd < dist.get(w, math.inf):
                dist[w] = nd
                prev[w] = v
                heapq.heappush(heap, (nd, rank[w], w))
    if dst not in done:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return tuple(reversed(path))


def ospf_admit(instance: NetworkInstance, flows: Sequence[FlowSpec],
               config: OspfConfig | None = None) -> AdmissionSolution:
    """Route every flow on its shortest path and admit greedily while capacity remains.

    The pattern is the smallest-reservation one that still meets the deadline on
    that path (ties: shorter shaping delay, then smaller period).
    """
    config = config or OspfConfig()
    weights = ospf_weights(instance, config.reference)
    arc_left = {a.key: a.capacity for a in instance.arcs}
    node_left = {n.id: n.buffer for n in instance.nodes}
    seq = list(flows)
    if config.order == "throughput":
        seq.sort(key=lambda f: -f.throughput_bps)
    elif config.order != "input":
        raise ValueError(f"unknown flow order {config.order!r}")
    chosen = {}
    for f in seq:
        path = dijkstra_path(instance, weights, f.src, f.dst)
        if path is None:
            continue
        options = []
        for k, p in enumerate(f.patterns):
            pp = path_feasibility(instance, f, k, path)
            if pp is not None:
                options.append((pp.beta, shaping_delay(f, p, instance.cycle), p.m, k, pp))
        if not options:
            continue
        pp = min(options, key=lambda o: o[:4])[-1]
        if all(arc_left[a] >= pp.beta for a in pp.arcs) and all(node_left[v] >= pp.beta for v in pp.nodes):
            for a in pp.arcs:
                arc_left[a] -= pp.beta
            for v in pp.nodes:
                node_left[v] -= pp.beta
            chosen[f.id] = pp
    return AdmissionSolution.from_selections(flows, chosen, "ospf")


def throughput_gap(cgx: AdmissionSolution, ospf: AdmissionSolution) -> float | None:
    """Th(CGX) / Th(OSPF) in percent; None when the baseline admits nothing."""
    if ospf.throughput == 0:
        return None
    return 100.0 * cgx.throughput / ospf.throughput
