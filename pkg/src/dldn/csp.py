"""Delay-constrained least-cost paths by label setting over (cost, delay) labels."""

from __future__ import annotations

import heapq
import math
from typing import Hashable, Iterable, Mapping

NodeId = Hashable


def _reverse_min_delay(succ, delay, dst) -> dict:
    pred: dict = {}
    for u, heads in succ.items():
        for v in heads:
            pred.setdefault(v, []).append(u)
    dist = {dst: 0}
    heap = [(0, 0, dst)]
    tick = 1
    while heap:
        d, _, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for u in pred.get(v, ()):
            nd = d + delay[(u, v)]
            if nd < dist.get(u, math.inf):
                dist[u] = nd
                heapq.heappush(heap, (nd, tick, u))
                tick += 1
    return dist


def pareto_front(succ: Mapping[NodeId, Iterable[NodeId]], cost: Mapping, delay: Mapping,
                 budget, src: NodeId, dst: NodeId, order: Mapping | None = None,
                 to_dst: Mapping | None = None) -> list[tuple[float, int, tuple]]:
    """All non-dominated (cost, delay, path) triples from src to dst within ``budget``.

    Sorted by increasing cost and strictly decreasing delay, so the cheapest path
    meeting any tighter budget B is the first entry whose delay is <= B.
    Costs must be non-negative and delays positive; cycles are then dominated.
    """
    if order is None:
        order = {}
    rank = lambda v: order.get(v, 0)  # noqa: E731
    if to_dst is None:
        to_dst = _reverse_min_delay(succ, delay, dst)
    if to_dst.get(src, math.inf) > budget:
        return []
    # label: (cost, delay, node rank, node, parent label index)
    labels: list[tuple] = []
    best_delay: dict = {}
    heap = [(0.0, 0, rank(src), 0, src, -1)]
    seq = 1
    front = []
    while heap:
        c, d, _, _, v, parent = heapq.heappop(heap)
        if d >= best_delay.get(v, math.inf):
            continue
        best_delay[v] = d
        idx = len(labels)
        labels.append((v, parent))
        if v == dst:
            front.append((c, d, idx))
            continue
        for w in succ.get(v, ()):
            nd = d + delay[(v, w)]
            if nd + to_dst.get(w, math.inf) > budget or nd >= best_delay.get(w, math.inf):
                continue
            heapq.heappush(heap, (c + cost[(v, w)], nd, rank(w), seq, w, idx))
            seq += 1

    def walk(idx):
        path = []
        while idx >= 0:
            v, idx = labels[idx]
            path.append(v)
        return tuple(reversed(path))

    return [(c, d, walk(i)) for c, d, i in front]


def csp_shortest_path(succ: Mapping[NodeId, Iterable[NodeId]], cost: Mapping, delay: Mapping,
                      budget, src: NodeId, dst: NodeId,
                      order: Mapping | None = None) -> tuple[tuple, float] | None:
    """Least-cost simple path from src to dst whose total delay is at most ``budget``."""
    front = pareto_front(succ, cost, delay, budget, src, dst, order)
    if not front:
        return None
    c, _, path = front[0]
    return path, c
