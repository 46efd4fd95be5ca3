"""Admission decisions shared by the CGX and OSPF control planes."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

from .model import FlowSpec, NetworkInstance, PathPattern, path_feasibility


@dataclass
class AdmissionSolution:
    """Per-flow choice: a PathPattern when accepted, None when rejected."""

    selections: dict[Hashable, PathPattern | None]
    algorithm: str = "cgx"
    throughput: int = 0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_selections(cls, flows: Sequence[FlowSpec], chosen: Mapping[Hashable, PathPattern],
                        algorithm: str, **meta) -> "AdmissionSolution":
        selections = {f.id: chosen.get(f.id) for f in flows}
        th = sum(f.throughput_bps for f in flows if selections[f.id] is not None)
        return cls(selections, algorithm, th, dict(meta))

    @property
    def accepted(self) -> list[Hashable]:
        return [fid for fid, pp in self.selections.items() if pp is not None]


def reservation_loads(solution: AdmissionSolution) -> tuple[dict, dict]:
    """Integer byte loads per arc and per node implied by accepted selections."""
    arc_load: dict = defaultdict(int)
    node_load: dict = defaultdict(int)
    for pp in solution.selections.values():
        if pp is None:
            continue
        for a in pp.arcs:
            arc_load[a] += pp.beta
        for v in pp.nodes:
            node_load[v] += pp.beta
    return dict(arc_load), dict(node_load)


def check_solution(instance: NetworkInstance, flows: Sequence[FlowSpec],
                   solution: AdmissionSolution) -> list[str]:
    """Re-verify routing, delay and capacity constraints in exact integer arithmetic."""
    problems = []
    by_id = {f.id: f for f in flows}
    for fid, pp in solution.selections.items():
        if fid not in by_id:
            problems.append(f"flow {fid!r}: unknown flow")
            continue
        if pp is None:
            continue
        try:
            again = path_feasibility(instance, by_id[fid], pp.k, pp.nodes)
        except ValueError as exc:
            problems.append(f"flow {fid!r}: {exc}")
            continue
        if again is None:
            problems.append(f"flow {fid!r}: selection misses its deadline")
        elif again != pp:
            problems.append(f"flow {fid!r}: stored delay/reservation is stale")
    arc_load, node_load = reservation_loads(solution)
    for a, load in sorted(arc_load.items(), key=repr):
        if a not in instance.arc:
            continue
        if load > instance.arc[a].capacity:
            problems.append(f"arc {a[0]!r}->{a[1]!r}: load {load} exceeds capacity {instance.arc[a].capacity}")
    for v, load in sorted(node_load.items(), key=repr):
        if v in instance.node and load > instance.node[v].buffer:
            problems.append(f"node {v!r}: load {load} exceeds buffer {instance.node[v].buffer}")
    th = sum(by_id[fid].throughput_bps for fid in solution.accepted if fid in by_id)
    if th != solution.throughput:
        problems.append(f"throughput {solution.throughput} does not match accepted flows ({th})")
    return problems
