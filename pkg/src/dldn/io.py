"""JSON readers and writers for instance, flow, solution and traffic files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

from .model import (
    DEFAULT_MAX_PACKET,
    ArcSpec,
    CycleConfig,
    FlowSpec,
    NetworkInstance,
    NodeSpec,
    TransmissionPattern,
    ns_to_us,
    pattern_catalog,
    path_feasibility,
    us_to_ns,
)
from .solution import AdmissionSolution

INSTANCE_FORMAT = "dldn-instance/1"
SOLUTION_FORMAT = "dldn-solution/1"


class FormatError(ValueError):
    pass


def _read(source) -> dict:
    if isinstance(source, dict):
        return source
    with open(source, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=False) + "\n", encoding="utf-8")


def _check_format(doc: dict, expected: str) -> None:
    fmt = doc.get("format")
    if fmt != expected:
        raise FormatError(f"expected format {expected!r}, found {fmt!r}")


def instance_from_dict(doc: dict) -> NetworkInstance:
    _check_format(doc, INSTANCE_FORMAT)
    try:
        c = doc["cycle"]
        cycle = CycleConfig(us_to_ns(c["T_us"]), int(c.get("HC", 8)), int(c.get("N", 3)))
        nodes = tuple(
            NodeSpec(n["id"], us_to_ns(n["Q_us"]) if "Q_us" in n else 2 * cycle.T,
                     us_to_ns(n.get("P_us", 0)), int(n["buffer_bytes"]),
                     n.get("port_rate_bps"))
            for n in doc["nodes"])
        arcs = tuple(
            ArcSpec(a["tail"], a["head"], us_to_ns(a["prop_us"]),
                    int(a["capacity_bytes_per_cycle"]), a.get("rate_bps"))
            for a in doc["arcs"])
    except KeyError as exc:
        raise FormatError(f"missing key {exc}") from None
    return NetworkInstance(nodes, arcs, cycle, doc.get("name", ""))


def instance_to_dict(instance: NetworkInstance, flows: Sequence[FlowSpec] | None = None) -> dict:
    doc: dict[str, Any] = {"format": INSTANCE_FORMAT}
    if instance.name:
        doc["name"] = instance.name
    c = instance.cycle
    doc["cycle"] = {"T_us": ns_to_us(c.T), "HC": c.HC, "N": c.N}
    doc["nodes"] = []
    for n in instance.nodes:
        d = {"id": n.id, "Q_us": ns_to_us(n.Q), "P_us": ns_to_us(n.P), "buffer_bytes": n.buffer}
        if n.port_rate_bps is not None:
            d["port_rate_bps"] = n.port_rate_bps
        doc["nodes"].append(d)
    doc["arcs"] = []
    for a in instance.arcs:
        d = {"tail": a.tail, "head": a.head, "prop_us": ns_to_us(a.prop),
             "capacity_bytes_per_cycle": a.capacity}
        if a.rate_bps is not None:
            d["rate_bps"] = a.rate_bps
        doc["arcs"].append(d)
    if flows is not None:
        doc["flows"] = flows_to_list(flows)
    return doc


def flows_from_list(items: list, instance: NetworkInstance) -> list[FlowSpec]:
    flows = []
    for f in items:
        try:
            deadline = us_to_ns(f["deadline_us"])
            max_pkt = int(f.get("max_packet_bytes", DEFAULT_MAX_PACKET))
            rate, burst = int(f["rate_bps"]), int(f["burst_bytes"])
            if "patterns" in f:
                patterns = tuple(TransmissionPattern(int(p["m"]), int(p["b_prime_bytes"]))
                                 for p in f["patterns"])
            else:
                patterns = pattern_catalog(instance, f["src"], f["dst"], rate, burst, deadline, max_pkt)
            flows.append(FlowSpec(f["id"], f["src"], f["dst"], rate, burst,
                                  int(f["throughput_bps"]), deadline, patterns, max_pkt))
        except KeyError as exc:
            raise FormatError(f"flow entry missing key {exc}") from None
    return flows


def flows_to_list(flows: Sequence[FlowSpec]) -> list[dict]:
    return [{
        "id": f.id, "src": f.src, "dst": f.dst, "rate_bps": f.rate_bps,
        "burst_bytes": f.burst_bytes, "throughput_bps": f.throughput_bps,
        "deadline_us": ns_to_us(f.deadline), "max_packet_bytes": f.max_packet_bytes,
        "patterns": [{"m": p.m, "b_prime_bytes": p.b_prime} for p in f.patterns],
    } for f in flows]


def load_instance(path, flows_path=None) -> tuple[NetworkInstance, list[FlowSpec]]:
    """Read an instance file and its flows (embedded, or from a separate flows file)."""
    doc = _read(path)
    instance = instance_from_dict(doc)
    items = doc.get("flows", [])
    if flows_path is not None:
        fdoc = _read(flows_path)
        _check_format(fdoc, INSTANCE_FORMAT)
        items = fdoc.get("flows", [])
    return instance, flows_from_list(items, instance)


def save_instance(path, instance: NetworkInstance, flows: Sequence[FlowSpec] | None = None) -> None:
    write_json(path, instance_to_dict(instance, flows))


def save_flows(path, flows: Sequence[FlowSpec]) -> None:
    write_json(path, {"format": INSTANCE_FORMAT, "flows": flows_to_list(flows)})


def solution_to_dict(solution: AdmissionSolution, flows: Sequence[FlowSpec]) -> dict:
    by_id = {f.id: f for f in flows}
    entries = []
    for fid, pp in solution.selections.items():
        if pp is None:
            entries.append({"id": fid, "status": "rejected"})
            continue
        p = by_id[fid].patterns[pp.k]
        entries.append({"id": fid, "status": "accepted", "path": list(pp.nodes),
                        "pattern": {"m": p.m, "b_prime_bytes": p.b_prime}})
    doc = {"format": SOLUTION_FORMAT, "algorithm": solution.algorithm, "flows": entries,
           "Th_bps": solution.throughput}
    for key in ("UB_bps", "gap_percent"):
        if key in solution.meta:
            doc[key] = solution.meta[key]
    return doc


def solution_from_dict(doc: dict, instance: NetworkInstance,
                       flows: Sequence[FlowSpec]) -> AdmissionSolution:
    _check_format(doc, SOLUTION_FORMAT)
    by_id = {f.id: f for f in flows}
    chosen = {}
    for e in doc["flows"]:
        fid = e["id"]
        if fid not in by_id:
            raise FormatError(f"solution references unknown flow {fid!r}")
        if e["status"] != "accepted":
            continue
        flow = by_id[fid]
        want = (int(e["pattern"]["m"]), int(e["pattern"]["b_prime_bytes"]))
        ks = [k for k, p in enumerate(flow.patterns) if (p.m, p.b_prime) == want]
        if not ks:
            raise FormatError(f"flow {fid!r}: pattern {want} not in its catalog")
        try:
            pp = path_feasibility(instance, flow, ks[0], e["path"])
        except ValueError as exc:
            raise FormatError(f"flow {fid!r}: {exc}") from None
        if pp is None:
            raise FormatError(f"flow {fid!r}: selected path misses the deadline")
        chosen[fid] = pp
    meta = {k: doc[k] for k in ("UB_bps", "gap_percent") if k in doc}
    return AdmissionSolution.from_selections(flows, chosen, doc.get("algorithm", "cgx"), **meta)


def load_solution(path, instance: NetworkInstance, flows: Sequence[FlowSpec]) -> AdmissionSolution:
    return solution_from_dict(_read(path), instance, flows)


def save_solution(path, solution: AdmissionSolution, flows: Sequence[FlowSpec]) -> None:
    write_json(path, solution_to_dict(solution, flows))


def load_traffic(path) -> list[dict]:
    """Best-effort background flows: ``[{src, dst, rate_bps, packet_bytes}]``."""
    doc = _read(path)
    items = doc["background"] if isinstance(doc, dict) else doc
    return [{"src": b["src"], "dst": b["dst"], "rate_bps": int(b["rate_bps"]),
             "packet_bytes": int(b.get("packet_bytes", 1500))} for b in items]
