"""Canned proof-of-concept scenario: five shaped flows over a chain of core routers."""

from __future__ import annotations

from dataclasses import dataclass

from ..model import (
    ArcSpec,
    CycleConfig,
    FlowSpec,
    NetworkInstance,
    NodeSpec,
    TransmissionPattern,
    path_feasibility,
    sustaining_b_prime,
)
from ..solution import AdmissionSolution

PORT_RATE = 10 * 10**9
PACKET = 350
T_POC = 2_500  # ns; 10 Gb/s moves 3125 B per cycle
Q_POC = 5_000  # ns per hop, i.e. two cycles

_LINKS = [("G1", "C1"), ("G2", "C1"), ("G3", "C3"), ("G4", "C2"), ("G5", "C4"),
          ("C1", "C2"), ("C2", "C3"), ("C3", "C4"),
          ("C4", "E1"), ("C2", "E2"), ("C4", "E3"), ("C3", "E4"), ("C1", "E5")]

# (id, rate, burst, path)
_FLOWS = [
    (1, 2_240_000_000, 1400, ("G1", "C1", "C2", "C3", "C4", "E1")),
    (2, 6_720_000_000, 4200, ("G2", "C1", "C2", "E2")),
    (3, 6_720_000_000, 4200, ("G3", "C3", "C4", "E3")),
    (4, 3_360_000_000, 2100, ("G4", "C2", "C3", "E4")),
    (5, 3_360_000_000, 2100, ("G5", "C4", "C3", "C2", "C1", "E5")),
]

_BACKGROUND = [
    {"src": "G1", "dst": "E1", "rate_bps": 1_000_000_000, "packet_bytes": 200},
    {"src": "G5", "dst": "E5", "rate_bps": 2_000_000_000, "packet_bytes": 500},
    {"src": "G4", "dst": "E2", "rate_bps": 1_000_000_000, "packet_bytes": 300},
    {"src": "E3", "dst": "G3", "rate_bps": 3_000_000_000, "packet_bytes": 1500},
]


@dataclass
class Bundle:
    instance: NetworkInstance
    flows: list[FlowSpec]
    solution: AdmissionSolution
    traffic: list[dict]
    horizon_ns: int


def poc_bundle(horizon_ns: int = 15_000_000) -> Bundle:
    """Five flows whose per-cycle shaped bytes fit every 10 Gb/s link, plus best-effort load.

    Routes are fixed by hand so that no link carries more than 2800 of its 3125
    bytes per cycle. Flows 2 and 3 never share a link.
    """
    names = sorted({v for link in _LINKS for v in link})
    nodes = tuple(NodeSpec(v, Q_POC, 0, 1_000_000, PORT_RATE if v.startswith("E") else None)
                  for v in names)
    capacity = PORT_RATE * T_POC // (8 * 10**9)
    arcs = []
    for u, v in _LINKS:
        arcs.append(ArcSpec(u, v, 0, capacity, PORT_RATE))
        arcs.append(ArcSpec(v, u, 0, capacity, PORT_RATE))
    instance = NetworkInstance(nodes, tuple(arcs), CycleConfig(T_POC, 8, 3), "poc-chain")
    flows, chosen = [], {}
    for fid, rate, burst, path in _FLOWS:
        pattern = TransmissionPattern(1, sustaining_b_prime(rate, 1, T_POC, PACKET))
        f = FlowSpec(fid, path[0], path[-1], rate, burst, rate, 100_000, (pattern,), PACKET)
        flows.append(f)
        chosen[fid] = path_feasibility(instance, f, 0, path)
    solution = AdmissionSolution.from_selections(flows, chosen, "manual")
    return Bundle(instance, flows, solution, [dict(b) for b in _BACKGROUND], horizon_ns)


BUNDLES = {"poc": poc_bundle}
