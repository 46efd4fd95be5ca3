"""Discrete-event simulation of the shaping and damper data plane."""

from .dataplane import (
    DamperHeader,
    IngressShaper,
    NodeClock,
    PortScheduler,
    QueueBoundFault,
    ReservationOverflow,
    compute_eligibility,
    enqueue_after_eligibility,
    igw_inject,
    packetize,
    record_departure,
)
from .engine import AdmissionMismatch, SimConfig, SimResult, check_admission, run_simulation
from .scenarios import BUNDLES, Bundle, poc_bundle
from .trace import FlowStats, InvariantReport, SimTrace, check_invariants, write_stats_csv

__all__ = [
    "AdmissionMismatch", "BUNDLES", "Bundle", "DamperHeader", "FlowStats", "IngressShaper",
    "InvariantReport", "NodeClock", "PortScheduler", "QueueBoundFault", "ReservationOverflow",
    "SimConfig", "SimResult", "SimTrace", "check_admission", "check_invariants",
    "compute_eligibility", "enqueue_after_eligibility", "igw_inject", "packetize", "poc_bundle",
    "record_departure", "run_simulation", "write_stats_csv",
]
