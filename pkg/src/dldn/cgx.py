"""Column generation over path-pattern columns, followed by 0-1 rounding on the pool."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .csp import pareto_front
from .lp import BuiltinSolver, IpStatus, LinearProgram
from .model import (
    FlowSpec,
    NetworkInstance,
    PathPattern,
    min_delay_to,
    path_feasibility,
    shaping_delay,
)
from .ospf import ospf_admit
from .solution import AdmissionSolution

log = logging.getLogger(__name__)

PRICE_EPS = 1e-6  # relative to R_f
GAP_EPS = 1e-6


@dataclass(frozen=True)
class Column:
    """One DF variable: flow f routed on a path with pattern k."""

    path_pattern: PathPattern
    throughput: int

    @property
    def flow_id(self) -> Hashable:
        return self.path_pattern.flow_id

    @property
    def key(self) -> tuple:
        pp = self.path_pattern
        return (pp.flow_id, pp.nodes, pp.k)

    @property
    def beta(self) -> int:
        return self.path_pattern.beta

    @classmethod
    def build(cls, instance: NetworkInstance, flow: FlowSpec, k: int, nodes) -> "Column":
        pp = path_feasibility(instance, flow, k, nodes)
        if pp is None:
            raise ValueError(f"flow {flow.id!r}: path {tuple(nodes)!r} with pattern {k} misses the deadline")
        return cls(pp, flow.throughput_bps)


@dataclass
class DualValues:
    lam: dict
    mu: dict
    omega: dict

    @classmethod
    def zeros(cls, instance: NetworkInstance, flows: Sequence[FlowSpec]) -> "DualValues":
        return cls({f.id: 0.0 for f in flows}, {a.key: 0.0 for a in instance.arcs},
                   {n.id: 0.0 for n in instance.nodes})


def master_rows(instance: NetworkInstance, flows: Sequence[FlowSpec]) -> tuple[dict, dict, dict, list]:
    flow_row = {f.id: i for i, f in enumerate(flows)}
    off = len(flows)
    arc_row = {a.key: off + i for i, a in enumerate(instance.arcs)}
    off += len(instance.arcs)
    node_row = {n.id: off + i for i, n in enumerate(instance.nodes)}
    names = ([f"route[{f.id}]" for f in flows] + [f"arc[{a.tail},{a.head}]" for a in instance.arcs]
             + [f"buf[{n.id}]" for n in instance.nodes])
    return flow_row, arc_row, node_row, names


def column_vector(col: Column, m: int, flow_row: dict, arc_row: dict, node_row: dict) -> np.ndarray:
    v = np.zeros(m)
    pp = col.path_pattern
    v[flow_row[pp.flow_id]] = 1.0
    for a in pp.arcs:
        v[arc_row[a]] = pp.beta
    for n in pp.nodes:
        v[node_row[n]] = pp.beta
    return v


def dedupe(columns: Sequence[Column]) -> list[Column]:
    seen, out = set(), []
    for c in columns:
        if c.key in seen:
            log.warning("duplicate column %r dropped", c.key)
            continue
        seen.add(c.key)
        out.append(c)
    return out


def build_master(instance: NetworkInstance, flows: Sequence[FlowSpec],
                 columns: Sequence[Column]) -> LinearProgram:
    """Restricted master: route rows (<= 1), arc capacity rows, node buffer rows."""
    columns = dedupe(columns)
    flow_row, arc_row, node_row, names = master_rows(instance, flows)
    m = len(names)
    b = np.concatenate([np.ones(len(flows)), [a.capacity for a in instance.arcs],
                        [n.buffer for n in instance.nodes]])
    A = np.zeros((m, len(columns)))
    for j, col in enumerate(columns):
        A[:, j] = column_vector(col, m, flow_row, arc_row, node_row)
    c = np.array([col.throughput for col in columns], dtype=float)
    # no explicit x <= 1: the route rows imply it and keep the duals a valid certificate
    return LinearProgram(c, A, b, None, None, names,
                         [f"x[{col.flow_id},{k}]" for k, col in enumerate(columns)])


def split_duals(y: np.ndarray, instance: NetworkInstance, flows: Sequence[FlowSpec]) -> DualValues:
    nf, na = len(flows), len(instance.arcs)
    return DualValues({f.id: float(y[i]) for i, f in enumerate(flows)},
                      {a.key: float(y[nf + i]) for i, a in enumerate(instance.arcs)},
                      {n.id: float(y[nf + na + i]) for i, n in enumerate(instance.nodes)})


class FlowPricer:
    """Prices every pattern of one flow from a single Pareto front of (dual cost, delay) paths."""

    def __init__(self, instance: NetworkInstance, flow: FlowSpec):
        self.instance, self.flow = instance, flow
        self.shaping = [shaping_delay(flow, p, instance.cycle) for p in flow.patterns]
        self.betas = [p.beta for p in flow.patterns]
        self.to_dst = min_delay_to(instance, flow.dst)
        self.succ = {v: tuple(a.head for a in arcs) for v, arcs in instance.succ.items()}

    def has_column(self) -> bool:
        best = self.to_dst.get(self.flow.src)
        return best is not None and best + min(self.shaping) <= self.flow.deadline

    def price(self, duals: DualValues) -> tuple[list[Column], float]:
        """Violating columns (one per pattern at most) and an upper estimate of the best reduced cost."""
        f = self.flow
        R = float(f.throughput_bps)
        eps = PRICE_EPS * R
        lam, omega_s = duals.lam.get(f.id, 0.0), duals.omega[f.src]
        head_room = R - lam - min(self.betas) * omega_s
        if head_room <= eps:
            return [], max(0.0, head_room)
        budget = f.deadline - min(self.shaping)
        cost = {(a.tail, a.head): duals.mu[a.key] + duals.omega[a.head] for a in self.instance.arcs}
        front = pareto_front(self.succ, cost, self.instance.arc_delays, budget, f.src, f.dst,
                             self.instance.order, self.to_dst)
        found, best_rc = [], 0.0
        for k, (beta, d) in enumerate(zip(self.betas, self.shaping)):
            room = f.deadline - d
            hit = next((entry for entry in front if entry[1] <= room), None)
            if hit is None:
                continue
            rc = R - lam - beta * omega_s - beta * hit[0]
            best_rc = max(best_rc, rc)
            if rc > eps:
                found.append(Column.build(self.instance, f, k, hit[2]))
        return found, best_rc


def pricing(flow: FlowSpec, k: int, duals: DualValues, instance: NetworkInstance) -> Column | None:
    """Column for pattern k when some delay-feasible path violates its dual constraint."""
    found, _ = FlowPricer(instance, flow).price(duals)
    return next((c for c in found if c.path_pattern.k == k), None)


@dataclass
class CgResult:
    ub: float
    lp_value: float
    columns: list[Column]
    duals: DualValues
    log: list[dict]
    certified: bool
    rejected: list = field(default_factory=list)


def run_cg(instance: NetworkInstance, flows: Sequence[FlowSpec], time_limit: float | None = None,
           solver=None, initial: Sequence[Column] = ()) -> CgResult:
    """Grow the restricted master until no path-pattern column has positive reduced cost.

    ``ub`` is the final LP value when pricing certified optimality. Under a time
    limit it is the best Lagrangian bound seen over complete pricing rounds.
    """
    start = time.monotonic()
    solver = solver or BuiltinSolver()
    pricers = {f.id: FlowPricer(instance, f) for f in flows}
    rejected = [f.id for f in flows if not pricers[f.id].has_column()]
    columns = dedupe(list(initial))
    known = {c.key for c in columns}
    iterations: list[dict] = []
    warm = None
    lagrange_ub = float(sum(f.throughput_bps for f in flows if f.id not in rejected))
    certified = False
    lp_value = 0.0
    duals = DualValues.zeros(instance, flows)
    while True:
        t0 = time.monotonic()
        lp = build_master(instance, flows, columns)
        sol = solver.solve_lp(lp, warm)
        if not sol.optimal:
            log.warning("restricted master ended with status %s", sol.status.value)
            break
        warm = sol.warm
        lp_value = sol.objective
        duals = split_duals(sol.duals, instance, flows)
        added, bound, complete = [], float(lp.b[len(flows):] @ sol.duals[len(flows):]), True
        for f in flows:
            if f.id in rejected:
                continue
            if time_limit is not None and time.monotonic() - start > time_limit:
                complete = False
                break
            found, best_rc = pricers[f.id].price(duals)
            bound += duals.lam[f.id] + best_rc
            for c in found:
                if c.key not in known:
                    known.add(c.key)
                    added.append(c)
        if complete:
            lagrange_ub = min(lagrange_ub, bound)
        columns.extend(added)
        iterations.append({"iter": len(iterations), "columns_added": len(added), "lp_obj": lp_value,
                           "wall_ms": round(1000 * (time.monotonic() - t0), 3)})
        if complete and not added:
            certified = True
            break
        if not complete or (time_limit is not None and time.monotonic() - start > time_limit):
            break
    ub = lp_value if certified else max(lp_value, lagrange_ub)
    return CgResult(ub, lp_value, columns, duals, iterations, certified, rejected)


def optimality_gap(ub: float, z: float) -> float:
    """(UB - Z) / UB in percent, clamped at zero; zero when UB is zero."""
    if ub <= 0:
        return 0.0
    return max(0.0, 100.0 * (ub - z) / ub)


@dataclass
class CgReport:
    iterations: int
    columns_per_iteration: list[int]
    ub: float
    z: float
    gap_percent: float
    wall_time: float
    termination: str
    ilp_status: str = "optimal"
    ilp_nodes: int = 0
    log: list[dict] = field(default_factory=list)
    columns: list = field(default_factory=list, repr=False)  # rounding pool

    def write_csv(self, path) -> None:
        write_iteration_csv(self.log, path)


def write_iteration_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "columns_added", "lp_obj", "wall_ms"])
        for r in rows:
            w.writerow([r["iter"], r["columns_added"], repr(float(r["lp_obj"])), r["wall_ms"]])


def round_ilp(columns: Sequence[Column], instance: NetworkInstance, flows: Sequence[FlowSpec],
              time_limit: float | None = None, ub: float | None = None,
              baseline: AdmissionSolution | None = None, solver=None,
              cg: CgResult | None = None) -> tuple[AdmissionSolution, CgReport]:
    """Solve the 0-1 master over the pool plus the baseline's columns, seeded with the baseline."""
    start = time.monotonic()
    solver = solver or BuiltinSolver()
    if baseline is None:
        baseline = ospf_admit(instance, flows)
    by_id = {f.id: f for f in flows}
    extra = [Column(pp, by_id[fid].throughput_bps)
             for fid, pp in baseline.selections.items() if pp is not None]
    pool = dedupe(list(columns) + [c for c in extra if c.key not in {d.key for d in columns}])
    lp = build_master(instance, flows, pool).as_binary()
    index = {c.key: j for j, c in enumerate(pool)}
    seed = np.zeros(len(pool))
    for c in extra:
        seed[index[c.key]] = 1.0
    res = solver.solve_ip(lp, time_limit=time_limit, initial=seed)
    chosen = {}
    if res.has_incumbent:
        for j in np.flatnonzero(res.x > 0.5):
            chosen[pool[j].flow_id] = pool[j].path_pattern
    if ub is None:
        ub = cg.ub if cg is not None else res.bound
    solution = AdmissionSolution.from_selections(flows, chosen, "cgx")
    z = float(solution.throughput)
    gap = optimality_gap(ub, z)
    solution.meta.update({"UB_bps": ub, "gap_percent": gap})
    iters = cg.log if cg is not None else []
    termination = "converged" if (cg is None or cg.certified) else "time-limit"
    if res.status is IpStatus.TIME_LIMIT:
        termination += "+ilp-time-limit"
    report = CgReport(len(iters), [r["columns_added"] for r in iters], ub, z, gap,
                      time.monotonic() - start, termination, res.status.value, res.nodes, list(iters), pool)
    return solution, report


def cgx_admit(instance: NetworkInstance, flows: Sequence[FlowSpec], time_limit: float = 300.0,
              cg_share: float = 0.7, solver=None) -> tuple[AdmissionSolution, CgReport]:
    """Full pipeline: column generation, then exact rounding over the generated pool."""
    start = time.monotonic()
    cg = run_cg(instance, flows, time_limit * cg_share, solver)
    remaining = max(time_limit - (time.monotonic() - start), 0.0)
    baseline = ospf_admit(instance, flows)
    solution, report = round_ilp(cg.columns, instance, flows, remaining, cg.ub, baseline, solver, cg)
    report.wall_time = time.monotonic() - start
    return solution, report
