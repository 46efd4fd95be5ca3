"""Independent reference computations used by the tests.

These deliberately avoid the package's solvers: scipy's HiGHS, networkx path
enumeration, brute-force vertex and subset enumeration.
"""

from __future__ import annotations

import itertools
import random

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from dldn.model import (
    ArcSpec,
    CycleConfig,
    FlowSpec,
    NetworkInstance,
    NodeSpec,
    TransmissionPattern,
    path_feasibility,
    sustaining_b_prime,
)

US = 1000


def random_instance(rng: random.Random, n_nodes: int, extra_links: int, n_flows: int,
                    max_patterns: int = 3, cap_range=(3000, 12000), buf_range=(3000, 20000),
                    deadline_us=(60, 250)):
    T = 10 * US
    cycle = CycleConfig(T, 8, 3)
    nodes = tuple(NodeSpec(i, 2 * T, rng.choice([0, US]), rng.randint(*buf_range)) for i in range(n_nodes))
    links = set()
    for i in range(1, n_nodes):
        links.add((rng.randrange(i), i))
    extra_links = min(extra_links, n_nodes * (n_nodes - 1) // 2 - (n_nodes - 1))
    while len(links) < n_nodes - 1 + extra_links:
        u, v = rng.sample(range(n_nodes), 2)
        if (u, v) not in links and (v, u) not in links:
            links.add((u, v))
    arcs = []
    for u, v in sorted(links):
        cap, prop = rng.randint(*cap_range), rng.randint(1, 40) * US
        arcs += [ArcSpec(u, v, prop, cap), ArcSpec(v, u, prop, cap)]
    inst = NetworkInstance(nodes, tuple(arcs), cycle)
    flows = []
    for i in range(n_flows):
        s, d = rng.sample(range(n_nodes), 2)
        rate = rng.randint(1, 10) * 10**8
        ms = sorted(rng.sample([1, 2, 4, 8], rng.randint(1, max_patterns)))
        pats = tuple(TransmissionPattern(m, sustaining_b_prime(rate, m, T, 1500)) for m in ms)
        flows.append(FlowSpec(i, s, d, rate, rng.choice([1500, 3000]), rate,
                              rng.randint(*deadline_us) * US, pats))
    return inst, flows


def all_path_patterns(inst: NetworkInstance, f: FlowSpec):
    g = nx.DiGraph([a.key for a in inst.arcs])
    if f.src not in g or f.dst not in g:
        return []
    out = []
    for p in nx.all_simple_paths(g, f.src, f.dst):
        for k in range(len(f.patterns)):
            pp = path_feasibility(inst, f, k, p)
            if pp is not None:
                out.append(pp)
    return out


def full_lp_value(inst: NetworkInstance, flows) -> float:
    """LP relaxation over every delay-feasible simple path and pattern, built from scratch."""
    cols = [(f, pp) for f in flows for pp in all_path_patterns(inst, f)]
    if not cols:
        return 0.0
    rows = {("f", f.id): i for i, f in enumerate(flows)}
    for a in inst.arcs:
        rows[("a", a.key)] = len(rows)
    for v in inst.nodes:
        rows[("v", v.id)] = len(rows)
    b = np.zeros(len(rows))
    for f in flows:
        b[rows[("f", f.id)]] = 1
    for a in inst.arcs:
        b[rows[("a", a.key)]] = a.capacity
    for v in inst.nodes:
        b[rows[("v", v.id)]] = v.buffer
    A = np.zeros((len(rows), len(cols)))
    c = np.zeros(len(cols))
    for j, (f, pp) in enumerate(cols):
        c[j] = f.throughput_bps
        A[rows[("f", f.id)], j] = 1
        for a in zip(pp.nodes[:-1], pp.nodes[1:]):
            A[rows[("a", a)], j] += pp.beta
        for v in pp.nodes:
            A[rows[("v", v)], j] += pp.beta
    res = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


def best_assignment(inst: NetworkInstance, flows, options: dict) -> int:
    """Exhaustive search over one-or-none choices per flow with integer capacity checks."""
    by_id = {f.id: f for f in flows}
    ids = [f.id for f in flows]
    best = 0
    for choice in itertools.product(*[[None] + list(options.get(fid, [])) for fid in ids]):
        arc, node = {}, {}
        ok = True
        for pp in choice:
            if pp is None:
                continue
            for a in zip(pp.nodes[:-1], pp.nodes[1:]):
                arc[a] = arc.get(a, 0) + pp.beta
                if arc[a] > inst.arc[a].capacity:
                    ok = False
            for v in pp.nodes:
                node[v] = node.get(v, 0) + pp.beta
                if node[v] > inst.node[v].buffer:
                    ok = False
            if not ok:
                break
        if ok:
            best = max(best, sum(by_id[pp.flow_id].throughput_bps for pp in choice if pp is not None))
    return best


def vertex_optimum(c, A, b, upper=None):
    """Best objective over basic feasible points of {Ax <= b, 0 <= x <= upper}; None if infeasible."""
    m, n = A.shape
    G = [A, -np.eye(n)]
    h = [b, np.zeros(n)]
    if upper is not None:
        fin = np.isfinite(upper)
        G.append(np.eye(n)[fin])
        h.append(upper[fin])
    G, h = np.vstack(G), np.concatenate(h)
    combos = np.array(list(itertools.combinations(range(G.shape[0]), n)))
    M = G[combos]
    rhs = h[combos]
    det = np.linalg.det(M)
    keep = np.abs(det) > 1e-10
    if not keep.any():
        return None
    X = np.linalg.solve(M[keep], rhs[keep][..., None])[..., 0]
    feas = (X @ G.T <= h + 1e-9 * (1 + np.abs(h))).all(axis=1)
    if not feas.any():
        return None
    return float((X[feas] @ c).max())


def random_lp(rng: np.random.Generator, m: int, n: int, *, bounded: bool = True, upper: bool = False):
    """A random ``max c.x, Ax <= b, 0 <= x <= u`` instance; mixed signs exercise phase 1."""
    A = rng.integers(-3, 10, size=(m, n)).astype(float)
    if bounded:
        A[0] = np.abs(A[0]) + 1  # one all-positive row caps every column
    b = rng.integers(-5, 40, size=m).astype(float)
    b[0] = abs(b[0]) + 10
    c = rng.integers(-4, 12, size=n).astype(float)
    u = np.where(rng.random(n) < 0.5, rng.integers(1, 6, size=n), np.inf) if upper else None
    return c, A, b, u


def highs_lp(c, A, b, u=None):
    bounds = [(0, None if u is None or not np.isfinite(u[j]) else u[j]) for j in range(len(c))]
    return linprog(-c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
