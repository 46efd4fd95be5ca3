"""Depth-first branch-and-bound for 0-1 programs, re-using the simplex basis between nodes."""

from __future__ import annotations

import math
import time

import numpy as np

from .model import IntegerSolveResult, IpStatus, LinearProgram, LpStatus
from .simplex import build_simplex

INT_TOL = 1e-6


def is_feasible(lp: LinearProgram, x: np.ndarray) -> bool:
    slack = lp.b - lp.A @ x
    return bool((slack >= -1e-9 * np.maximum(1.0, np.abs(lp.b))).all())


def _greedy_round(lp: LinearProgram, x_lp: np.ndarray, start: np.ndarray | None) -> np.ndarray:
    """Fix columns in order of decreasing LP value while every row stays feasible."""
    x = np.zeros(lp.c.size) if start is None else start.copy()
    load = lp.A @ x
    limit = lp.b + 1e-9 * np.maximum(1.0, np.abs(lp.b))
    order = sorted(range(lp.c.size), key=lambda j: (-x_lp[j], -lp.c[j], j))
    for j in order:
        if x[j] or lp.c[j] <= 0:
            continue
        trial = load + lp.A[:, j]
        if (trial <= limit).all():
            x[j] = 1.0
            load = trial
    return x


def solve_ip_exact(lp: LinearProgram, time_limit: float | None = None,
                   initial: np.ndarray | None = None, node_limit: int | None = None,
                   resort_every: int = 1000) -> IntegerSolveResult:
    """Maximize over 0-1 columns by LP-based branch and bound.

    Terminates with status optimal when the tree is exhausted; otherwise returns
    the incumbent together with the best remaining bound. ``initial`` seeds the
    incumbent (it must be feasible).
    """
    start = time.monotonic()
    lp = lp.as_binary()
    n = lp.c.size
    integral_obj = bool(np.all(lp.c == np.round(lp.c)))

    best_x, best_z = None, -math.inf
    if initial is not None:
        cand = np.round(np.asarray(initial, dtype=float))
        if cand.shape == (n,) and is_feasible(lp, cand):
            best_x, best_z = cand, float(lp.c @ cand)
    if best_x is None and is_feasible(lp, np.zeros(n)):
        best_x, best_z = np.zeros(n), 0.0
    if n == 0:
        z = 0.0 if best_x is not None else -math.inf
        status = IpStatus.OPTIMAL if best_x is not None else IpStatus.INFEASIBLE
        return IntegerSolveResult(status, best_x, z, z, 0, [z])

    sx, _, _ = build_simplex(lp)
    root_status = sx.solve()
    if root_status is LpStatus.INFEASIBLE:
        return IntegerSolveResult(IpStatus.INFEASIBLE, best_x, best_z, best_z, 1, [])

    def prune(bound: float) -> bool:
        if best_x is None:
            return False
        if integral_obj:
            return math.floor(bound + 1e-9 * abs(bound) + 1e-6) <= best_z + 0.5
        return bound <= best_z + 1e-9 * max(1.0, abs(best_z))

    def lp_value() -> float:
        return float(lp.c @ np.clip(sx.x[:n], 0.0, 1.0))

    base_lo, base_up = np.zeros(n), np.ones(n)
    root_z = lp_value() if root_status is LpStatus.OPTIMAL else math.inf
    # open node: (bound, fixings, parent snapshot, parent id)
    stack = [(root_z, (), sx.snapshot(), 0)]
    history: list[float] = []
    nodes = 0
    last_solved = 0
    status = IpStatus.OPTIMAL

    def global_bound() -> float:
        return max(best_z, max((item[0] for item in stack), default=-math.inf))

    while stack:
        history.append(global_bound())
        if time_limit is not None and time.monotonic() - start > time_limit:
            status = IpStatus.TIME_LIMIT
            break
        if node_limit is not None and nodes >= node_limit:
            status = IpStatus.TIME_LIMIT
            break
        if nodes and nodes % resort_every == 0:
            stack.sort(key=lambda item: item[0])
        bound_in, fixings, snap, parent = stack.pop()
        if prune(bound_in):
            continue
        nodes += 1
        if nodes == 1:
            st = root_status
        elif parent == last_solved and fixings:
            j, v = fixings[-1]
            sx.set_bounds(j, v, v)
            st = sx.reoptimize()
        else:
            lo, up = base_lo.copy(), base_up.copy()
            for j, v in fixings:
                lo[j] = up[j] = v
            sx.restore(snap, lo, up)
            st = sx.reoptimize()
        node_id = last_solved = nodes
        if st is LpStatus.INFEASIBLE:
            continue
        if st is not LpStatus.OPTIMAL:
            # unresolved node: stop, keeping its bound in the open set
            status = IpStatus.TIME_LIMIT
            stack.insert(0, (bound_in, fixings, snap, -1))
            break
        z = min(lp_value(), bound_in)
        if prune(z):
            continue
        x = np.clip(sx.x[:n], 0.0, 1.0)
        frac = np.abs(x - np.round(x))
        if (frac <= INT_TOL).all():
            xi = np.round(x)
            if is_feasible(lp, xi) and float(lp.c @ xi) > best_z:
                best_x, best_z = xi, float(lp.c @ xi)
            continue
        if nodes == 1 or nodes % 50 == 0:
            heur = _greedy_round(lp, x, None)
            hz = float(lp.c @ heur)
            if hz > best_z and is_feasible(lp, heur):
                best_x, best_z = heur, hz
            if prune(z):
                continue
        j = int(np.argmin(np.abs(x - 0.5) + (frac <= INT_TOL)))
        snap_here = sx.snapshot()
        # x_j = 1 is explored first: good incumbents early for a maximization
        stack.append((z, fixings + ((j, 0.0),), snap_here, node_id))
        stack.append((z, fixings + ((j, 1.0),), snap_here, node_id))

    bound = best_z if status is IpStatus.OPTIMAL else global_bound()
    history.append(bound)
    if best_x is None and status is IpStatus.OPTIMAL:
        status = IpStatus.INFEASIBLE
    return IntegerSolveResult(status, best_x, best_z if best_x is not None else -math.inf,
                              bound, nodes, history)
