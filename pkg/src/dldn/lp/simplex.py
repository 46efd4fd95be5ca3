"""Bounded-variable revised simplex with explicit basis inverse.

Works internally on ``min cost.x  s.t.  A x + s = b,  lo <= x <= up,  s >= 0``.
Phase 1 adds artificial columns (``-e_i``) only for rows whose slack would start
negative. A dual simplex re-optimizes after bound changes, which is what the
branch-and-bound driver relies on.
"""

from __future__ import annotations

import logging

import numpy as np

from .model import LinearProgram, LpSolution, LpStatus, WarmStart

log = logging.getLogger(__name__)

BASIC, LOWER, UPPER = 0, 1, 2


class RevisedSimplex:
    def __init__(self, A, b, cost, lo, up, *, feas_tol=1e-9, opt_tol=1e-9, pivot_tol=1e-9,
                 refactor_every=64, bland_after=50, max_iter=None):
        self.A = np.ascontiguousarray(A, dtype=float)
        self.m, self.n = self.A.shape
        m, n = self.m, self.n
        self.b = np.asarray(b, dtype=float)
        self.cost = np.concatenate([np.asarray(cost, dtype=float), np.zeros(m)])
        self.lo = np.concatenate([np.asarray(lo, dtype=float), np.zeros(m)])
        self.up = np.concatenate([np.asarray(up, dtype=float), np.full(m, np.inf)])
        self.art_rows = np.zeros(0, dtype=int)
        self.feas_tol, self.opt_tol, self.pivot_tol = feas_tol, opt_tol, pivot_tol
        self.refactor_every = refactor_every
        self.bland_after = bland_after
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n) + 1000
        self.iterations = 0
        self._limit = self.max_iter
        self._slack_basis()

    # -- basis bookkeeping --------------------------------------------------

    @property
    def ntot(self) -> int:
        return self.n + self.m + self.art_rows.size

    def _slack_basis(self):
        n, m = self.n, self.m
        self.art_rows = np.zeros(0, dtype=int)
        self.cost, self.lo, self.up = self.cost[:n + m], self.lo[:n + m], self.up[:n + m]
        self.basis = np.arange(n, n + m)
        self.status = np.full(n + m, LOWER, dtype=np.int8)
        self.status[n:] = BASIC
        self.x = np.zeros(n + m)
        self.x[:n] = np.where(np.isfinite(self.lo[:n]), self.lo[:n], 0.0)
        self.Binv = np.eye(m)
        self._since_refactor = 0
        self._compute_xb()

    def _col(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.A[:, j]
        e = np.zeros(self.m)
        if j < self.n + self.m:
            e[j - self.n] = 1.0
        else:
            e[self.art_rows[j - self.n - self.m]] = -1.0
        return e

    def _refactor(self) -> bool:
        B = np.column_stack([self._col(j) for j in self.basis]) if self.m else np.zeros((0, 0))
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        if not np.isfinite(self.Binv).all():
            return False
        self._since_refactor = 0
        return True

    def _activity(self, values: np.ndarray) -> np.ndarray:
        """[A | I | -E] @ values."""
        n, m = self.n, self.m
        out = self.A @ values[:n] + values[n:n + m]
        if self.art_rows.size:
            np.subtract.at(out, self.art_rows, values[n + m:])
        return out

    def _compute_xb(self):
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self._activity(xn))

    def _reduced(self, cost: np.ndarray) -> np.ndarray:
        y = cost[self.basis] @ self.Binv
        d = cost.copy()
        n, m = self.n, self.m
        d[:n] -= y @ self.A
        d[n:n + m] -= y
        if self.art_rows.size:
            d[n + m:] += y[self.art_rows]
        d[self.basis] = 0.0
        return d

    def _row(self, r: int) -> np.ndarray:
        rho = self.Binv[r]
        n, m = self.n, self.m
        out = np.empty(self.ntot)
        out[:n] = rho @ self.A
        out[n:n + m] = rho
        if self.art_rows.size:
            out[n + m:] = -rho[self.art_rows]
        return out

    def _pivot(self, r: int, q: int, alpha: np.ndarray):
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.basis[r] = q
        self.status[q] = BASIC
        self._since_refactor += 1
        if self._since_refactor >= self.refactor_every:
            if self._refactor():
                self._compute_xb()

    def _infeasibility(self) -> np.ndarray:
        xb = self.x[self.basis]
        lo, up = self.lo[self.basis], self.up[self.basis]
        return np.maximum(lo - xb, 0.0) + np.maximum(xb - up, 0.0)

    # -- primal simplex -----------------------------------------------------

    def _primal(self, cost: np.ndarray) -> LpStatus:
        degenerate = 0
        while True:
            if self.iterations >= self._limit:
                return LpStatus.ITERATION_LIMIT
            d = self._reduced(cost)
            movable = self.up > self.lo
            elig = movable & (((self.status == LOWER) & (d < -self.opt_tol))
                              | ((self.status == UPPER) & (d > self.opt_tol)))
            if not elig.any():
                return LpStatus.OPTIMAL
            bland = degenerate >= self.bland_after
            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
            direction = 1.0 if self.status[q] == LOWER else -1.0
            alpha = self.Binv @ self._col(q)
            da = direction * alpha
            xb = self.x[self.basis]
            lo_b, up_b = self.lo[self.basis], self.up[self.basis]
            ratios = np.full(self.m, np.inf)
            dec = da > self.pivot_tol
            inc = da < -self.pivot_tol
            ratios[dec] = (xb[dec] - lo_b[dec]) / da[dec]
            with np.errstate(invalid="ignore"):
                ratios[inc] = (up_b[inc] - xb[inc]) / (-da[inc])
            ratios = np.where(np.isnan(ratios), np.inf, np.maximum(ratios, 0.0))
            flip = self.up[q] - self.lo[q]
            tmin = ratios.min() if self.m else np.inf
            if not np.isfinite(tmin) and not np.isfinite(flip):
                return LpStatus.UNBOUNDED
            self.iterations += 1
            if flip <= tmin:
                theta = flip
                self.x[q] += direction * theta
                self.x[self.basis] -= theta * da
                self.status[q] = UPPER if direction > 0 else LOWER
                degenerate = 0 if theta > 1e-12 else degenerate + 1
                continue
            ties = np.flatnonzero(ratios <= tmin + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            theta = ratios[r]
            leaving = self.basis[r]
            self.x[q] += direction * theta
            self.x[self.basis] -= theta * da
            if da[r] > 0:
                self.status[leaving] = LOWER
                self.x[leaving] = self.lo[leaving]
            else:
                self.status[leaving] = UPPER
                self.x[leaving] = self.up[leaving]
            degenerate = 0 if theta > 1e-12 else degenerate + 1
            self._pivot(r, q, alpha)

    # -- dual simplex -------------------------------------------------------

    def _dual(self, cost: np.ndarray) -> LpStatus:
        """Restore primal feasibility from a dual-feasible basis."""
        while True:
            if self.iterations >= self._limit:
                return LpStatus.ITERATION_LIMIT
            infeas = self._infeasibility()
            r = int(np.argmax(infeas)) if self.m else 0
            if not self.m or infeas[r] <= self.feas_tol:
                return LpStatus.OPTIMAL
            p = self.basis[r]
            below = self.x[p] < self.lo[p]
            d = self._reduced(cost)
            alpha_r = self._row(r)
            movable = (self.status != BASIC) & (self.up > self.lo)
            at_lo = self.status == LOWER
            at_up = self.status == UPPER
            if below:
                elig = movable & ((at_lo & (alpha_r < -self.pivot_tol)) | (at_up & (alpha_r > self.pivot_tol)))
            else:
                elig = movable & ((at_lo & (alpha_r > self.pivot_tol)) | (at_up & (alpha_r < -self.pivot_tol)))
            if not elig.any():
                return LpStatus.INFEASIBLE
            idx = np.flatnonzero(elig)
            ratios = np.abs(d[idx]) / np.abs(alpha_r[idx])
            tmin = ratios.min()
            ties = idx[ratios <= tmin + 1e-12]
            q = int(ties[np.argmax(np.abs(alpha_r[ties]))])
            alpha = self.Binv @ self._col(q)
            target = self.lo[p] if below else self.up[p]
            delta = (self.x[p] - target) / alpha[r]
            self.x[q] += delta
            self.x[self.basis] -= delta * alpha
            self.x[p] = target
            self.status[p] = LOWER if below else UPPER
            self.iterations += 1
            self._pivot(r, q, alpha)

    # -- drivers ------------------------------------------------------------

    def _add_artificials(self):
        """Put an artificial in the basis of every row whose basic value is out of bounds."""
        bad = np.flatnonzero(self._infeasibility() > self.feas_tol)
        if not bad.size:
            return False
        base = self.n + self.m + self.art_rows.size
        new_rows = []
        for k, r in enumerate(bad):
            j = self.basis[r]
            # move the offending basic variable to its nearest bound
            self.status[j] = LOWER if self.x[j] < self.lo[j] else UPPER
            self.x[j] = self.lo[j] if self.status[j] == LOWER else self.up[j]
            new_rows.append(r)
        self.art_rows = np.concatenate([self.art_rows, np.array(new_rows, dtype=int)])
        k = len(new_rows)
        self.cost = np.concatenate([self.cost, np.zeros(k)])
        self.lo = np.concatenate([self.lo, np.zeros(k)])
        self.up = np.concatenate([self.up, np.full(k, np.inf)])
        self.status = np.concatenate([self.status, np.full(k, BASIC, dtype=np.int8)])
        self.x = np.concatenate([self.x, np.zeros(k)])
        for t, r in enumerate(new_rows):
            self.basis[r] = base + t
        if not self._refactor():
            raise np.linalg.LinAlgError("singular basis after adding artificials")
        self._compute_xb()
        return True

    def _phase_one(self) -> LpStatus:
        if not self._add_artificials():
            return LpStatus.OPTIMAL
        art = np.arange(self.n + self.m, self.ntot)
        phase_cost = np.zeros(self.ntot)
        phase_cost[art] = 1.0
        status = self._primal(phase_cost)
        if status is LpStatus.ITERATION_LIMIT:
            return status
        self._refactor()
        self._compute_xb()
        if self.x[art].sum() > max(self.feas_tol * 10, 1e-7):
            return LpStatus.INFEASIBLE
        self.up[art] = 0.0
        self.x[art] = np.where(self.status[art] == BASIC, self.x[art], 0.0)
        return LpStatus.OPTIMAL

    def solve(self, warm: WarmStart | None = None) -> LpStatus:
        self._limit = self.iterations + self.max_iter
        if warm is not None and not self.load_warm(warm):
            self._slack_basis()
        return self.reoptimize()

    def _cold(self) -> LpStatus:
        self._slack_basis()
        return self._phase_one()

    def _dual_feasible(self) -> bool:
        d = self._reduced(self.cost)
        movable = self.up > self.lo
        bad = movable & (((self.status == LOWER) & (d < -self.opt_tol))
                         | ((self.status == UPPER) & (d > self.opt_tol)))
        return not bad.any()

    def reoptimize(self) -> LpStatus:
        """Alternate dual and primal passes until both feasibilities hold after a fresh factorization."""
        self._limit = max(self._limit, self.iterations + self.max_iter)
        cold = False
        for _ in range(20):
            if self._infeasibility().max(initial=0.0) > self.feas_tol:
                if self._dual_feasible():
                    status = self._dual(self.cost)
                elif not cold:
                    cold = True
                    status = self._cold()
                else:
                    status = LpStatus.ITERATION_LIMIT
                if status is not LpStatus.OPTIMAL:
                    return status
            status = self._primal(self.cost)
            if status is not LpStatus.OPTIMAL:
                return status
            if not self._refactor():
                return LpStatus.ITERATION_LIMIT
            self._compute_xb()
            if self._infeasibility().max(initial=0.0) <= self.feas_tol and self._dual_feasible():
                return LpStatus.OPTIMAL
        return LpStatus.ITERATION_LIMIT

    def set_bounds(self, j: int, lo: float, up: float):
        self.lo[j], self.up[j] = lo, up
        if self.status[j] != BASIC:
            old = self.x[j]
            new = lo if (self.status[j] == LOWER or not np.isfinite(up)) else up
            if self.status[j] == UPPER and not np.isfinite(up):
                self.status[j] = LOWER
            self.x[j] = new
            if new != old:
                self.x[self.basis] -= (new - old) * (self.Binv @ self._col(j))

    # -- warm starts --------------------------------------------------------

    def warm_start(self) -> WarmStart:
        basic = []
        for r, j in enumerate(self.basis):
            if j < self.n:
                basic.append(int(j))
            elif j < self.n + self.m:
                basic.append(-1 - int(j - self.n))
            else:
                basic.append(-1 - int(self.art_rows[j - self.n - self.m]))
        upper = tuple(int(j) for j in np.flatnonzero(self.status[:self.n] == UPPER))
        return WarmStart(tuple(basic), upper)

    def load_warm(self, warm: WarmStart) -> bool:
        n, m = self.n, self.m
        if len(warm.basic) != m:
            return False
        basis = np.array([j if j >= 0 else n + (-1 - j) for j in warm.basic], dtype=int)
        if basis.size and (basis.max() >= n + m or len(set(basis.tolist())) != m):
            return False
        self.art_rows = np.zeros(0, dtype=int)
        self.cost, self.lo, self.up = self.cost[:n + m], self.lo[:n + m], self.up[:n + m]
        self.status = np.full(n + m, LOWER, dtype=np.int8)
        for j in warm.at_upper:
            if j < n and np.isfinite(self.up[j]):
                self.status[j] = UPPER
        self.status[basis] = BASIC
        self.basis = basis
        self.x = np.where(self.status == UPPER, self.up[:n + m], self.lo[:n + m])
        self.x = np.where(np.isfinite(self.x), self.x, 0.0)
        if not self._refactor():
            return False
        self._compute_xb()
        return True

    def snapshot(self):
        return (self.basis.copy(), self.status.copy(), self.lo.copy(), self.up.copy(),
                self.art_rows.copy(), self.cost.copy())

    def restore(self, snap, lo=None, up=None):
        self.basis, self.status, self.lo, self.up, self.art_rows, self.cost = (a.copy() for a in snap)
        if lo is not None:
            self.lo[:self.n] = lo
            self.up[:self.n] = up
        x = np.where(self.status == UPPER, self.up, self.lo)
        self.x = np.where(np.isfinite(x), x, 0.0)
        if not self._refactor():
            raise np.linalg.LinAlgError("stored basis became singular")
        self._compute_xb()

    def duals(self) -> np.ndarray:
        return self.cost[self.basis] @ self.Binv


def _scales(lp: LinearProgram) -> tuple[np.ndarray, float]:
    rows = np.abs(lp.A).max(axis=1) if lp.A.size else np.zeros(lp.b.size)
    rows = np.where(rows > 0, rows, np.maximum(np.abs(lp.b), 1.0))
    sigma = float(np.abs(lp.c).max()) if lp.c.size else 1.0
    return 1.0 / rows, (sigma if sigma > 0 else 1.0)


def build_simplex(lp: LinearProgram, lower=None, upper=None, **kw) -> tuple[RevisedSimplex, np.ndarray, float]:
    row_scale, sigma = _scales(lp)
    A = lp.A * row_scale[:, None]
    b = lp.b * row_scale
    lo = np.zeros(lp.c.size) if lower is None else lower
    up = lp.upper if upper is None else upper
    return RevisedSimplex(A, b, -lp.c / sigma, lo, up, **kw), row_scale, sigma


def extract(lp: LinearProgram, sx: RevisedSimplex, status: LpStatus, row_scale, sigma) -> LpSolution:
    n = lp.c.size
    x = sx.x[:n].copy()
    if status is LpStatus.OPTIMAL:
        x = np.clip(x, 0.0, lp.upper)
        y = -sx.duals() * row_scale * sigma
        y = np.maximum(y, 0.0)
        obj = float(lp.c @ x)
    else:
        y = np.zeros(lp.b.size)
        obj = float("nan") if status is not LpStatus.UNBOUNDED else float("inf")
    reduced = lp.c - y @ lp.A if lp.A.size else lp.c.copy()
    return LpSolution(status, x, y, obj, reduced, sx.iterations, sx.warm_start())


def solve_lp(lp: LinearProgram, warm: WarmStart | None = None, **kw) -> LpSolution:
    """Solve ``lp`` to optimality, returning primal values and row duals."""
    m, n = lp.shape
    if n == 0:
        # restricted master with no columns: every row is slack, every dual is zero
        status = LpStatus.OPTIMAL if (lp.b >= -1e-9).all() else LpStatus.INFEASIBLE
        return LpSolution(status, np.zeros(0), np.zeros(m), 0.0, np.zeros(0), 0,
                          WarmStart(tuple(-1 - i for i in range(m))))
    sx, row_scale, sigma = build_simplex(lp, **kw)
    status = sx.solve(warm)
    if status is LpStatus.ITERATION_LIMIT:
        log.warning("simplex hit its iteration limit (%d)", sx.max_iter)
    return extract(lp, sx, status, row_scale, sigma)
