from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


class IpStatus(str, Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT = "time-limit"
    INFEASIBLE = "infeasible"


@dataclass
class LinearProgram:
    """maximize c.x  subject to  A x <= b,  0 <= x <= upper.

    ``upper`` defaults to +inf; ``binary`` marks 0-1 columns for the integer solver.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    upper: np.ndarray | None = None
    binary: np.ndarray | None = None
    row_names: list[str] = field(default_factory=list)
    col_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.size
        self.A = np.asarray(self.A, dtype=float).reshape(m, n)
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.upper = np.asarray(self.upper, dtype=float).reshape(n)
        if self.binary is None:
            self.binary = np.zeros(n, dtype=bool)
        self.binary = np.asarray(self.binary, dtype=bool).reshape(n)
        if not (np.isfinite(self.c).all() and np.isfinite(self.A).all() and np.isfinite(self.b).all()):
            raise ValueError("LP coefficients must be finite")
        if (self.upper < 0).any():
            raise ValueError("upper bounds must be >= 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def with_columns(self, c_new, A_new, upper_new=None, binary_new=None, names=None) -> "LinearProgram":
        c_new = np.asarray(c_new, dtype=float).reshape(-1)
        k = c_new.size
        A_new = np.asarray(A_new, dtype=float).reshape(self.b.size, k)
        up = np.full(k, np.inf) if upper_new is None else upper_new
        bn = np.zeros(k, dtype=bool) if binary_new is None else binary_new
        return LinearProgram(
            np.concatenate([self.c, c_new]), np.hstack([self.A, A_new]), self.b,
            np.concatenate([self.upper, up]), np.concatenate([self.binary, bn]),
            list(self.row_names), list(self.col_names) + list(names or []))

    def as_binary(self) -> "LinearProgram":
        n = self.c.size
        return LinearProgram(self.c, self.A, self.b, np.ones(n), np.ones(n, dtype=bool),
                             list(self.row_names), list(self.col_names))


@dataclass(frozen=True)
class WarmStart:
    """Basis description that survives appending columns.

    Codes: ``j >= 0`` is structural column j, ``-1 - i`` is the slack of row i.
    """

    basic: tuple[int, ...]
    at_upper: tuple[int, ...] = ()


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    duals: np.ndarray
    objective: float
    reduced_costs: np.ndarray
    iterations: int = 0
    warm: WarmStart | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def dual_objective(self, lp: LinearProgram) -> float:
        """b.y plus the contribution of finite upper bounds on columns priced out."""
        bounded = np.isfinite(lp.upper)
        extra = float(np.sum(lp.upper[bounded] * np.maximum(self.reduced_costs[bounded], 0.0)))
        return float(lp.b @ self.duals) + extra


@dataclass
class IntegerSolveResult:
    status: IpStatus
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int = 0
    bound_history: list[float] = field(default_factory=list)

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None
