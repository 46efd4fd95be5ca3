"""Linear and 0-1 programming used by the admission control plane."""

from .bnb import solve_ip_exact
from .model import IntegerSolveResult, IpStatus, LinearProgram, LpSolution, LpStatus, WarmStart
from .mps import write_mps
from .simplex import RevisedSimplex, solve_lp


class BuiltinSolver:
    """Seam between the column-generation driver and an LP/0-1 solver.

    Any object exposing the same two methods can be passed to the driver instead.
    """

    def solve_lp(self, lp: LinearProgram, warm: WarmStart | None = None) -> LpSolution:
        return solve_lp(lp, warm)

    def solve_ip(self, lp: LinearProgram, time_limit=None, initial=None) -> IntegerSolveResult:
        return solve_ip_exact(lp, time_limit=time_limit, initial=initial)


__all__ = [
    "BuiltinSolver", "IntegerSolveResult", "IpStatus", "LinearProgram", "LpSolution",
    "LpStatus", "RevisedSimplex", "WarmStart", "solve_ip_exact", "solve_lp", "write_mps",
]
