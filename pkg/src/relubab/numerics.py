"""Dense linear algebra helpers and a small exact LP solver.

The simplex kernel comes from the compiled ``_simplex`` extension when it is
importable, otherwise from the numpy twin ``_simplex_py``. Set
``RELUBAB_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field

import numpy as np

from . import _simplex_py

if os.environ.get("RELUBAB_PURE_PYTHON"):
    _kernel = _simplex_py
else:
    try:
        from . import _simplex as _kernel
    except ImportError:  # pragma: no cover - depends on the build
        _kernel = _simplex_py

KERNEL = "compiled" if _kernel is not _simplex_py else "python"

FEAS_TOL = 1e-8
OPT_TOL = 1e-8


class ContractError(ValueError):
    """Raised when arguments violate an operation's preconditions."""


class LpError(RuntimeError):
    """The simplex hit its iteration cap or otherwise failed numerically."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearForm:
    """``x -> coeffs . x + offset``."""

    coeffs: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ContractError(f"form over R^{self.dim} evaluated at shape {x.shape}")
        return float(self.coeffs @ x + self.offset)


@dataclass(frozen=True)
class LpProblem:
    """Minimise ``objective`` over ``lower <= x <= upper`` and ``h(x) >= 0`` for each halfspace."""

    objective: LinearForm
    lower: np.ndarray
    upper: np.ndarray
    halfspaces: tuple = field(default_factory=tuple)

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        hi = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "halfspaces", tuple(self.halfspaces))
        n = lo.shape[0]
        if hi.shape != (n,):
            raise ContractError("box bounds differ in dimension")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ContractError("box bounds must be finite")
        if np.any(lo > hi):
            raise ContractError("box lower bound exceeds upper bound")
        if self.objective.dim != n:
            raise ContractError("objective dimension does not match the box")
        for h in self.halfspaces:
            if h.dim != n:
                raise ContractError("halfspace dimension does not match the box")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: float = float("nan")
    point: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def affine_apply(weights, bias, x) -> np.ndarray:
    W = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.ndim != 2 or b.shape != (W.shape[0],) or x.shape != (W.shape[1],):
        raise ContractError(
            f"affine_apply shape mismatch: W{W.shape}, b{b.shape}, x{x.shape}"
        )
    return W @ x + b


def lp_solve(problem: LpProblem) -> LpSolution:
    """Solve a box-bounded LP exactly with the dense two-phase simplex.

    Variables are shifted to ``s = x - lower`` so the box becomes
    ``0 <= s <= upper - lower``; halfspaces become ``-G s <= G lower + g``.
    """
    lo, hi = problem.lower, problem.upper
    n = problem.dim
    if problem.halfspaces:
        G = np.array([h.coeffs for h in problem.halfspaces])
        g = np.array([h.offset for h in problem.halfspaces])
        A = np.vstack([np.eye(n), -G])
        b = np.concatenate([hi - lo, G @ lo + g])
    else:
        A = np.eye(n)
        b = hi - lo
    c = problem.objective.coeffs
    status, s, value, iters = _kernel.solve_standard(A, b, c, FEAS_TOL, OPT_TOL)
    if status == _simplex_py.INFEASIBLE:
        return LpSolution(LpStatus.INFEASIBLE)
    if status == _simplex_py.UNBOUNDED:
        # box-bounded problems cannot be unbounded
        raise LpError(f"simplex reported an unbounded box LP (n={n}, rows={A.shape[0]})")
    if status != _simplex_py.OPTIMAL:
        raise LpError(
            f"simplex iteration cap reached after {iters} pivots "
            f"(n={n}, rows={A.shape[0]})"
        )
    x = np.clip(lo + s, lo, hi)
    return LpSolution(LpStatus.OPTIMAL, problem.objective(x), x)
