"""Dense two-phase revised simplex for equality-form linear programs.

Solves ``min c.x  subject to  A x = b, x >= 0`` and returns both the
primal vertex and the dual vector, which downstream transport code uses
as Kantorovich potentials.  The implementation is deliberately plain:
dense LU factorizations of the basis (refreshed every iteration, which is
cheap at the problem sizes this package targets), Dantzig pricing with a
switch to Bland's rule once the iteration count suggests degeneracy, and
explicit removal of redundant rows after phase 1 so that rank-deficient
constraint matrices (ubiquitous in transport problems) are handled
without any preprocessing by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .exceptions import (
    CycleLimitError,
    DimensionMismatchError,
    InfeasibleError,
    NonFiniteCoordinateError,
    UnboundedError,
)

__all__ = ["LpProblem", "LpSolution", "solve_lp", "FEAS_TOL", "OPT_TOL"]

# Feasibility tolerance: phase-1 mass above FEAS_TOL * (1 + |b|_inf) means
# the program is infeasible; it also bounds accepted constraint residuals.
FEAS_TOL = 1e-9
# Optimality tolerance on reduced costs.
OPT_TOL = 1e-9
# A column entry of the tableau row must exceed this to serve as a pivot
# when replacing a leftover artificial variable after phase 1.
_PURGE_PIVOT_TOL = 1e-8
# Entries of the basis-transformed entering column below this are treated
# as nonpositive in the ratio test.
_RATIO_PIVOT_TOL = 1e-10


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LpProblem:
    """Equality-form program ``min c.x : A x = b, x >= 0``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2:
            raise DimensionMismatchError(f"A must be 2-D, got shape {A.shape}")
        if c.ndim != 1 or b.ndim != 1:
            raise DimensionMismatchError("c and b must be vectors")
        rows, cols = A.shape
        if len(c) != cols or len(b) != rows:
            raise DimensionMismatchError(
                f"A is {rows}x{cols} but |c|={len(c)}, |b|={len(b)}"
            )
        if rows == 0 or cols == 0:
            raise DimensionMismatchError("empty program")
        if not (np.isfinite(c).all() and np.isfinite(A).all() and np.isfinite(b).all()):
            raise NonFiniteCoordinateError("program data must be finite")
        object.__setattr__(self, "c", _freeze(c))
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "b", _freeze(b))

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class LpSolution:
    """Optimal vertex of an :class:`LpProblem`.

    ``duals`` has one entry per constraint row of the original program;
    rows found redundant during phase 1 get a zero multiplier.
    """

    x: np.ndarray
    value: float
    duals: np.ndarray
    status: str
    iterations: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _freeze(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "duals", _freeze(np.asarray(self.duals, dtype=float)))


def _simplex(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    basis: np.ndarray,
    *,
    opt_tol: float,
    phase: int,
    bland_after: int,
    max_iter: int,
    start_iter: int = 0,
) -> int:
    """Run simplex iterations in place on ``basis``; return the new count.

    ``bland_after`` and ``max_iter`` are measured on the combined counter
    ``start_iter + local iterations`` so both phases share one budget.
    """
    n_rows = A.shape[0]
    iters = start_iter
    while True:
        lu = lu_factor(A[:, basis])
        x_basic = lu_solve(lu, b)
        y = lu_solve(lu, c[basis], trans=1)
        reduced = c - y @ A
        reduced[basis] = 0.0

        if iters >= bland_after:
            # Bland's rule: lowest-index improving column, guaranteed finite.
            negatives = np.flatnonzero(reduced < -opt_tol)
            if negatives.size == 0:
                return iters
            entering = int(negatives[0])
        else:
            entering = int(np.argmin(reduced))
            if reduced[entering] >= -opt_tol:
                return iters

        iters += 1
        if iters > max_iter:
            raise CycleLimitError(f"no optimum after {iters - 1} pivots")

        direction = lu_solve(lu, A[:, entering])
        positive = direction > _RATIO_PIVOT_TOL
        if not positive.any():
            if phase == 1:
                # Phase-1 objective is bounded below by zero; this means
                # the basis matrix has degenerated numerically.
                raise CycleLimitError("phase 1 lost boundedness; data is ill-conditioned")
            raise UnboundedError("objective is unbounded below")
        ratios = np.full(n_rows, np.inf)
        ratios[positive] = np.maximum(x_basic[positive], 0.0) / direction[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios == best)
        # Among tied rows leave the lowest variable index (Bland-compatible).
        leaving_row = int(ties[np.argmin(basis[ties])])
        basis[leaving_row] = entering


def _purge_artificials(
    A_ext: np.ndarray,
    b: np.ndarray,
    basis: np.ndarray,
    n_orig: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Drive leftover artificial variables out of the phase-1 basis.

    Each artificial still basic at phase-1 optimum sits at value zero.  If
    its tableau row contains a usable original column, pivot that column
    in (a degenerate pivot, so feasibility is untouched); otherwise the
    row is a linear combination of the others and is dropped.

    Returns the reduced ``A`` (original columns only), reduced ``b``, the
    cleaned basis, and the indices of the kept rows.
    """
    n_rows = A_ext.shape[0]
    keep = np.ones(n_rows, dtype=bool)
    for row in range(n_rows):
        if basis[row] < n_orig:
            continue
        lu = lu_factor(A_ext[:, basis])
        unit = np.zeros(n_rows)
        unit[row] = 1.0
        tableau_row = lu_solve(lu, unit, trans=1) @ A_ext[:, :n_orig]
        tableau_row[basis[basis < n_orig]] = 0.0
        candidates = np.flatnonzero(np.abs(tableau_row) > _PURGE_PIVOT_TOL)
        if candidates.size:
            basis[row] = int(candidates[0])
        else:
            keep[row] = False
    kept_rows = np.flatnonzero(keep)
    reduced_basis = basis[keep]
    return A_ext[np.ix_(kept_rows, np.arange(n_orig))], b[keep], reduced_basis, kept_rows


def solve_lp(
    problem: LpProblem,
    *,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
    max_iter: int | None = None,
) -> LpSolution:
    """Solve an equality-form LP to an optimal basic solution.

    Parameters
    ----------
    problem : LpProblem
        The program; redundant constraint rows are tolerated.
    feas_tol, opt_tol : float
        Feasibility and reduced-cost tolerances.
    max_iter : int, optional
        Total pivot budget across both phases.  Defaults to
        ``10_000 + 100 * (rows + cols)``.

    Raises
    ------
    InfeasibleError
        If phase 1 cannot drive the artificial mass to zero.
    UnboundedError
        If phase 2 finds an unbounded improving ray.
    CycleLimitError
        If the pivot budget is exhausted.
    """
    n_rows, n_cols = problem.n_rows, problem.n_cols
    if max_iter is None:
        max_iter = 10_000 + 100 * (n_rows + n_cols)
    bland_after = 3 * (n_rows + n_cols)

    A = problem.A.copy()
    b = problem.b.copy()
    flipped = b < 0.0
    A[flipped] *= -1.0
    b[flipped] *= -1.0

    # Phase 1: minimize the total artificial mass from the identity basis.
    A_ext = np.hstack([A, np.eye(n_rows)])
    c_phase1 = np.concatenate([np.zeros(n_cols), np.ones(n_rows)])
    basis = np.arange(n_cols, n_cols + n_rows)
    iters = _simplex(
        A_ext, b, c_phase1, basis,
        opt_tol=opt_tol, phase=1,
        bland_after=bland_after, max_iter=max_iter,
    )
    lu = lu_factor(A_ext[:, basis])
    artificial_mass = float(c_phase1[basis] @ lu_solve(lu, b))
    if artificial_mass > feas_tol * (1.0 + float(np.abs(b).max())):
        raise InfeasibleError(f"phase-1 residual mass {artificial_mass:.3e}")

    A_red, b_red, basis, kept_rows = _purge_artificials(A_ext, b, basis, n_cols)

    # Phase 2 on the full-rank system.
    iters = _simplex(
        A_red, b_red, problem.c.copy(), basis,
        opt_tol=opt_tol, phase=2,
        bland_after=max(bland_after, iters + bland_after), max_iter=max_iter,
        start_iter=iters,
    )

    lu = lu_factor(A_red[:, basis])
    x_basic = lu_solve(lu, b_red)
    y_red = lu_solve(lu, problem.c[basis], trans=1)
    x = np.zeros(n_cols)
    x[basis] = np.maximum(x_basic, 0.0)

    duals = np.zeros(n_rows)
    duals[kept_rows] = y_red
    duals[flipped] *= -1.0

    value = float(problem.c @ x)
    return LpSolution(x=x, value=value, duals=duals, status="optimal", iterations=iters)
