"""Optimal transport with Euclidean power costs.

Two solvers live here.  ``solve_pairwise`` computes the p-Wasserstein
cost ``W_p^p`` between two discrete measures as a dense transportation
LP, returning dual potentials along with the optimal plan.
``solve_mmot`` solves the multi-marginal problem whose ground cost is the
infimal convolution of single power costs over a free barycenter point:

    cost(x_1, ..., x_N) = inf_z  sum_i |x_i - z|^p.

Its optimizer couples the marginals so that the induced barycenter
measure (push the plan forward through the per-tuple minimizer) solves
the p-Wasserstein barycenter problem, and the two optimal values agree.
That equality, along with dual feasibility and complementary slackness,
is what :mod:`baryflow.verify` certifies numerically.

An entropic pairwise solver is included for cross-checking; being a
smoothed approximation it is never used inside exact-equality checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import (
    ConvergenceError,
    DimensionMismatchError,
    ProductGridError,
)
from .infconv import batch_barycenters, check_exponent, power_cost_gradient
from .linprog import LpProblem, solve_lp
from .measures import (
    Coupling,
    DiscreteMeasure,
    MultiPlan,
    canonicalize,
    validate_measure,
)

__all__ = [
    "MAX_GRID",
    "MASS_CUTOFF",
    "PairwiseResult",
    "MmotResult",
    "DualCertificate",
    "pairwise_cost_matrix",
    "solve_pairwise",
    "solve_pairwise_entropic",
    "solve_mmot",
    "stationarity_residual",
    "extract_barycenter",
    "wb_value",
    "c_transform",
    "dual_feasibility_check",
    "barycenter_potentials",
]

# Cap on the tuple-grid size of the multi-marginal LP.
MAX_GRID = 200_000
# Plan entries at or below this are treated as numerically zero.
MASS_CUTOFF = 1e-12


@dataclass(frozen=True)
class PairwiseResult:
    """Optimal plan and value of a two-marginal transport problem.

    ``value`` is ``W_p^p`` between the marginals.  The potentials stored
    on the coupling satisfy ``psi_i + phi_j <= cost_ij`` with equality on
    the support, and their pairing with the marginal weights equals the
    value (strong duality).
    """

    coupling: Coupling
    value: float
    p: float

    @property
    def source_potentials(self) -> np.ndarray:
        return self.coupling.source_potentials

    @property
    def target_potentials(self) -> np.ndarray:
        return self.coupling.target_potentials


@dataclass(frozen=True)
class MmotResult:
    """Optimal plan of the multi-marginal barycentric transport problem.

    Attributes
    ----------
    plan : MultiPlan
        Sparse optimal plan over index tuples.
    value : float
        Optimal multi-marginal cost.
    tuple_barycenters : ndarray, shape (k, d)
        Barycenter point of each support tuple (the minimizer of the
        inner infimal convolution).
    potentials : tuple of ndarray
        One dual vector per marginal; their direct sum is dominated by
        the tuple cost on the whole grid.
    marginals : tuple of DiscreteMeasure
        The input measures, kept for downstream consumers.
    p : float
        Cost exponent.
    """

    plan: MultiPlan
    value: float
    tuple_barycenters: np.ndarray
    potentials: tuple[np.ndarray, ...]
    marginals: tuple[DiscreteMeasure, ...]
    p: float

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.tuple_barycenters, dtype=float))
        arr.flags.writeable = False
        object.__setattr__(self, "tuple_barycenters", arr)
        object.__setattr__(self, "potentials", tuple(self.potentials))
        object.__setattr__(self, "marginals", tuple(self.marginals))


@dataclass(frozen=True)
class DualCertificate:
    """Numerical certificate for a multi-marginal dual vector.

    ``max_violation`` is the worst excess of the summed potentials over
    the tuple cost on the full grid (feasibility; should be ~0 or
    negative), ``duality_gap`` is the absolute mismatch between primal
    value and dual pairing, and ``support_slack`` is the worst deviation
    from complementary slackness on the plan support.
    """

    max_violation: float
    duality_gap: float
    support_slack: float


def pairwise_cost_matrix(source_points: np.ndarray, target_points: np.ndarray, p: float) -> np.ndarray:
    """Matrix of costs ``|a_i - b_j|^p`` for two point arrays."""
    p = check_exponent(p)
    a = np.asarray(source_points, dtype=float)
    b = np.asarray(target_points, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if b.ndim == 1:
        b = b.reshape(-1, 1)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(f"point dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    diff = a[:, None, :] - b[None, :, :]
    return np.linalg.norm(diff, axis=2) ** p


def solve_pairwise(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> PairwiseResult:
    """Exact ``W_p^p`` between two discrete measures, with potentials.

    The transportation LP has one variable per atom pair and one
    constraint per atom; one redundant constraint (total mass appears
    twice) is dropped before handing the program to the simplex solver.
    """
    validate_measure(mu)
    validate_measure(nu)
    p = check_exponent(p)
    m, n = len(mu), len(nu)
    cost = pairwise_cost_matrix(mu.points, nu.points, p)

    row_marg = np.kron(np.eye(m), np.ones((1, n)))
    col_marg = np.kron(np.ones((1, m)), np.eye(n))
    A = np.vstack([row_marg, col_marg[:-1]])
    b = np.concatenate([mu.weights, nu.weights[:-1]])
    sol = solve_lp(LpProblem(c=cost.ravel(), A=A, b=b))

    keep = np.flatnonzero(sol.x > MASS_CUTOFF)
    psi = sol.duals[:m]
    phi = np.append(sol.duals[m:], 0.0)
    coupling = Coupling(
        n_source=m,
        n_target=n,
        rows=keep // n,
        cols=keep % n,
        masses=sol.x[keep],
        source_potentials=psi,
        target_potentials=phi,
    )
    return PairwiseResult(coupling=coupling, value=sol.value, p=p)


def wb_value(nu: DiscreteMeasure, marginals: list[DiscreteMeasure] | tuple[DiscreteMeasure, ...], p: float) -> float:
    """Barycenter functional ``sum_i W_p^p(nu, mu_i)`` at the measure ``nu``."""
    return float(sum(solve_pairwise(nu, mu, p).value for mu in marginals))


def c_transform(
    values: np.ndarray,
    points: np.ndarray,
    target_points: np.ndarray,
    p: float,
) -> np.ndarray:
    """c-transform of a potential under the power cost.

    Given ``values[i]`` at ``points[i]``, returns the vector
    ``min_i |t_j - points_i|^p - values[i]`` over ``target_points``.
    Transforming twice is monotone: the double transform dominates the
    original potential, with equality on the support of any optimal plan.
    """
    vals = np.asarray(values, dtype=float)
    cost = pairwise_cost_matrix(target_points, points, p)
    if vals.ndim != 1 or len(vals) != cost.shape[1]:
        raise DimensionMismatchError("one potential value per source point is required")
    return (cost - vals[None, :]).min(axis=1)


# ---------------------------------------------------------------------------
# multi-marginal problem
# ---------------------------------------------------------------------------

def _tuple_grid(
    marginals: tuple[DiscreteMeasure, ...],
    p: float,
    max_grid: int,
    newton_tol: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Enumerate the product grid: index tuples, costs, barycenters."""
    sizes = [len(mu) for mu in marginals]
    total = math.prod(sizes)
    if total > max_grid:
        raise ProductGridError(
            f"product grid has {total} tuples, above the cap {max_grid}; "
            "raise max_grid explicitly if this size is intended"
        )
    indices = np.indices(sizes).reshape(len(sizes), total).T
    tuple_points = np.stack(
        [marginals[k].points[indices[:, k]] for k in range(len(marginals))],
        axis=1,
    )
    barycenters, costs, _ = batch_barycenters(tuple_points, p, tol=newton_tol)
    return indices, costs, barycenters


def solve_mmot(
    marginals: list[DiscreteMeasure] | tuple[DiscreteMeasure, ...],
    p: float,
    *,
    max_grid: int = MAX_GRID,
    newton_tol: float = 1e-10,
) -> MmotResult:
    """Solve the barycentric multi-marginal transport problem exactly.

    One LP variable per tuple of the product grid, one constraint per
    marginal atom (one globally redundant row dropped; further redundancy
    is eliminated inside the LP solver).  Costs are the per-tuple
    infimal-convolution values.

    Raises
    ------
    ProductGridError
        If the product of support sizes exceeds ``max_grid``.
    """
    mus = tuple(marginals)
    if len(mus) < 2:
        raise DimensionMismatchError("need at least two marginals")
    p = check_exponent(p)
    dims = {mu.dim for mu in mus}
    if len(dims) > 1:
        raise DimensionMismatchError(f"marginals live in different dimensions: {sorted(dims)}")
    for mu in mus:
        validate_measure(mu)

    sizes = [len(mu) for mu in mus]
    indices, costs, barycenters = _tuple_grid(mus, p, max_grid, newton_tol)
    total = len(indices)

    blocks = []
    for k, size in enumerate(sizes):
        blocks.append((indices[:, k][None, :] == np.arange(size)[:, None]).astype(float))
    A = np.vstack(blocks)[:-1]
    b = np.concatenate([mu.weights for mu in mus])[:-1]
    sol = solve_lp(LpProblem(c=costs, A=A, b=b))

    duals = np.append(sol.duals, 0.0)
    offsets = np.cumsum([0] + sizes)
    potentials = tuple(duals[offsets[k]:offsets[k + 1]] for k in range(len(mus)))

    keep = np.flatnonzero(sol.x > MASS_CUTOFF)
    plan = MultiPlan(
        n_marginals=len(mus),
        support_sizes=tuple(sizes),
        indices=indices[keep],
        masses=sol.x[keep],
    )
    return MmotResult(
        plan=plan,
        value=sol.value,
        tuple_barycenters=barycenters[keep],
        potentials=potentials,
        marginals=mus,
        p=p,
    )


def stationarity_residual(result: MmotResult) -> float:
    """Worst normalized defect of the barycenter condition on the support.

    Every support tuple's barycenter point must satisfy
    ``sum_i p |x_i - z|^(p-2) (x_i - z) = 0``; the defect norm is scaled
    by ``1 + sum_i |x_i - z|^(p-1)`` before taking the maximum over plan
    entries.
    """
    if len(result.plan) == 0:
        return 0.0
    tuples = np.stack(
        [result.marginals[k].points[result.plan.indices[:, k]]
         for k in range(result.plan.n_marginals)],
        axis=1,
    )
    diff = tuples - result.tuple_barycenters[:, None, :]
    grads = power_cost_gradient(diff, result.p)
    radii = np.linalg.norm(diff, axis=2)
    scale = 1.0 + (radii ** (result.p - 1.0)).sum(axis=1)
    return float((np.linalg.norm(grads.sum(axis=1), axis=1) / scale).max())


def extract_barycenter(result: MmotResult) -> DiscreteMeasure:
    """Barycenter measure induced by an optimal multi-marginal plan.

    Pushes the plan mass forward through the per-tuple barycenter map and
    canonicalizes (tuples with coinciding barycenters merge).  The result
    minimizes ``nu -> sum_i W_p^p(nu, mu_i)`` and attains the
    multi-marginal optimal value there.
    """
    return canonicalize(DiscreteMeasure(result.tuple_barycenters, result.plan.masses))


def dual_feasibility_check(
    result: MmotResult,
    *,
    max_grid: int = MAX_GRID,
    newton_tol: float = 1e-10,
) -> DualCertificate:
    """Certify the potentials of a solved multi-marginal problem.

    Recomputes every tuple cost of the product grid (independently of the
    solve) and measures dual feasibility, the duality gap, and
    complementary slackness on the plan support.
    """
    mus = result.marginals
    indices, costs, _ = _tuple_grid(mus, result.p, max_grid, newton_tol)
    summed = np.zeros(len(indices))
    for k, pot in enumerate(result.potentials):
        summed += pot[indices[:, k]]
    max_violation = float((summed - costs).max())

    pairing = sum(float(pot @ mu.weights) for pot, mu in zip(result.potentials, mus))
    duality_gap = abs(pairing - result.value)

    support_sum = np.zeros(len(result.plan))
    for k, pot in enumerate(result.potentials):
        support_sum += pot[result.plan.indices[:, k]]
    flat = np.ravel_multi_index(result.plan.indices.T, result.plan.support_sizes)
    support_slack = float(np.abs(costs[flat] - support_sum).max(initial=0.0))
    return DualCertificate(
        max_violation=max_violation,
        duality_gap=float(duality_gap),
        support_slack=support_slack,
    )


def barycenter_potentials(
    nu: DiscreteMeasure,
    marginals: list[DiscreteMeasure] | tuple[DiscreteMeasure, ...],
    p: float,
) -> list[PairwiseResult]:
    """Pairwise dual systems against a common source, jointly normalized.

    Solves ``W_p^p(nu, mu_i)`` for every marginal and shifts each source
    potential by a constant so the family sums to zero at the heaviest
    atom of ``nu`` (constant shifts change neither feasibility nor the
    dual pairing, so each result keeps its certificates).
    """
    results = [solve_pairwise(nu, mu, p) for mu in marginals]
    anchor = int(np.argmax(nu.weights))
    total = sum(float(r.source_potentials[anchor]) for r in results)
    shift = total / len(results)
    adjusted = []
    for r in results:
        coupling = Coupling(
            n_source=r.coupling.n_source,
            n_target=r.coupling.n_target,
            rows=r.coupling.rows,
            cols=r.coupling.cols,
            masses=r.coupling.masses,
            source_potentials=r.source_potentials - shift,
            target_potentials=r.target_potentials + shift,
        )
        adjusted.append(PairwiseResult(coupling=coupling, value=r.value, p=r.p))
    return adjusted


# ---------------------------------------------------------------------------
# entropic solver
# ---------------------------------------------------------------------------

def solve_pairwise_entropic(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: float,
    epsilon: float,
    *,
    tol: float = 1e-9,
    max_iter: int = 200_000,
) -> PairwiseResult:
    """Entropy-regularized transport via log-domain Sinkhorn iterations.

    Minimizes ``<plan, cost> + epsilon * KL(plan | mu x nu)``; the
    reported ``value`` is the transport part ``<plan, cost>`` only, which
    decreases to the exact value as ``epsilon`` shrinks.  Iterations are
    annealed from a large regularization down to ``epsilon`` so that
    small targets converge in a reasonable number of sweeps.  The
    returned target potential is the c-transform of the source one, so
    the pair is feasible for the unregularized dual.

    Raises
    ------
    ConvergenceError
        If the marginal error cannot be brought below ``tol`` within
        ``max_iter`` total iterations.
    """
    validate_measure(mu)
    validate_measure(nu)
    p = check_exponent(p)
    epsilon = float(epsilon)
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")

    cost = pairwise_cost_matrix(mu.points, nu.points, p)
    with np.errstate(divide="ignore"):
        log_a = np.log(mu.weights)
        log_b = np.log(nu.weights)

    f = np.zeros(len(mu))
    g = np.zeros(len(nu))
    spent = 0

    stages = [epsilon]
    while stages[-1] < 1.0:
        stages.append(min(stages[-1] * 10.0, 1.0))
    for eps in reversed(stages):
        stage_tol = tol if eps == epsilon else max(tol, 1e-6)
        while True:
            if spent >= max_iter:
                raise ConvergenceError(
                    f"sinkhorn did not reach marginal error {tol:.1e} in {max_iter} iterations"
                )
            spent += 1
            f = -eps * logsumexp((g[None, :] - cost) / eps + log_b[None, :], axis=1)
            g = -eps * logsumexp((f[:, None] - cost) / eps + log_a[:, None], axis=0)
            log_plan = (f[:, None] + g[None, :] - cost) / eps + log_a[:, None] + log_b[None, :]
            plan = np.exp(log_plan)
            err = max(
                float(np.abs(plan.sum(axis=1) - mu.weights).max()),
                float(np.abs(plan.sum(axis=0) - nu.weights).max()),
            )
            if err <= stage_tol:
                break

    phi = c_transform(f, mu.points, nu.points, p)
    rows, cols = np.nonzero(plan > 0.0)
    coupling = Coupling(
        n_source=len(mu),
        n_target=len(nu),
        rows=rows,
        cols=cols,
        masses=plan[rows, cols],
        source_potentials=f,
        target_potentials=phi,
    )
    return PairwiseResult(coupling=coupling, value=float((plan * cost).sum()), p=p)
