"""Discrete measures, couplings, and multi-marginal plans.

Weighted point clouds are the basic currency of the package: a probability
measure is a finite sum of weighted Dirac atoms, a two-marginal transport
plan is a sparse nonnegative matrix over a pair of supports, and an
N-marginal plan assigns mass to index tuples.  All three are frozen
dataclasses wrapping read-only numpy arrays.

Construction is deliberately permissive (only shape consistency is
enforced), so that invalid objects can be built and then rejected by the
``validate_*`` functions with a precise error.  Numerical code in the rest
of the package assumes validated inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    MarginalMismatchError,
    NegativeWeightError,
    NonFiniteCoordinateError,
    NonFiniteImageError,
    WeightSumError,
)

__all__ = [
    "MERGE_TOL",
    "WEIGHT_SUM_TOL",
    "MARGINAL_TOL",
    "DiscreteMeasure",
    "Coupling",
    "MultiPlan",
    "validate_measure",
    "validate_coupling",
    "validate_multiplan",
    "canonicalize",
    "pushforward",
    "marginal",
    "measures_close",
    "measure_to_dict",
    "measure_from_dict",
    "save_measure",
    "load_measure",
    "measure_to_csv",
]

# Atoms closer than MERGE_TOL (Euclidean) are merged by canonicalize().
MERGE_TOL = 1e-9
# Allowed |sum(weights) - 1| for a probability measure.
WEIGHT_SUM_TOL = 1e-12
# Allowed per-atom deviation between a plan marginal and its measure.
MARGINAL_TOL = 1e-10
# Weights may dip this far below zero before counting as negative.
_NEG_TOL = 1e-15


def _as_points(points: object) -> np.ndarray:
    """Coerce to a float ``(n, d)`` array; 1-D input is read as ``d = 1``."""
    try:
        arr = np.asarray(points, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatchError(f"points are not a rectangular numeric array: {exc}")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"points must be a 2-D array, got shape {arr.shape}")
    return arr


def _as_vector(values: object, name: str) -> np.ndarray:
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatchError(f"{name} is not a numeric vector: {exc}")
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported measure ``sum_k weights[k] * delta(points[k])``.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Atom locations.  A 1-D array of length n is accepted as n points
        on the line.
    weights : array_like, shape (n,)
        Atom masses.

    Only shape consistency is checked here; call :func:`validate_measure`
    to enforce the probability-measure invariants.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        pts = _as_points(self.points)
        wts = _as_vector(self.weights, "weights")
        if len(pts) != len(wts):
            raise DimensionMismatchError(
                f"{len(pts)} points but {len(wts)} weights"
            )
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(wts))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Coupling:
    """Sparse two-marginal transport plan.

    Entry ``k`` places mass ``masses[k]`` on the source/target atom pair
    ``(rows[k], cols[k])``.  Optional dual potentials live on the source
    and target supports respectively.
    """

    n_source: int
    n_target: int
    rows: np.ndarray
    cols: np.ndarray
    masses: np.ndarray
    source_potentials: np.ndarray | None = None
    target_potentials: np.ndarray | None = None

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=int)
        cols = np.asarray(self.cols, dtype=int)
        masses = _as_vector(self.masses, "masses")
        if not (len(rows) == len(cols) == len(masses)):
            raise DimensionMismatchError("rows, cols, masses must share a length")
        object.__setattr__(self, "rows", _freeze(rows))
        object.__setattr__(self, "cols", _freeze(cols))
        object.__setattr__(self, "masses", _freeze(masses))
        for name, size in (("source_potentials", self.n_source),
                           ("target_potentials", self.n_target)):
            val = getattr(self, name)
            if val is None:
                continue
            vec = _as_vector(val, name)
            if len(vec) != size:
                raise DimensionMismatchError(f"{name} must have length {size}")
            object.__setattr__(self, name, _freeze(vec))

    def as_dense(self) -> np.ndarray:
        """Return the plan as a dense ``(n_source, n_target)`` matrix."""
        dense = np.zeros((self.n_source, self.n_target))
        np.add.at(dense, (self.rows, self.cols), self.masses)
        return dense


@dataclass(frozen=True)
class MultiPlan:
    """Sparse N-marginal transport plan over index tuples.

    Entry ``k`` places mass ``masses[k]`` on the atom tuple
    ``(indices[k, 0], ..., indices[k, N-1])``, one index per marginal.
    """

    n_marginals: int
    support_sizes: tuple[int, ...]
    indices: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=int)
        masses = _as_vector(self.masses, "masses")
        if idx.ndim != 2 or idx.shape[1] != self.n_marginals:
            raise DimensionMismatchError(
                f"indices must have shape (k, {self.n_marginals}), got {idx.shape}"
            )
        if len(idx) != len(masses):
            raise DimensionMismatchError("indices and masses must share a length")
        if len(self.support_sizes) != self.n_marginals:
            raise DimensionMismatchError("support_sizes must have one entry per marginal")
        object.__setattr__(self, "support_sizes", tuple(int(s) for s in self.support_sizes))
        object.__setattr__(self, "indices", _freeze(idx))
        object.__setattr__(self, "masses", _freeze(masses))

    def __len__(self) -> int:
        return len(self.masses)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_measure(m: DiscreteMeasure, *, weight_sum_tol: float = WEIGHT_SUM_TOL) -> DiscreteMeasure:
    """Check the probability-measure invariants, returning ``m`` unchanged.

    Raises
    ------
    NonFiniteCoordinateError
        If any coordinate or weight is NaN or infinite.
    NegativeWeightError
        If any weight is negative beyond roundoff.
    WeightSumError
        If the weights do not sum to one within ``weight_sum_tol``.
    """
    if not np.isfinite(m.points).all():
        raise NonFiniteCoordinateError("measure has a non-finite coordinate")
    if not np.isfinite(m.weights).all():
        raise NonFiniteCoordinateError("measure has a non-finite weight")
    if len(m) and m.weights.min() < -_NEG_TOL:
        raise NegativeWeightError(f"negative weight {m.weights.min()!r}")
    total = float(m.weights.sum()) if len(m) else 0.0
    if abs(total - 1.0) > weight_sum_tol:
        raise WeightSumError(f"weights sum to {total!r}, expected 1")
    return m


def validate_coupling(
    plan: Coupling,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    *,
    marginal_tol: float = MARGINAL_TOL,
) -> Coupling:
    """Check that ``plan`` couples ``mu`` to ``nu``.

    Every entry must carry nonnegative mass on valid indices, and both
    marginal sums must match the measures within ``marginal_tol`` per atom.
    """
    if plan.n_source != len(mu) or plan.n_target != len(nu):
        raise DimensionMismatchError("coupling shape does not match the measures")
    if len(plan.masses) and plan.masses.min() < -_NEG_TOL:
        raise NegativeWeightError(f"negative plan mass {plan.masses.min()!r}")
    if not np.isfinite(plan.masses).all():
        raise NonFiniteCoordinateError("coupling has a non-finite mass")
    ok_rows = (plan.rows >= 0) & (plan.rows < plan.n_source)
    ok_cols = (plan.cols >= 0) & (plan.cols < plan.n_target)
    if not (ok_rows.all() and ok_cols.all()):
        raise IndexOutOfRangeError("coupling entry indexes a missing atom")
    row_sum = np.bincount(plan.rows, weights=plan.masses, minlength=plan.n_source)
    col_sum = np.bincount(plan.cols, weights=plan.masses, minlength=plan.n_target)
    row_err = float(np.abs(row_sum - mu.weights).max())
    col_err = float(np.abs(col_sum - nu.weights).max())
    if max(row_err, col_err) > marginal_tol:
        raise MarginalMismatchError(
            f"marginal mismatch: source {row_err:.3e}, target {col_err:.3e}"
        )
    return plan


def validate_multiplan(
    plan: MultiPlan,
    marginals: Sequence[DiscreteMeasure],
    *,
    marginal_tol: float = MARGINAL_TOL,
) -> MultiPlan:
    """Check that ``plan`` has the given measures as its marginals."""
    if plan.n_marginals != len(marginals):
        raise DimensionMismatchError(
            f"plan has {plan.n_marginals} marginals, got {len(marginals)} measures"
        )
    for k, mu in enumerate(marginals):
        if plan.support_sizes[k] != len(mu):
            raise DimensionMismatchError(f"support size mismatch at marginal {k}")
    if len(plan.masses) and plan.masses.min() < -_NEG_TOL:
        raise NegativeWeightError(f"negative plan mass {plan.masses.min()!r}")
    if not np.isfinite(plan.masses).all():
        raise NonFiniteCoordinateError("plan has a non-finite mass")
    for k, mu in enumerate(marginals):
        idx = plan.indices[:, k]
        if len(idx) and (idx.min() < 0 or idx.max() >= len(mu)):
            raise IndexOutOfRangeError(f"plan entry indexes a missing atom of marginal {k}")
        sums = np.bincount(idx, weights=plan.masses, minlength=len(mu))
        err = float(np.abs(sums - mu.weights).max())
        if err > marginal_tol:
            raise MarginalMismatchError(f"marginal {k} mismatch {err:.3e}")
    return plan


# ---------------------------------------------------------------------------
# canonical form and pushforward
# ---------------------------------------------------------------------------

def canonicalize(m: DiscreteMeasure, *, merge_tol: float = MERGE_TOL) -> DiscreteMeasure:
    """Merge atoms within ``merge_tol`` of each other and sort the support.

    Merging is transitive (union-find over the proximity graph); each
    group keeps the coordinates of its first atom in input order and the
    summed weight.  The result is sorted lexicographically by coordinates,
    which makes canonical measures directly comparable.
    """
    pts, wts = m.points, m.weights
    n = len(wts)
    if n == 0:
        return m
    parent = np.arange(n)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    diff = pts[:, None, :] - pts[None, :, :]
    close = (diff * diff).sum(axis=2) <= merge_tol * merge_tol
    for i, j in zip(*np.nonzero(np.triu(close, k=1))):
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    roots = np.array([find(i) for i in range(n)])
    reps = np.unique(roots)
    merged_w = np.array([wts[roots == r].sum() for r in reps])
    merged_p = pts[reps]
    order = np.lexsort(merged_p.T[::-1])
    return DiscreteMeasure(merged_p[order], merged_w[order])


def pushforward(m: DiscreteMeasure, f: Callable[[np.ndarray], object]) -> DiscreteMeasure:
    """Image measure of ``m`` under the map ``f``, in canonical form.

    ``f`` receives one atom at a time as a ``(d,)`` array and may return a
    scalar or a vector (all images must share one dimension).
    """
    images = [np.atleast_1d(np.asarray(f(pt), dtype=float)) for pt in m.points]
    dims = {img.shape for img in images}
    if len(dims) > 1:
        raise DimensionMismatchError(f"map produced mixed image shapes {sorted(dims)}")
    stacked = np.array(images)
    if stacked.ndim != 2:
        raise DimensionMismatchError("map must return points, not arrays")
    if not np.isfinite(stacked).all():
        raise NonFiniteImageError("map produced a non-finite image point")
    return canonicalize(DiscreteMeasure(stacked, m.weights))


def marginal(
    plan: MultiPlan,
    k: int,
    supports: Sequence[DiscreteMeasure] | Sequence[np.ndarray],
) -> DiscreteMeasure:
    """Project an N-marginal plan onto its ``k``-th marginal.

    ``supports`` gives the atom locations of every marginal, either as
    measures or as bare point arrays; only the ``k``-th entry is read.
    """
    if not 0 <= k < plan.n_marginals:
        raise IndexOutOfRangeError(f"marginal index {k} outside 0..{plan.n_marginals - 1}")
    support = supports[k]
    pts = support.points if isinstance(support, DiscreteMeasure) else _as_points(support)
    if len(pts) != plan.support_sizes[k]:
        raise DimensionMismatchError(f"support {k} has {len(pts)} atoms, plan expects {plan.support_sizes[k]}")
    weights = np.bincount(plan.indices[:, k], weights=plan.masses, minlength=len(pts))
    return DiscreteMeasure(pts, weights)


def measures_close(
    a: DiscreteMeasure,
    b: DiscreteMeasure,
    *,
    point_tol: float = MERGE_TOL,
    weight_tol: float = MARGINAL_TOL,
) -> bool:
    """Whether two measures agree atom-by-atom after canonicalization."""
    ca, cb = canonicalize(a), canonicalize(b)
    if len(ca) != len(cb) or ca.dim != cb.dim:
        return False
    return bool(
        np.abs(ca.points - cb.points).max(initial=0.0) <= point_tol
        and np.abs(ca.weights - cb.weights).max(initial=0.0) <= weight_tol
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def measure_to_dict(m: DiscreteMeasure) -> dict:
    return {
        "points": [[float(v) for v in pt] for pt in m.points],
        "weights": [float(w) for w in m.weights],
    }


def measure_from_dict(data: dict) -> DiscreteMeasure:
    if not isinstance(data, dict) or "points" not in data or "weights" not in data:
        raise DimensionMismatchError('expected an object with "points" and "weights"')
    return DiscreteMeasure(data["points"], data["weights"])


def save_measure(m: DiscreteMeasure, path: str | Path) -> None:
    """Write a measure as JSON (two keys: ``points``, ``weights``)."""
    Path(path).write_text(json.dumps(measure_to_dict(m), indent=2) + "\n")


def load_measure(path: str | Path) -> DiscreteMeasure:
    """Read a measure written by :func:`save_measure` and validate it."""
    return validate_measure(measure_from_dict(json.loads(Path(path).read_text())))


def measure_to_csv(m: DiscreteMeasure, path: str | Path) -> None:
    """Write a measure as CSV with header ``index,x_1,...,x_d,weight``."""
    cols = ",".join(f"x_{j + 1}" for j in range(m.dim))
    lines = [f"index,{cols},weight"]
    for i, (pt, w) in enumerate(zip(m.points, m.weights)):
        coords = ",".join(repr(float(v)) for v in pt)
        lines.append(f"{i},{coords},{float(w)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
