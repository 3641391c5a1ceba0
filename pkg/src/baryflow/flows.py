"""Particle flows induced by an optimal multi-marginal plan.

Each support tuple of the plan spawns one particle per marginal: all N
particles of a tuple start at the tuple's barycenter point and travel in
a straight line at constant speed, reaching the respective marginal atoms
at time one.  Family ``i`` of particles therefore interpolates the
barycenter measure to the ``i``-th marginal; these are the geodesic
(displacement) interpolations of the pairwise transport problems.

Reinterpreting a whole tuple as a single particle in the product space
gives a flow of couplings: it starts on the diagonal (every factor at the
barycenter point) and ends at a coupling of the marginals.  Its action
under the infimal-convolution cost of the velocity components equals the
plain flow action, because the summed velocity gradients of each tuple
vanish at the barycenter; both quantities are computed here
independently so the equality can be certified rather than assumed.

All time integrals are evaluated in closed form or by Gauss-Legendre
quadrature on polynomial integrands; nothing is time-stepped.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _cartesian
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    TimeOutOfRangeError,
    WrongExponentError,
)
from .infconv import batch_barycenters, check_exponent, power_cost_gradient
from .measures import DiscreteMeasure, canonicalize
from .transport import MmotResult

__all__ = [
    "ParticleFlow",
    "CouplingFlow",
    "build_particle_flow",
    "build_coupling_flow",
    "snapshot",
    "coupling_snapshot",
    "flow_start_measure",
    "flow_marginal",
    "flow_action",
    "coupling_flow_action",
    "velocity_balance_residual",
    "momentum_balance_residual",
    "continuity_residual",
    "export_flow_frames",
    "export_coupling_frames",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(arr, dtype=float))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ParticleFlow:
    """N families of straight-line particles with a shared start.

    Attributes
    ----------
    starts : ndarray, shape (K, d)
        Common initial position of the K particle tuples.
    targets : ndarray, shape (K, N, d)
        Endpoint of particle ``(k, i)``: tuple ``k``, family ``i``.
    masses : ndarray, shape (K,)
        Mass carried by each tuple (shared by all its families).
    p : float
        Cost exponent of the underlying transport problem.
    """

    starts: np.ndarray
    targets: np.ndarray
    masses: np.ndarray
    p: float

    def __post_init__(self) -> None:
        starts = np.asarray(self.starts, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if starts.ndim != 2 or targets.ndim != 3 or masses.ndim != 1:
            raise DimensionMismatchError("expected starts (K,d), targets (K,N,d), masses (K,)")
        if targets.shape[0] != starts.shape[0] or targets.shape[2] != starts.shape[1]:
            raise DimensionMismatchError("targets do not match starts in count or dimension")
        if len(masses) != len(starts):
            raise DimensionMismatchError("one mass per particle tuple is required")
        object.__setattr__(self, "starts", _freeze(starts))
        object.__setattr__(self, "targets", _freeze(targets))
        object.__setattr__(self, "masses", _freeze(masses))
        object.__setattr__(self, "p", check_exponent(self.p))

    @property
    def n_marginals(self) -> int:
        return self.targets.shape[1]

    @property
    def dim(self) -> int:
        return self.starts.shape[1]

    @property
    def velocities(self) -> np.ndarray:
        """Constant velocities, shape (K, N, d)."""
        return self.targets - self.starts[:, None, :]

    def __len__(self) -> int:
        return len(self.masses)


@dataclass(frozen=True)
class CouplingFlow:
    """Straight-line flow of couplings in the product space R^(N*d).

    At time zero all factor coordinates coincide (the diagonal measure of
    the barycenter), at time one the atoms form a coupling of the
    marginals.
    """

    starts: np.ndarray
    targets: np.ndarray
    masses: np.ndarray
    p: float
    n_marginals: int

    def __post_init__(self) -> None:
        starts = np.asarray(self.starts, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        if starts.shape != targets.shape or starts.ndim != 2:
            raise DimensionMismatchError("starts and targets must share a (K, N*d) shape")
        if starts.shape[1] % self.n_marginals != 0:
            raise DimensionMismatchError("flat dimension is not a multiple of the marginal count")
        object.__setattr__(self, "starts", _freeze(starts))
        object.__setattr__(self, "targets", _freeze(targets))
        object.__setattr__(self, "masses", _freeze(np.asarray(self.masses, dtype=float)))
        object.__setattr__(self, "p", check_exponent(self.p))

    @property
    def dim(self) -> int:
        """Dimension of one factor."""
        return self.starts.shape[1] // self.n_marginals

    def __len__(self) -> int:
        return len(self.masses)


def build_particle_flow(result: MmotResult) -> ParticleFlow:
    """Particle flow of an optimal plan: one tuple of particles per entry."""
    targets = np.stack(
        [result.marginals[k].points[result.plan.indices[:, k]]
         for k in range(result.plan.n_marginals)],
        axis=1,
    )
    return ParticleFlow(
        starts=result.tuple_barycenters,
        targets=targets,
        masses=result.plan.masses,
        p=result.p,
    )


def build_coupling_flow(flow: ParticleFlow) -> CouplingFlow:
    """Reinterpret the particle tuples as single product-space particles."""
    K, N, d = flow.targets.shape
    return CouplingFlow(
        starts=np.tile(flow.starts, (1, N)),
        targets=flow.targets.reshape(K, N * d),
        masses=flow.masses,
        p=flow.p,
        n_marginals=N,
    )


def _check_time(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise TimeOutOfRangeError(f"time {t!r} outside [0, 1]")
    return t


def snapshot(flow: ParticleFlow, i: int, t: float) -> DiscreteMeasure:
    """Measure of family ``i`` at time ``t``, in canonical form.

    Atoms sit at ``(1-t) start + t target``; time zero reproduces the
    barycenter measure and time one the ``i``-th marginal.
    """
    if not 0 <= i < flow.n_marginals:
        raise IndexOutOfRangeError(f"family index {i} outside 0..{flow.n_marginals - 1}")
    t = _check_time(t)
    positions = (1.0 - t) * flow.starts + t * flow.targets[:, i, :]
    return canonicalize(DiscreteMeasure(positions, flow.masses))


def coupling_snapshot(cflow: CouplingFlow, t: float) -> DiscreteMeasure:
    """Product-space measure of the coupling flow at time ``t``."""
    t = _check_time(t)
    positions = (1.0 - t) * cflow.starts + t * cflow.targets
    return canonicalize(DiscreteMeasure(positions, cflow.masses))


def flow_start_measure(flow: ParticleFlow) -> DiscreteMeasure:
    """Common time-zero measure of all families (the barycenter measure)."""
    return canonicalize(DiscreteMeasure(flow.starts, flow.masses))


def flow_marginal(flow: ParticleFlow, i: int) -> DiscreteMeasure:
    """Endpoint measure of family ``i`` (equals the ``i``-th marginal)."""
    if not 0 <= i < flow.n_marginals:
        raise IndexOutOfRangeError(f"family index {i} outside 0..{flow.n_marginals - 1}")
    return canonicalize(DiscreteMeasure(flow.targets[:, i, :], flow.masses))


# ---------------------------------------------------------------------------
# actions and residuals
# ---------------------------------------------------------------------------

def flow_action(flow: ParticleFlow) -> float:
    """Kinetic action ``sum_k mass_k sum_i |velocity_{k,i}|^p``.

    Straight lines at constant speed make the time integral of the
    p-th speed power equal the p-th power of the displacement, so the
    action coincides with the transport value of the generating plan.
    """
    speeds = np.linalg.norm(flow.velocities, axis=2)
    return float((flow.masses * (speeds**flow.p).sum(axis=1)).sum())


def coupling_flow_action(cflow: CouplingFlow) -> float:
    """Action of the coupling flow under the infimal-convolution cost.

    The instantaneous cost of a product-space velocity is
    ``inf_w sum_i |v_i - w|^p`` over its factor components; it is
    computed here with the same Newton solver used for tuple costs, not
    assumed to simplify.  For flows built from an optimal plan the inner
    minimizer is the zero vector and the action equals
    :func:`flow_action`.
    """
    K = len(cflow)
    N, d = cflow.n_marginals, cflow.dim
    velocities = (cflow.targets - cflow.starts).reshape(K, N, d)
    _, costs, _ = batch_barycenters(velocities, cflow.p)
    return float((cflow.masses * costs).sum())


def velocity_balance_residual(flow: ParticleFlow) -> float:
    """Worst normalized violation of the balanced-velocity condition.

    For every tuple the velocity gradients ``p |v_i|^(p-2) v_i`` must sum
    to zero; the norm of the sum is scaled by
    ``1 + sum_i |v_i|^(p-1)`` before taking the maximum.
    """
    grads = power_cost_gradient(flow.velocities, flow.p)
    speeds = np.linalg.norm(flow.velocities, axis=2)
    scale = 1.0 + (speeds ** (flow.p - 1.0)).sum(axis=1)
    return float((np.linalg.norm(grads.sum(axis=1), axis=1) / scale).max(initial=0.0))


def momentum_balance_residual(flow: ParticleFlow) -> float:
    """Worst violation of plain and mass-weighted velocity sums (p = 2).

    For the quadratic cost the balanced-velocity condition loses its
    weights, so both ``sum_i v_i`` and ``mass * sum_i v_i`` must vanish
    per tuple.  Raises :class:`WrongExponentError` for any other
    exponent, where neither sum is expected to vanish.
    """
    if flow.p != 2.0:
        raise WrongExponentError(f"momentum balance needs exponent 2, flow has p={flow.p!r}")
    sums = flow.velocities.sum(axis=1)
    plain = np.linalg.norm(sums, axis=1)
    weighted = flow.masses * plain
    return float(max(plain.max(initial=0.0), weighted.max(initial=0.0)))


def _test_monomials(dim: int, degree: int) -> Iterator[tuple[int, np.ndarray]]:
    """All (time power, space multi-index) with total degree <= degree."""
    for a in range(degree + 1):
        for beta in _cartesian(range(degree + 1), repeat=dim):
            if a + sum(beta) <= degree:
                yield a, np.asarray(beta, dtype=int)


def continuity_residual(flow: ParticleFlow, i: int, degree: int = 4) -> float:
    """Weak-form continuity-equation defect of family ``i``.

    Tests the transport identity

        d/dt <density, test> = <density, dt test + velocity . grad test>

    against all monomial test functions ``t^a x^beta`` of total degree at
    most ``degree``.  The time integral uses ``degree + 1`` point
    Gauss-Legendre quadrature, which is exact here because every
    integrand is a polynomial in ``t`` of degree below ``2 (degree + 1)``;
    the returned maximum defect is therefore pure roundoff.
    """
    if not 0 <= i < flow.n_marginals:
        raise IndexOutOfRangeError(f"family index {i} outside 0..{flow.n_marginals - 1}")
    if degree < 0:
        raise ValueError(f"degree must be nonnegative, got {degree}")
    z = flow.starts
    x = flow.targets[:, i, :]
    v = x - z
    m = flow.masses

    nodes, weights = np.polynomial.legendre.leggauss(degree + 1)
    t_nodes = 0.5 * (nodes + 1.0)
    t_weights = 0.5 * weights

    worst = 0.0
    for a, beta in _test_monomials(flow.dim, degree):
        end = float((m * (x**beta).prod(axis=1)).sum())
        start = float((m * (z**beta).prod(axis=1)).sum()) if a == 0 else 0.0
        boundary = end - start

        integral = 0.0
        for t, w in zip(t_nodes, t_weights):
            y = (1.0 - t) * z + t * x
            mono = (y**beta).prod(axis=1)
            time_part = a * t ** (a - 1) * mono if a >= 1 else np.zeros(len(m))
            advect = np.zeros(len(m))
            for j in range(flow.dim):
                if beta[j] == 0:
                    continue
                lowered = beta.copy()
                lowered[j] -= 1
                advect += beta[j] * (y**lowered).prod(axis=1) * v[:, j]
            integral += w * float((m * (time_part + t**a * advect)).sum())
        worst = max(worst, abs(boundary - integral))
    return worst


# ---------------------------------------------------------------------------
# frame export
# ---------------------------------------------------------------------------

def _format_row(values: Sequence[object]) -> str:
    return ",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in values)


def export_flow_frames(flow: ParticleFlow, times: Sequence[float], path: str | Path) -> None:
    """Write particle positions and velocities at the given times as CSV.

    Header is ``t,flow,particle,mass,x_1,...,x_d,v_1,...,v_d``; the
    ``flow`` column is the 1-based family index and ``particle`` the
    1-based tuple index.
    """
    times = [_check_time(t) for t in times]
    d = flow.dim
    header = (
        "t,flow,particle,mass,"
        + ",".join(f"x_{j + 1}" for j in range(d))
        + ","
        + ",".join(f"v_{j + 1}" for j in range(d))
    )
    lines = [header]
    velocities = flow.velocities
    for t in times:
        for i in range(flow.n_marginals):
            positions = (1.0 - t) * flow.starts + t * flow.targets[:, i, :]
            for k in range(len(flow)):
                row = [float(t), i + 1, k + 1, float(flow.masses[k])]
                row += [float(c) for c in positions[k]]
                row += [float(c) for c in velocities[k, i]]
                lines.append(_format_row(row))
    Path(path).write_text("\n".join(lines) + "\n")


def export_coupling_frames(cflow: CouplingFlow, times: Sequence[float], path: str | Path) -> None:
    """Write the coupling-flow frames as CSV over the product coordinates.

    Same layout as :func:`export_flow_frames` with a single flow (column
    value 1) and ``N * d`` coordinate and velocity columns.
    """
    times = [_check_time(t) for t in times]
    nd = cflow.starts.shape[1]
    header = (
        "t,flow,particle,mass,"
        + ",".join(f"x_{j + 1}" for j in range(nd))
        + ","
        + ",".join(f"v_{j + 1}" for j in range(nd))
    )
    lines = [header]
    velocities = cflow.targets - cflow.starts
    for t in times:
        positions = (1.0 - t) * cflow.starts + t * cflow.targets
        for k in range(len(cflow)):
            row = [float(t), 1, k + 1, float(cflow.masses[k])]
            row += [float(c) for c in positions[k]]
            row += [float(c) for c in velocities[k]]
            lines.append(_format_row(row))
    Path(path).write_text("\n".join(lines) + "\n")
