"""Pairwise social-distancing filter.

Given nominal velocities for n planar agents with single-integrator
dynamics, this module finds the closest velocities (least squared
deviation) that keep every pair's barrier function

    h(x_i, x_j) = ||x_i - x_j||^2 - d_social^2

from decaying faster than a linear rate: d/dt h >= -gamma * h for all
pairs i < j. Each pair contributes one linear inequality in the stacked
velocity vector, and the filter is the strictly convex quadratic program

    minimize    sum_i ||u_i - uhat_i||^2
    subject to  2 (x_i - x_j) . (u_i - u_j) >= -gamma * h(x_i, x_j)

solved by a dual-feasible active-set iteration: start at the
unconstrained optimum uhat, repeatedly enforce the most violated row as
an equality, and drop rows whose multiplier turns negative. With the
identity Hessian each equality solve reduces to a small Gram system over
the working set, so the expensive full KKT matrix never materializes.

If the iteration cap is hit (degenerate geometry can stall the active
set), callers fall back to a sequential per-pair projection that is not
optimal but keeps an interactive session responsive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConfigError, DegeneratePairError, QpFailureError

__all__ = [
    "DEFAULT_TOLERANCE",
    "MAX_ITERATIONS",
    "BarrierSpec",
    "QpProblem",
    "QpSolution",
    "barrier_value",
    "constraint_row",
    "assemble_qp",
    "solve_qp",
    "safe_velocities",
]

DEFAULT_TOLERANCE = 1e-6
MAX_ITERATIONS = 100_000

# Multipliers below this are treated as negative when deciding whether to
# drop a row from the working set.
_DUAL_FEASIBILITY_SLACK = -1e-12


@dataclass(frozen=True)
class BarrierSpec:
    """Distance to enforce and the slope of the linear decay bound."""

    d_social: float
    gamma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("d_social", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(name, f"must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class QpProblem:
    """One distancing QP instance.

    Constraint row k applies to the unordered pair (pair_i[k], pair_j[k])
    with i < j, and reads normals[k] . (u_i - u_j) >= offsets[k]. Rows are
    stored in ascending pair order, one per pair.
    """

    n: int
    nominal: np.ndarray  # (n, 2)
    pair_i: np.ndarray  # (m,) int
    pair_j: np.ndarray  # (m,) int
    normals: np.ndarray  # (m, 2)
    offsets: np.ndarray  # (m,)

    @property
    def n_constraints(self) -> int:
        return int(self.offsets.shape[0])

    def rows(self) -> Iterator[tuple[int, int, np.ndarray, float]]:
        for k in range(self.n_constraints):
            yield (
                int(self.pair_i[k]),
                int(self.pair_j[k]),
                self.normals[k],
                float(self.offsets[k]),
            )


@dataclass(frozen=True)
class QpSolution:
    """Filtered velocities plus solve diagnostics.

    status is "optimal" when the active-set iteration converged and
    "fallback" when the sequential projection had to take over; in the
    latter case active_count is the number of rows still being adjusted
    in the final projection sweep.
    """

    velocities: np.ndarray  # (n, 2)
    objective_value: float
    max_violation: float
    active_count: int
    status: str


def barrier_value(x_i, x_j, d_social: float) -> float:
    """Squared clearance beyond the distancing radius; negative inside it."""
    dx = float(x_i[0]) - float(x_j[0])
    dy = float(x_i[1]) - float(x_j[1])
    return dx * dx + dy * dy - d_social * d_social


def constraint_row(x_i, x_j, spec: BarrierSpec) -> tuple[np.ndarray, float]:
    """Linear inequality a . (u_i - u_j) >= b for one pair.

    Differentiating the barrier under single-integrator dynamics gives
    d/dt h = 2 (x_i - x_j) . (u_i - u_j), so a = 2 (x_i - x_j) and
    b = -gamma * h. Coincident positions leave no separating direction
    and raise DegeneratePairError.
    """
    a = 2.0 * (np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float))
    if a[0] == 0.0 and a[1] == 0.0:
        raise DegeneratePairError()
    b = -spec.gamma * barrier_value(x_i, x_j, spec.d_social)
    return a, b


def assemble_qp(positions, nominal, spec: BarrierSpec) -> QpProblem:
    """Build the full QP: one row per unordered pair, ascending order."""
    pos = np.array(positions, dtype=float)
    nom = np.array(nominal, dtype=float)
    if pos.shape != nom.shape or pos.ndim != 2 or (pos.size and pos.shape[1] != 2):
        raise ConfigError(
            "nominal", f"positions {pos.shape} and nominal {nom.shape} must both be (n, 2)"
        )
    n = pos.shape[0]
    pair_i, pair_j = np.triu_indices(n, k=1)
    diffs = pos[pair_i] - pos[pair_j]
    coincident = np.flatnonzero((diffs[:, 0] == 0.0) & (diffs[:, 1] == 0.0))
    if coincident.size:
        k = int(coincident[0])
        raise DegeneratePairError(int(pair_i[k]), int(pair_j[k]))
    h = np.einsum("kd,kd->k", diffs, diffs) - spec.d_social**2
    return QpProblem(
        n=n,
        nominal=nom,
        pair_i=pair_i,
        pair_j=pair_j,
        normals=2.0 * diffs,
        offsets=-spec.gamma * h,
    )


def _row_values(problem: QpProblem, u: np.ndarray) -> np.ndarray:
    """Left-hand side a . (u_i - u_j) of every row at velocities u."""
    du = u[problem.pair_i] - u[problem.pair_j]
    return np.einsum("kd,kd->k", problem.normals, du)


def _gram(problem: QpProblem, working: list[int]) -> np.ndarray:
    """Gram matrix of the working rows in the stacked velocity space.

    Row k touches only slots i_k and j_k, so the inner product of two
    rows is their normal dot product times an overlap count in {-2..2}.
    """
    idx = np.asarray(working)
    a = problem.normals[idx]
    i = problem.pair_i[idx]
    j = problem.pair_j[idx]
    overlap = (
        (i[:, None] == i[None, :]).astype(float)
        + (j[:, None] == j[None, :])
        - (i[:, None] == j[None, :])
        - (j[:, None] == i[None, :])
    )
    return (a @ a.T) * overlap


def _apply_multipliers(problem: QpProblem, working: list[int], lam: np.ndarray) -> np.ndarray:
    """Stationarity: u = uhat + (1/2) sum_k lam_k c_k, scattered per pair."""
    u = problem.nominal.copy()
    idx = np.asarray(working)
    contrib = 0.5 * lam[:, None] * problem.normals[idx]
    np.add.at(u, problem.pair_i[idx], contrib)
    np.subtract.at(u, problem.pair_j[idx], contrib)
    return u


def solve_qp(
    problem: QpProblem,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> QpSolution:
    """Active-set solve of one distancing QP.

    Maintains stationarity and dual feasibility throughout and iterates
    until no row is violated by more than ``tolerance``. Raises
    QpFailureError with the best iterate if ``max_iterations`` add/drop
    cycles do not reach feasibility.
    """
    nominal = problem.nominal
    if problem.n_constraints == 0:
        return QpSolution(
            velocities=nominal.copy(),
            objective_value=0.0,
            max_violation=0.0,
            active_count=0,
            status="optimal",
        )

    values_at_nominal = _row_values(problem, nominal)
    working: list[int] = []
    lam = np.empty(0)
    u = nominal.copy()

    for _ in range(max_iterations):
        if working:
            gram = _gram(problem, working)
            rhs = 2.0 * (problem.offsets[working] - values_at_nominal[working])
            try:
                lam = np.linalg.solve(gram, rhs)
            except np.linalg.LinAlgError:
                lam, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
            u = _apply_multipliers(problem, working, lam)
        else:
            lam = np.empty(0)
            u = nominal.copy()

        if lam.size and lam.min() < _DUAL_FEASIBILITY_SLACK:
            working.pop(int(np.argmin(lam)))
            continue

        violations = problem.offsets - _row_values(problem, u)
        worst = int(np.argmax(violations))
        if violations[worst] <= tolerance:
            objective = float(np.sum((u - nominal) ** 2))
            return QpSolution(
                velocities=u,
                objective_value=objective,
                max_violation=float(max(0.0, violations.max())),
                active_count=len(working),
                status="optimal",
            )
        if worst in working:
            # The equality solve could not enforce this row (singular,
            # inconsistent working set); more iterations will not help.
            break
        working.append(worst)

    violations = problem.offsets - _row_values(problem, u)
    raise QpFailureError(
        iterations=max_iterations,
        best_iterate=u,
        max_violation=float(max(0.0, violations.max())),
    )


def _project_pairs(problem: QpProblem, sweeps: int = 3) -> tuple[np.ndarray, int]:
    """Sequentially project nominal velocities onto violated rows.

    Each sweep walks the rows in ascending pair order and, for any row
    currently violated, applies the minimum-norm correction split
    antisymmetrically between the two agents. Later projections can
    re-violate earlier rows, hence the fixed number of sweeps; the
    result is feasible-ish, not optimal.
    """
    u = problem.nominal.copy()
    touched = 0
    for _ in range(sweeps):
        touched = 0
        for k in range(problem.n_constraints):
            i = problem.pair_i[k]
            j = problem.pair_j[k]
            a = problem.normals[k]
            value = float(a @ (u[i] - u[j]))
            gap = problem.offsets[k] - value
            if gap > 0.0:
                step = gap / (2.0 * float(a @ a))
                u[i] += step * a
                u[j] -= step * a
                touched += 1
    return u, touched


def safe_velocities(
    positions,
    nominal,
    spec: BarrierSpec,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> QpSolution:
    """Filter nominal velocities through the distancing QP.

    Assembles the all-pairs problem and solves it; if the solver fails
    to converge the nominal velocities are instead pushed through the
    sequential projection and the solution is flagged "fallback".
    """
    problem = assemble_qp(positions, nominal, spec)
    try:
        return solve_qp(problem, tolerance=tolerance, max_iterations=max_iterations)
    except QpFailureError:
        u, touched = _project_pairs(problem)
        violations = problem.offsets - _row_values(problem, u)
        return QpSolution(
            velocities=u,
            objective_value=float(np.sum((u - problem.nominal) ** 2)),
            max_violation=float(max(0.0, violations.max(initial=0.0))),
            active_count=touched,
            status="fallback",
        )
