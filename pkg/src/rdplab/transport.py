"""Exact small-scale optimal transport under squared Euclidean cost.

Four routes, kept deliberately independent so they can cross-check each
other: a discrete-discrete LP solver with plan extraction, a 1-D monotone
quantile coupling, an empirical sample-based estimator via exact assignment,
and a closed-form oracle for rotationally symmetric targets fed by the
uniform distribution on the unit circle.

All costs are *squared* Wasserstein-2 values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import cdist

MAX_SUPPORT = 4096
WEIGHT_ATOL = 1e-12
MARGINAL_ATOL = 1e-10


class TransportValidationError(ValueError):
    """Bad input: weights off the simplex, size caps exceeded, shape mismatch."""


class TransportSolverError(RuntimeError):
    """The LP backend failed or returned an infeasible-looking plan."""


class UnsupportedConfigurationError(ValueError):
    """Input outside the closed-form oracle's symmetric regime."""


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(np.atleast_2d(a), np.atleast_2d(b), "sqeuclidean")


def _as_atom_matrix(atoms) -> np.ndarray:
    arr = np.asarray(atoms, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise TransportValidationError(f"atoms must be (n,) or (n, k), got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class FiniteDistribution:
    """Probability distribution with finite support in R^k.

    Atoms are rows of ``atoms``; a 1-D input array is read as n scalar atoms.
    Construction canonicalizes the support: atoms are sorted lexicographically,
    exact duplicates merged (weights summed), zero-weight atoms dropped. This
    keeps costs well-defined and plans unique up to merging.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        arr = _as_atom_matrix(self.atoms)
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape[0] != arr.shape[0]:
            raise TransportValidationError(
                f"{arr.shape[0]} atoms but {w.shape[0]} weights")
        if not np.all(np.isfinite(arr)) or not np.all(np.isfinite(w)):
            raise TransportValidationError("atoms and weights must be finite")
        if np.any(w < -WEIGHT_ATOL):
            raise TransportValidationError(f"negative weight: {w.min()}")
        if abs(w.sum() - 1.0) > WEIGHT_ATOL:
            raise TransportValidationError(f"weights sum to {w.sum()!r}, expected 1")
        keep = w > 0.0
        arr, w = arr[keep], w[keep]
        if arr.shape[0] == 0:
            raise TransportValidationError("empty support")
        uniq, inverse = np.unique(arr, axis=0, return_inverse=True)
        merged = np.zeros(uniq.shape[0])
        np.add.at(merged, inverse.ravel(), w)
        object.__setattr__(self, "atoms", uniq)
        object.__setattr__(self, "weights", merged)

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def values_1d(self) -> np.ndarray:
        """Atom values as a sorted 1-D array; errors if the support is not 1-D."""
        if self.dim != 1:
            raise TransportValidationError(f"1-D support required, got dim {self.dim}")
        return self.atoms[:, 0]

    @classmethod
    def uniform(cls, atoms) -> "FiniteDistribution":
        arr = _as_atom_matrix(atoms)
        return cls(arr, np.full(arr.shape[0], 1.0 / arr.shape[0]))

    @classmethod
    def point(cls, atom) -> "FiniteDistribution":
        return cls(np.atleast_2d(np.asarray(atom, dtype=float)), np.array([1.0]))

    def to_csv(self, path) -> None:
        """Write atoms/weights as CSV with columns x0..x{k-1},weight."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"x{i}" for i in range(self.dim)] + ["weight"])
            for atom, w in zip(self.atoms, self.weights):
                writer.writerow([f"{v:.17g}" for v in atom] + [f"{w:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "FiniteDistribution":
        rows = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        if rows.shape[1] < 2:
            raise TransportValidationError("CSV needs at least one coordinate column and a weight column")
        return cls(rows[:, :-1], rows[:, -1])


@dataclass(frozen=True)
class TransportPlan:
    """A coupling of two finite distributions with its squared-Euclidean cost."""

    source: FiniteDistribution
    target: FiniteDistribution
    plan: np.ndarray
    cost: float

    def validate(self, atol: float = MARGINAL_ATOL) -> None:
        """Check marginals, nonnegativity and cost consistency; raise on failure."""
        row_err = np.abs(self.plan.sum(axis=1) - self.source.weights).max()
        col_err = np.abs(self.plan.sum(axis=0) - self.target.weights).max()
        neg = -min(self.plan.min(), 0.0)
        cost_err = abs(
            float(np.sum(self.plan * squared_distances(self.source.atoms, self.target.atoms)))
            - self.cost)
        if max(row_err, col_err) > atol or neg > atol or cost_err > atol:
            raise TransportSolverError(
                "invalid plan: "
                f"row marginal err {row_err:.3e}, col marginal err {col_err:.3e}, "
                f"negativity {neg:.3e}, cost mismatch {cost_err:.3e}")

    def to_csv(self, path) -> None:
        """Write positive plan entries as CSV: source coords, target coords, weight."""
        kp, kq = self.source.dim, self.target.dim
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [f"src_x{i}" for i in range(kp)] + [f"dst_x{i}" for i in range(kq)] + ["weight"])
            for i, j in zip(*np.nonzero(self.plan > 0)):
                writer.writerow(
                    [f"{v:.17g}" for v in self.source.atoms[i]]
                    + [f"{v:.17g}" for v in self.target.atoms[j]]
                    + [f"{self.plan[i, j]:.17g}"])


def w2_exact(p: FiniteDistribution, q: FiniteDistribution) -> tuple[float, TransportPlan]:
    """Exact squared W2 between finite distributions, with an optimal plan.

    Solves the transportation LP with HiGHS; exact at desk scale (supports up
    to 4096 atoms; large dense instances are slow but still exact).
    """
    if p.size > MAX_SUPPORT or q.size > MAX_SUPPORT:
        raise TransportValidationError(
            f"support sizes {p.size}x{q.size} exceed the {MAX_SUPPORT} cap")
    n, m = p.size, q.size
    costs = squared_distances(p.atoms, q.atoms)
    if n == 1 or m == 1:
        plan = np.outer(p.weights, q.weights)  # the unique feasible coupling
    else:
        plan = _solve_transport_lp(costs, p.weights, q.weights)
    cost = float(np.sum(plan * costs))
    result = TransportPlan(p, q, plan, cost)
    result.validate()
    return cost, result


def _solve_transport_lp(costs: np.ndarray, wp: np.ndarray, wq: np.ndarray) -> np.ndarray:
    n, m = costs.shape
    # n row-sum constraints plus m-1 column sums; the last column is redundant.
    rows, cols, data = [], [], []
    for i in range(n):
        rows.extend([i] * m)
        cols.extend(range(i * m, (i + 1) * m))
        data.extend([1.0] * m)
    for j in range(m - 1):
        rows.extend([n + j] * n)
        cols.extend(range(j, n * m, m))
        data.extend([1.0] * n)
    a_eq = sparse.coo_matrix((data, (rows, cols)), shape=(n + m - 1, n * m)).tocsr()
    b_eq = np.concatenate([wp, wq[:-1]])
    res = linprog(costs.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise TransportSolverError(
            f"transport LP failed (status {res.status}): {res.message}")
    plan = res.x.reshape(n, m)
    if plan.min() < -1e-9:
        raise TransportSolverError(f"LP returned negative mass {plan.min():.3e}")
    return np.maximum(plan, 0.0)


def w2_1d_quantile(p: FiniteDistribution, q: FiniteDistribution) -> tuple[float, TransportPlan]:
    """Monotone (comonotone) coupling of two 1-D finite distributions.

    The quantile coupling is W2-optimal in one dimension, so the returned cost
    equals ``w2_exact`` on the same inputs; the two are computed by unrelated
    algorithms and are cross-checked in the test suite.
    """
    pa, qa = p.values_1d(), q.values_1d()  # canonically sorted
    n, m = p.size, q.size
    plan = np.zeros((n, m))
    wp = p.weights.copy()
    wq = q.weights.copy()
    cost = 0.0
    i = j = 0
    while i < n and j < m:
        t = min(wp[i], wq[j])
        plan[i, j] += t
        cost += t * (pa[i] - qa[j]) ** 2
        wp[i] -= t
        wq[j] -= t
        if wp[i] <= 0.0:
            i += 1
        if wq[j] <= 0.0:
            j += 1
    result = TransportPlan(p, q, plan, float(cost))
    result.validate()
    return float(cost), result


def w2_empirical(samples_a, samples_b) -> float:
    """Squared W2 between two equal-size empirical measures via exact assignment."""
    a = _as_atom_matrix(samples_a)
    b = _as_atom_matrix(samples_b)
    if a.shape[0] != b.shape[0]:
        raise TransportValidationError(
            f"equal sample counts required, got {a.shape[0]} and {b.shape[0]}")
    if a.shape[0] > MAX_SUPPORT:
        raise TransportValidationError(
            f"sample count {a.shape[0]} exceeds the {MAX_SUPPORT} cap")
    costs = squared_distances(a, b)
    rows, cols = linear_sum_assignment(costs)
    return float(costs[rows, cols].sum() / a.shape[0])


def w2_empirical_1d(samples_a, samples_b) -> float:
    """Squared W2 between equal-size 1-D empirical measures (sorted pairing).

    The monotone pairing of order statistics is the exact optimal assignment
    in one dimension, so this agrees with ``w2_empirical`` at O(n log n).
    """
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.shape[0] != b.shape[0]:
        raise TransportValidationError(
            f"equal sample counts required, got {a.shape[0]} and {b.shape[0]}")
    return float(np.mean((np.sort(a) - np.sort(b)) ** 2))


def semidiscrete_circle(targets: FiniteDistribution, *, angle_atol: float = 1e-9) -> float:
    """Squared W2 from the uniform unit circle to a symmetric finite target.

    Requires the k target atoms to be equally weighted rotated copies of one
    atom (rotations by 2*pi/k). The nearest-atom cells are then k equal arcs,
    each carrying mass exactly 1/k, so the greedy nearest-atom map is the
    optimal semidiscrete transport and the cost reduces to one arc integral:

        cost = 1 + r^2 - 2 r k sin(pi/k) / pi,   r = common atom radius.
    """
    if targets.dim != 2:
        raise UnsupportedConfigurationError(
            f"targets must live in R^2, got dim {targets.dim}")
    k = targets.size
    if np.abs(targets.weights - 1.0 / k).max() > WEIGHT_ATOL:
        raise UnsupportedConfigurationError("target atoms must be equally weighted")
    radii = np.linalg.norm(targets.atoms, axis=1)
    r = float(radii.mean())
    if radii.max() - radii.min() > angle_atol:
        raise UnsupportedConfigurationError("target atoms must share one radius")
    if k > 1:
        angles = np.sort(np.mod(np.arctan2(targets.atoms[:, 1], targets.atoms[:, 0]), 2 * np.pi))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        if np.abs(gaps - 2 * np.pi / k).max() > angle_atol:
            raise UnsupportedConfigurationError(
                "target atoms must be equally spaced in angle")
    return float(1.0 + r * r - 2.0 * r * k * np.sin(np.pi / k) / np.pi)
