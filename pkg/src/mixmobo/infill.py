"""Inner optimization: maximize the regularized acquisition over the relaxed
box subject to surrogate-mean constraint feasibility.

Multistart COBYLA in unit coordinates; starts mix Latin hypercube draws with
perturbed nondominated archive points.  When no start lands feasible, the
iterate with the least total constraint violation is returned so the outer
loop always gets a point to evaluate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .acquisition import AcquisitionConfig, regularized
from .design_space import DesignSpace
from .surrogate import MultiOutputSurrogate

CONSTRAINT_TOL = 1e-6
DUPLICATE_TOL = 1e-12


@dataclass
class InfillProblem:
    surrogate: MultiOutputSurrogate
    acquisition: AcquisitionConfig
    space: DesignSpace
    front: np.ndarray  # feasible nondominated objective vectors (k x n)
    ref_point: np.ndarray
    obj_center: np.ndarray | None = None
    obj_scale: np.ndarray | None = None
    archive_coords: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.space.relaxed_bounds()

    def acquisition_value(self, x: np.ndarray) -> float:
        means, variances = self.surrogate.predict_objectives(x)
        sigmas = np.sqrt(np.maximum(variances, 0.0))
        return regularized(
            self.acquisition,
            means,
            sigmas,
            self.front,
            self.ref_point,
            obj_center=self.obj_center,
            obj_scale=self.obj_scale,
        )

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Acquisition value and constraint means in one surrogate pass.

        The archive front is already nondominated, so the criteria skip
        their defensive refiltering here.
        """
        f_means, f_vars, g_means = self.surrogate.predict_point(x)
        sigmas = np.sqrt(np.maximum(f_vars, 0.0))
        value = regularized(
            self.acquisition,
            f_means,
            sigmas,
            self.front,
            self.ref_point,
            obj_center=self.obj_center,
            obj_scale=self.obj_scale,
            prefiltered=True,
        )
        return value, g_means

    def constraint_means(self, x: np.ndarray) -> np.ndarray:
        if not self.surrogate.constraints:
            return np.empty(0)
        return self.surrogate.predict_constraint_means(x)


@dataclass
class InfillResult:
    coords: np.ndarray
    value: float
    feasible: bool
    start_index: int


def _lhs_unit(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    cols = [(rng.permutation(n) + rng.uniform(size=n)) / n for _ in range(d)]
    return np.column_stack(cols)


def solve(
    problem: InfillProblem,
    n_starts: int = 20,
    seed: int = 0,
    tol_c: float = CONSTRAINT_TOL,
    maxiter: int = 80,
) -> InfillResult:
    """Best-of-multistart constrained local search; deterministic per seed.

    Ties between equally good iterates break toward the lowest start index.
    """
    lo, hi = problem.bounds()
    span = hi - lo
    d = len(lo)
    rng = np.random.default_rng(seed)

    n_archive = min(len(problem.archive_coords), max(n_starts // 4, 0))
    n_lhs = max(n_starts - n_archive, 1)
    starts = [_lhs_unit(n_lhs, d, rng)[i] for i in range(n_lhs)]
    if n_archive:
        picks = rng.choice(len(problem.archive_coords), size=n_archive, replace=False)
        for idx in picks:
            u = (problem.archive_coords[idx] - lo) / span
            starts.append(np.clip(u + rng.normal(0.0, 0.05, size=d), 0.0, 1.0))

    def to_x(u: np.ndarray) -> np.ndarray:
        return lo + np.clip(u, 0.0, 1.0) * span

    # the local solver asks for objective and constraints at the same iterate;
    # cache one combined evaluation per point
    cache: dict[bytes, tuple[float, np.ndarray]] = {}

    def evaluate(u: np.ndarray) -> tuple[float, np.ndarray]:
        key = u.tobytes()
        if key not in cache:
            if len(cache) > 2048:
                cache.clear()
            cache[key] = problem.evaluate(to_x(u))
        return cache[key]

    def neg_acq(u: np.ndarray) -> float:
        return -evaluate(u)[0]

    cons = [{"type": "ineq", "fun": lambda u: np.concatenate([u, 1.0 - u])}]
    if problem.surrogate.constraints:
        cons.append({"type": "ineq", "fun": lambda u: tol_c - evaluate(u)[1]})

    best = None  # (feasible, key, result)
    for i, u0 in enumerate(starts):
        res = optimize.minimize(
            neg_acq,
            u0,
            method="COBYLA",
            constraints=cons,
            options={"rhobeg": 0.25, "maxiter": maxiter, "tol": 1e-5},
        )
        u = np.clip(res.x, 0.0, 1.0)
        x = to_x(u)
        value, g = problem.evaluate(x)
        violation = float(np.maximum(g, 0.0).sum()) if g.size else 0.0
        feasible = bool(np.all(g <= tol_c)) if g.size else True
        key = (-value, i) if feasible else (violation, i)
        if best is None:
            best = (feasible, key, InfillResult(x, value, feasible, i))
            continue
        if feasible and not best[0]:
            best = (True, key, InfillResult(x, value, feasible, i))
        elif feasible == best[0] and key < best[1]:
            best = (feasible, key, InfillResult(x, value, feasible, i))
    return best[2]


def dedup_guard(
    candidate: np.ndarray,
    X_train: np.ndarray,
    space: DesignSpace,
    seed: int = 0,
    n_draws: int = 100,
) -> tuple[np.ndarray, bool]:
    """Replace a candidate whose decoded point was already evaluated.

    The replacement is the encoded LHS draw with maximal minimum distance to
    the training rows among `n_draws` seeded draws.  If every draw collides
    too (tiny exhausted spaces), the original candidate comes back with the
    exhausted flag set.
    """
    candidate = np.asarray(candidate, dtype=float)
    X_train = np.asarray(X_train, dtype=float)
    if X_train.size == 0:
        return candidate, False
    recoded = space.encode(space.decode(candidate)).as_array()
    dists = np.linalg.norm(X_train - recoded, axis=1)
    if dists.min() > DUPLICATE_TOL:
        return candidate, False

    best_coords, best_dist = None, -1.0
    for p in space.lhs_sample(n_draws, seed):
        coords = space.encode(p).as_array()
        dmin = float(np.linalg.norm(X_train - coords, axis=1).min())
        if dmin > DUPLICATE_TOL and dmin > best_dist:
            best_coords, best_dist = coords, dmin
    if best_coords is None:
        return candidate, True
    return best_coords, False
