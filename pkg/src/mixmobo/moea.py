"""NSGA-II over the relaxed space with decode-before-evaluate.

Used to post-process final surrogates into the predicted front and as the
offline surrogate-based baseline.  Constraint handling follows the
constrained-domination rule: feasible beats infeasible, infeasible compare
by total violation, feasible compare by Pareto dominance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .design_space import DesignSpace, MixedPoint
from .pareto import ParetoArchive, nondominated_filter


@dataclass(frozen=True)
class Nsga2Config:
    pop_size: int = 100
    generations: int = 200
    crossover_prob: float = 0.9
    crossover_eta: float = 15.0
    mutation_prob: float | None = None  # defaults to 1/d'
    mutation_eta: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 4 or self.pop_size % 2:
            raise ValueError("population size must be even and >= 4")
        if self.generations < 1:
            raise ValueError("need at least one generation")


def _dominance_matrix(F: np.ndarray, violation: np.ndarray | None) -> np.ndarray:
    """D[i, j] is True when i constrained-dominates j."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt
    if violation is None:
        return dom
    feas = violation <= 0.0
    fi, fj = feas[:, None], feas[None, :]
    by_violation = violation[:, None] < violation[None, :]
    return (fi & ~fj) | (~fi & ~fj & by_violation) | (fi & fj & dom)


def fast_nondominated_sort(points, violation=None) -> list[np.ndarray]:
    """Partition into ranked fronts; front 0 is the nondominated set."""
    F = np.asarray(points, dtype=float)
    F = F.reshape(len(F), -1)
    D = _dominance_matrix(F, None if violation is None else np.asarray(violation, dtype=float))
    n_dominators = D.sum(axis=0)
    fronts = []
    remaining = np.arange(len(F))
    counts = n_dominators.copy()
    while len(remaining):
        mask = counts[remaining] == 0
        current = remaining[mask]
        if len(current) == 0:  # cannot happen with a strict partial order
            current = remaining
        fronts.append(current)
        remaining = remaining[~mask]
        for p in current:
            counts[D[p]] -= 1
    return fronts


def crowding_distance(front) -> np.ndarray:
    """Canonical crowding distance: boundary points infinite, interior the
    normalized cuboid semi-perimeter."""
    F = np.asarray(front, dtype=float)
    F = F.reshape(len(F), -1)
    n, m = F.shape
    if n == 0:
        raise ValueError("front must be nonempty")
    dist = np.zeros(n)
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        fj = F[order, j]
        span = fj[-1] - fj[0]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if span <= 0 or n < 3:
            continue
        dist[order[1:-1]] += (fj[2:] - fj[:-2]) / span
    return dist


def _sbx(p1, p2, lo, hi, eta, rng):
    u = rng.uniform(size=len(p1))
    beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)), (0.5 / (1 - u)) ** (1 / (eta + 1)))
    swap = rng.uniform(size=len(p1)) < 0.5
    c1 = 0.5 * ((1 + beta) * p1 + (1 - beta) * p2)
    c2 = 0.5 * ((1 - beta) * p1 + (1 + beta) * p2)
    c1, c2 = np.where(swap, c2, c1), np.where(swap, c1, c2)
    return np.clip(c1, lo, hi), np.clip(c2, lo, hi)


def _polynomial_mutation(x, lo, hi, prob, eta, rng):
    x = x.copy()
    span = hi - lo
    do = rng.uniform(size=len(x)) < prob
    if not np.any(do):
        return x
    u = rng.uniform(size=len(x))
    d1 = (x - lo) / span
    d2 = (hi - x) / span
    low_branch = (2 * u + (1 - 2 * u) * (1 - d1) ** (eta + 1)) ** (1 / (eta + 1)) - 1
    high_branch = 1 - (2 * (1 - u) + 2 * (u - 0.5) * (1 - d2) ** (eta + 1)) ** (1 / (eta + 1))
    delta = np.where(u <= 0.5, low_branch, high_branch)
    x[do] = x[do] + delta[do] * span[do]
    return np.clip(x, lo, hi)


def _rank_and_crowding(F, violation):
    fronts = fast_nondominated_sort(F, violation)
    rank = np.empty(len(F), dtype=int)
    crowd = np.empty(len(F))
    for r, idx in enumerate(fronts):
        rank[idx] = r
        crowd[idx] = crowding_distance(F[idx])
    return fronts, rank, crowd


def evolve(
    evaluate: Callable[[MixedPoint], tuple],
    space: DesignSpace,
    config: Nsga2Config,
) -> ParetoArchive:
    """Run NSGA-II and return the final feasible nondominated set.

    `evaluate` maps a MixedPoint to (objectives, constraints); the search
    itself runs on relaxed coordinates and decodes before every evaluation,
    so categorical validity and bounds hold at each call.  Identical decoded
    points are evaluated once (cache).
    """
    rng = np.random.default_rng(config.seed)
    lo, hi = space.relaxed_bounds()
    d = len(lo)
    pm = config.mutation_prob if config.mutation_prob is not None else 1.0 / d

    cache: dict[tuple, tuple] = {}

    def run_eval(coords: np.ndarray):
        point = space.decode(coords)
        key = point.values
        if key not in cache:
            f, g = evaluate(point)
            cache[key] = (
                point,
                np.asarray(f, dtype=float).ravel(),
                np.asarray(g, dtype=float).ravel(),
            )
        return cache[key]

    cols = [(rng.permutation(config.pop_size) + rng.uniform(size=config.pop_size)) / config.pop_size for _ in range(d)]
    X = lo + np.column_stack(cols) * (hi - lo)
    evals = [run_eval(x) for x in X]
    F = np.array([e[1] for e in evals])
    V = np.array([np.maximum(e[2], 0.0).sum() if len(e[2]) else 0.0 for e in evals])

    for _ in range(config.generations):
        _, rank, crowd = _rank_and_crowding(F, V)

        def tournament() -> int:
            i, j = rng.integers(0, config.pop_size, size=2)
            if rank[i] != rank[j]:
                return i if rank[i] < rank[j] else j
            if crowd[i] != crowd[j]:
                return i if crowd[i] > crowd[j] else j
            return min(i, j)

        children = []
        while len(children) < config.pop_size:
            a, b = X[tournament()], X[tournament()]
            if rng.uniform() < config.crossover_prob:
                c1, c2 = _sbx(a, b, lo, hi, config.crossover_eta, rng)
            else:
                c1, c2 = a.copy(), b.copy()
            children.append(_polynomial_mutation(c1, lo, hi, pm, config.mutation_eta, rng))
            children.append(_polynomial_mutation(c2, lo, hi, pm, config.mutation_eta, rng))
        C = np.array(children[: config.pop_size])

        child_evals = [run_eval(x) for x in C]
        Fc = np.array([e[1] for e in child_evals])
        Vc = np.array([np.maximum(e[2], 0.0).sum() if len(e[2]) else 0.0 for e in child_evals])

        X_all = np.vstack([X, C])
        F_all = np.vstack([F, Fc])
        V_all = np.concatenate([V, Vc])
        fronts, _, crowd_all = _rank_and_crowding(F_all, V_all)
        chosen: list[int] = []
        for idx in fronts:
            if len(chosen) + len(idx) <= config.pop_size:
                chosen.extend(idx.tolist())
            else:
                order = idx[np.argsort(-crowd_all[idx], kind="stable")]
                chosen.extend(order[: config.pop_size - len(chosen)].tolist())
                break
        X, F, V = X_all[chosen], F_all[chosen], V_all[chosen]

    archive = ParetoArchive(n_objectives=F.shape[1])
    feas = np.flatnonzero(V <= 0.0)
    if len(feas):
        keep = feas[nondominated_filter(F[feas])]
        for i in keep:
            point, f, g = run_eval(X[i])
            archive.add(point, f, g)
    return archive
