"""Pareto dominance, archives, and hypervolume computation.

Minimization convention throughout: maximized objectives are negated at
ingestion.  Dominance is weak (a dominates b iff a_i <= b_i for all i).
Hypervolume is exact for 2 objectives (sweep) and 3 objectives (slicing),
and a seeded Monte-Carlo estimate for 4 or more; the estimate carries a
standard error so callers know the accuracy contract.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .design_space import MixedPoint

MC_SAMPLES = 200_000
MC_SEED = 20_240_501


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Weak Pareto dominance: a is no worse than b in every objective."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective length mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b))


def nondominated_filter(points) -> np.ndarray:
    """Indices of vectors not weakly dominated by any distinct vector.

    Exact duplicates keep only their first occurrence.
    """
    F = np.asarray(points, dtype=float)
    if F.ndim != 2:
        F = F.reshape(len(F), -1)
    n = len(F)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        le = np.all(F <= F[i], axis=1)
        eq = np.all(F == F[i], axis=1)
        # dominated by a strictly better vector, or a duplicate seen earlier
        if np.any(le & ~eq) or np.any(eq[:i]):
            keep[i] = False
    return np.flatnonzero(keep)


def _hv_2d(F: np.ndarray, ref: np.ndarray) -> float:
    # F already filtered to points strictly inside the reference box
    if len(F) == 0:
        return 0.0
    f = F[nondominated_filter(F)]
    f = f[np.argsort(f[:, 0])]  # f1 strictly increasing, f2 strictly decreasing
    hv = 0.0
    for i in range(len(f)):
        nxt = f[i + 1, 0] if i + 1 < len(f) else ref[0]
        hv += (nxt - f[i, 0]) * (ref[1] - f[i, 1])
    return hv


def _hv_3d(F: np.ndarray, ref: np.ndarray) -> float:
    zs = np.unique(F[:, 2])
    hv = 0.0
    for i, z in enumerate(zs):
        z_next = zs[i + 1] if i + 1 < len(zs) else ref[2]
        active = F[F[:, 2] <= z][:, :2]
        hv += _hv_2d(active, ref[:2]) * (z_next - z)
    return hv


def hypervolume_estimate(
    front, ref, n_samples: int = MC_SAMPLES, seed: int = MC_SEED
) -> tuple[float, float]:
    """Seeded Monte-Carlo hypervolume with its standard error (any dimension)."""
    F = np.asarray(front, dtype=float)
    ref = np.asarray(ref, dtype=float)
    F = F[np.all(F < ref, axis=1)]
    if len(F) == 0:
        return 0.0, 0.0
    lo = F.min(axis=0)
    box = float(np.prod(ref - lo))
    rng = np.random.default_rng(seed)
    hit = 0
    chunk = 20_000
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        u = rng.uniform(lo, ref, size=(m, len(ref)))
        dom = np.zeros(m, dtype=bool)
        for p in F:
            dom |= np.all(u >= p, axis=1)
        hit += int(dom.sum())
        done += m
    p_hat = hit / n_samples
    stderr = box * float(np.sqrt(p_hat * (1.0 - p_hat) / n_samples))
    return box * p_hat, stderr


def hypervolume(front, ref) -> float:
    """Volume dominated by `front` up to the reference point `ref`.

    Points that do not strictly dominate the reference contribute nothing.
    Exact for 1-3 objectives; seeded MC estimate (see MC_SAMPLES) above that.
    """
    F = np.asarray(front, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if ref.ndim != 1 or len(ref) == 0:
        raise ValueError("reference point must be a nonempty vector")
    if F.size == 0:
        return 0.0
    F = F.reshape(len(F), -1)
    if F.shape[1] != len(ref):
        raise ValueError("front and reference dimensions differ")
    F = F[np.all(F < ref, axis=1)]
    if len(F) == 0:
        return 0.0
    n = len(ref)
    if n == 1:
        return float(ref[0] - F.min())
    if n == 2:
        return float(_hv_2d(F, ref))
    if n == 3:
        return float(_hv_3d(F, ref))
    return hypervolume_estimate(F, ref)[0]


def hypervolume_improvement(front, ref, candidate) -> float:
    """HV(front + candidate) - HV(front); zero for dominated candidates."""
    F = np.asarray(front, dtype=float).reshape(-1, len(ref))
    c = np.asarray(candidate, dtype=float).reshape(1, -1)
    if len(F) and np.any(np.all(F <= c, axis=1)):
        return 0.0
    combined = np.vstack([F, c]) if len(F) else c
    return max(hypervolume(combined, ref) - hypervolume(F, ref), 0.0)


def reference_point(objectives, margin: float = 0.1, pad: float = 1e-6) -> np.ndarray:
    """Componentwise max plus a fractional range margin plus a tiny pad.

    Guarantees the reference is strictly dominated by every input point.
    """
    F = np.asarray(objectives, dtype=float).reshape(len(objectives), -1)
    hi = F.max(axis=0)
    rng = hi - F.min(axis=0)
    return hi + margin * rng + pad


@dataclass
class ArchiveEntry:
    point: MixedPoint
    objectives: tuple[float, ...]
    constraints: tuple[float, ...]
    feasible: bool


@dataclass
class ParetoArchive:
    """Evaluated points with feasibility flags and the nondominated subset.

    The nondominated front is computed over feasible entries only.  Mutation
    is single-writer; reads take snapshots (lists/arrays are copied out).
    """

    n_objectives: int
    entries: list[ArchiveEntry] = field(default_factory=list)

    def add(self, point: MixedPoint, f, g=()) -> ArchiveEntry:
        f = tuple(float(v) for v in f)
        g = tuple(float(v) for v in g)
        if len(f) != self.n_objectives:
            raise ValueError(f"expected {self.n_objectives} objectives, got {len(f)}")
        feasible = all(v <= 0.0 for v in g)
        entry = ArchiveEntry(point=point, objectives=f, constraints=g, feasible=feasible)
        self.entries.append(entry)
        return entry

    def feasible_objectives(self) -> np.ndarray:
        rows = [e.objectives for e in self.entries if e.feasible]
        return np.asarray(rows, dtype=float).reshape(len(rows), self.n_objectives)

    def nondominated_indices(self) -> list[int]:
        feas = [i for i, e in enumerate(self.entries) if e.feasible]
        if not feas:
            return []
        F = np.asarray([self.entries[i].objectives for i in feas])
        return [feas[j] for j in nondominated_filter(F)]

    def front(self) -> np.ndarray:
        idx = self.nondominated_indices()
        return np.asarray([self.entries[i].objectives for i in idx]).reshape(
            len(idx), self.n_objectives
        )

    def ref_point(self, margin: float = 0.1, pad: float = 1e-6) -> np.ndarray | None:
        F = self.feasible_objectives()
        if len(F) == 0:
            return None
        return reference_point(F, margin=margin, pad=pad)

    def hypervolume(self, ref=None) -> float:
        F = self.front()
        if len(F) == 0:
            return 0.0
        R = self.ref_point() if ref is None else np.asarray(ref, dtype=float)
        return hypervolume(F, R)

    def export_csv(self, path) -> None:
        """Front export: point_id, f1..fn, g1..gm, feasible, on_front."""
        on_front = set(self.nondominated_indices())
        m = max((len(e.constraints) for e in self.entries), default=0)
        header = (
            ["point_id"]
            + [f"f{i + 1}" for i in range(self.n_objectives)]
            + [f"g{j + 1}" for j in range(m)]
            + ["feasible", "on_front"]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, e in enumerate(self.entries):
                row = [i]
                row += [repr(v) for v in e.objectives]
                row += [repr(v) for v in e.constraints]
                row += [int(e.feasible), int(i in on_front)]
                writer.writerow(row)
