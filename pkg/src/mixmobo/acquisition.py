"""Scalar acquisition criteria over the surrogate's Gaussian predictions.

All criteria take the candidate's predictive means/sigmas per objective,
the current feasible nondominated front and (where relevant) the reference
point, minimization convention.  The two-objective expected hypervolume
improvement is exact (strip decomposition of the nondominated region, with
closed-form Gaussian integrals); three or more objectives fall back to a
seeded Monte-Carlo estimate so acquisition surfaces stay deterministic
within a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .pareto import hypervolume_improvement, nondominated_filter

EHVI = "ehvi"
PI = "pi"
MPI = "mpi"
_CRITERIA = (EHVI, PI, MPI)
_REGS = ("none", "max", "sum")

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AcquisitionConfig:
    criterion: str = EHVI
    reg: str = "none"
    gamma: float = 1.0
    mc_samples: int = 10_000
    seed: int = 0
    ref_point_policy: str = "feasible-max-margin"  # the only implemented policy

    def __post_init__(self):
        if self.criterion not in _CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.reg not in _REGS:
            raise ValueError(f"unknown regularization {self.reg!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


def _phi(s: np.ndarray) -> np.ndarray:
    return _INV_SQRT_2PI * np.exp(-0.5 * s * s)


def _int_cdf(a: float, b: float, mu: float, sigma: float) -> float:
    """Integral of the Gaussian CDF u -> P(Z <= u) over [a, b], b >= a.

    For sigma = 0 the CDF is a unit step at mu.  Handles a = -inf.
    """
    if b <= a:
        return 0.0
    if sigma <= 0.0:
        fb = max(b - mu, 0.0)
        fa = max(a - mu, 0.0) if np.isfinite(a) else 0.0
        return fb - fa

    def psi(s: float) -> float:  # antiderivative of the standard normal CDF
        if not np.isfinite(s):
            return 0.0 if s < 0 else np.inf
        return s * float(ndtr(s)) + float(_phi(np.asarray(s)))

    return sigma * (psi((b - mu) / sigma) - psi((a - mu) / sigma))


def _clean_front(front, ref=None, prefiltered: bool = False) -> np.ndarray:
    F = np.asarray(front, dtype=float)
    if F.size == 0:
        return F.reshape(0, 0 if ref is None else len(ref))
    F = F.reshape(len(F), -1)
    if ref is not None:
        F = F[np.all(F < np.asarray(ref, dtype=float), axis=1)]
    if len(F) and not prefiltered:
        F = F[nondominated_filter(F)]
    return F


def _ehvi_2d_exact(means, sigmas, F: np.ndarray, ref) -> float:
    # strips of the nondominated region, cut at the front's f1 coordinates
    order = np.argsort(F[:, 0]) if len(F) else np.array([], dtype=int)
    f = F[order]
    b = np.concatenate([[-np.inf], f[:, 0], [ref[0]]])
    heights = np.concatenate([[ref[1]], f[:, 1]])
    total = 0.0
    for j in range(len(heights)):
        lo, hi = b[j], min(b[j + 1], ref[0])
        width = _int_cdf(lo, hi, means[0], sigmas[0])
        if width > 0.0:
            total += width * _int_cdf(-np.inf, heights[j], means[1], sigmas[1])
    return total


def _ehvi_mc(means, sigmas, F: np.ndarray, ref, n_samples: int, seed: int) -> float:
    # EHVI equals the integral of prod_i P(Z_i <= u_i) over the nondominated
    # region below ref; truncate the region 8 sigma under the means (the
    # discarded mass is ~1e-15 relative) and estimate by uniform MC.
    ref = np.asarray(ref, dtype=float)
    lo = means - 8.0 * np.maximum(sigmas, 0.0)
    if len(F):
        lo = np.minimum(lo, F.min(axis=0))
    lo = np.minimum(lo, ref)
    vol = float(np.prod(ref - lo))
    if vol <= 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    u = rng.uniform(lo, ref, size=(n_samples, len(ref)))
    with np.errstate(divide="ignore", invalid="ignore"):
        cdf = np.where(sigmas > 0.0, ndtr((u - means) / np.where(sigmas > 0, sigmas, 1.0)), u >= means)
    integrand = cdf.prod(axis=1)
    if len(F):
        nondom = np.ones(n_samples, dtype=bool)
        for p in F:
            nondom &= ~np.all(u >= p, axis=1)
        integrand = integrand * nondom
    return vol * float(integrand.mean())


def ehvi(
    means, sigmas, front, ref, n_samples: int = 10_000, seed: int = 0, prefiltered: bool = False
) -> float:
    """Expected hypervolume improvement of a Gaussian candidate.

    Exact for 2 objectives, seeded MC above that.  An empty front reduces to
    the expected volume dominated w.r.t. the reference point.
    """
    means = np.asarray(means, dtype=float).ravel()
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    if np.any(sigmas < 0):
        raise ValueError("sigmas must be nonnegative")
    F = _clean_front(front, ref, prefiltered)
    if np.all(sigmas == 0.0):
        return hypervolume_improvement(F, ref, means)
    if len(ref) == 1:
        t = min(F.min(), ref[0]) if len(F) else ref[0]
        return _int_cdf(-np.inf, float(t), means[0], sigmas[0])
    if len(ref) == 2:
        return _ehvi_2d_exact(means, sigmas, F, ref)
    return _ehvi_mc(means, sigmas, F, ref, n_samples, seed)


def pi(
    means, sigmas, front, n_samples: int = 10_000, seed: int = 0, prefiltered: bool = False
) -> float:
    """Probability the Gaussian candidate is not dominated by the front.

    Closed form for front size 1, seeded MC otherwise; 1 for an empty front.
    """
    means = np.asarray(means, dtype=float).ravel()
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    F = _clean_front(front, prefiltered=prefiltered)
    if len(F) == 0:
        return 1.0
    if len(F) == 1:
        y = F[0]
        p_worse = np.where(sigmas > 0.0, 1.0 - ndtr((y - means) / np.where(sigmas > 0, sigmas, 1.0)), means >= y)
        return float(1.0 - np.prod(p_worse))
    rng = np.random.default_rng(seed)
    z = means + sigmas * rng.standard_normal(size=(n_samples, len(means)))
    dominated = np.zeros(n_samples, dtype=bool)
    for p in F:
        dominated |= np.all(z >= p, axis=1)
    return float(1.0 - dominated.mean())


def mpi(means, sigmas, front, prefiltered: bool = False) -> float:
    """Minimum over front members of the all-objective improvement probability."""
    means = np.asarray(means, dtype=float).ravel()
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    F = _clean_front(front, prefiltered=prefiltered)
    if len(F) == 0:
        return 1.0
    probs = np.where(sigmas > 0.0, ndtr((F - means) / np.where(sigmas > 0, sigmas, 1.0)), means <= F)
    return float(np.prod(probs, axis=1).min())


def regularized(
    config: AcquisitionConfig,
    means,
    sigmas,
    front,
    ref,
    obj_center=None,
    obj_scale=None,
    prefiltered: bool = False,
) -> float:
    """gamma * criterion - psi(standardized predicted means).

    psi ranges over the objective components (max or sum); reg="none"
    returns the raw criterion.  Standardization (by the archive's
    per-objective center/scale) makes the scalarization scale-free.
    """
    means = np.asarray(means, dtype=float).ravel()
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    if config.criterion == EHVI:
        alpha = ehvi(
            means, sigmas, front, ref,
            n_samples=config.mc_samples, seed=config.seed, prefiltered=prefiltered,
        )
    elif config.criterion == PI:
        alpha = pi(
            means, sigmas, front,
            n_samples=config.mc_samples, seed=config.seed, prefiltered=prefiltered,
        )
    else:
        alpha = mpi(means, sigmas, front, prefiltered=prefiltered)
    if config.reg == "none":
        return float(alpha)
    sm = means
    if obj_center is not None:
        sm = (sm - np.asarray(obj_center, dtype=float)) / np.asarray(obj_scale, dtype=float)
    psi = float(np.max(sm)) if config.reg == "max" else float(np.sum(sm))
    return float(config.gamma * alpha - psi)
