"""Gaussian-process regression over the relaxed space.

Ordinary kriging (constant trend) with anisotropic squared-exponential or
Matern-5/2 correlation.  When `n_pls_components` is positive, the
per-dimension correlation rates are generated from a small number of
partial-least-squares weight vectors, so a model over a 100+ dimensional
relaxed space still exposes only a handful of hyperparameters.

Hyperparameters maximize the concentrated log marginal likelihood via a
seeded multistart bounded search.  Fitting is pure given (data, seed);
prediction is read-only and safe to call concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

SQUARED_EXPONENTIAL = "squared_exponential"
MATERN52 = "matern52"

LOG10_RATE_BOUNDS = (-3.0, 2.0)  # search range per reduced rate, log10 space
MAX_NUGGET = 1e-4
INTERPOLATION_GUARD = 2e-7  # max tolerated exact-math interpolation defect
_SQRT5 = math.sqrt(5.0)


class FitError(RuntimeError):
    """Model fitting failed (non-SPD covariance after nugget escalation, ...)."""


class DegenerateDataError(FitError):
    """Training data carries no signal (zero variance in y)."""


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family, PLS reduction size and numerical safeguards.

    n_pls_components = 0 selects plain anisotropic kriging (one rate per
    relaxed dimension).  `second_stage` is reserved for a full-dimension
    re-expansion refit and is not implemented.
    """

    family: str = SQUARED_EXPONENTIAL
    n_pls_components: int = 0
    nugget: float = 1e-10
    n_multistart: int = 10
    second_stage: bool = False

    def __post_init__(self):
        if self.family not in (SQUARED_EXPONENTIAL, MATERN52):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.n_pls_components < 0:
            raise ValueError("n_pls_components must be >= 0")
        if not self.nugget > 0:
            raise ValueError("nugget must be positive")


def fit_pls(X: np.ndarray, y: np.ndarray, h: int) -> np.ndarray:
    """First h PLS weight vectors of the (X, y) regression, columns unit-norm.

    Uses the PLS1 power iteration with deflation, then rotates the weights
    into original-X coordinates so that scores are a direct projection of
    the centered inputs.  Deterministic.  Raises DegenerateDataError when y
    has no variance.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if h == 0:
        return np.zeros((d, 0))
    if n < h + 1:
        raise FitError(f"need at least {h + 1} rows for {h} PLS components, got {n}")
    y_scale = float(np.std(y))
    if y_scale <= 1e-15 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateDataError("y has zero variance")

    Xk = X - X.mean(axis=0)
    yk = y - y.mean()
    col_scale = max(float(np.max(np.abs(Xk))), 1e-300)
    W, P = [], []
    for _ in range(h):
        w = Xk.T @ yk
        nw = float(np.linalg.norm(w))
        if nw <= 1e-13 * col_scale * y_scale * n:
            break  # nothing left to extract
        w /= nw
        t = Xk @ w
        tt = float(t @ t)
        if tt <= 1e-30:
            break
        p = Xk.T @ t / tt
        Xk = Xk - np.outer(t, p)
        yk = yk - (float(t @ yk) / tt) * t
        W.append(w)
        P.append(p)

    if not W:
        raise DegenerateDataError("no usable PLS direction (constant inputs?)")
    Wm = np.column_stack(W)
    Pm = np.column_stack(P)
    R = Wm @ np.linalg.solve(Pm.T @ Wm, np.eye(Wm.shape[1]))
    R /= np.linalg.norm(R, axis=0, keepdims=True)
    if R.shape[1] < h:  # rank-deficient data: pad inert directions
        R = np.hstack([R, np.zeros((d, h - R.shape[1]))])
    return R


def _dedup_rows(X: np.ndarray, y: np.ndarray, tol: float = 1e-12):
    keep = []
    for i in range(len(X)):
        if all(np.linalg.norm(X[i] - X[j]) > tol for j in keep):
            keep.append(i)
    return X[keep], y[keep]


def _correlation(family: str, theta_eff: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Correlation matrix between row sets A (m x d) and B (n x d)."""
    if family == SQUARED_EXPONENTIAL:
        # exp(-sum_j theta_j (a_j - b_j)^2), expanded to avoid m*n*d temporaries
        Aw = A * theta_eff
        sq = (
            (A * Aw).sum(axis=1)[:, None]
            - 2.0 * Aw @ B.T
            + (B * B * theta_eff).sum(axis=1)[None, :]
        )
        return np.exp(-np.maximum(sq, 0.0))
    a = np.abs(A[:, None, :] - B[None, :, :]) * theta_eff
    return np.prod((1.0 + _SQRT5 * a + 5.0 / 3.0 * a * a) * np.exp(-_SQRT5 * a), axis=2)


@dataclass
class SurrogateModel:
    """A fitted GP: training data, hyperparameters and cached factorizations."""

    config: KernelConfig
    X: np.ndarray  # raw relaxed training inputs, after duplicate merge
    y: np.ndarray
    theta: np.ndarray  # reduced rates (h of them) or d' rates when h = 0
    pls_weights: np.ndarray | None
    nugget_used: float
    seed: int
    degenerate: bool = False
    # derived, filled by _prepare
    x_offset: np.ndarray = field(default=None, repr=False)
    x_scale: np.ndarray = field(default=None, repr=False)
    y_offset: float = 0.0
    y_scale: float = 1.0
    theta_eff: np.ndarray = field(default=None, repr=False)
    mu: float = 0.0
    sigma2: float = 0.0
    log_likelihood: float = -np.inf
    # fit diagnostics: objective at each multistart point and at the returned theta
    start_objectives: list = field(default_factory=list, repr=False)
    fit_objective: float = np.inf
    _Xn: np.ndarray = field(default=None, repr=False)
    _L: np.ndarray = field(default=None, repr=False)
    _alpha: np.ndarray = field(default=None, repr=False)
    _Linv_ones: np.ndarray = field(default=None, repr=False)
    _one_Rinv_one: float = 0.0

    @property
    def n_train(self) -> int:
        return len(self.X)

    @property
    def process_variance(self) -> float:
        """Process variance in output units."""
        return self.sigma2 * self.y_scale**2

    def _normalize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.x_offset) / self.x_scale

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at one point or a batch of rows."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.degenerate:
            return np.full(len(X), self.y_offset), np.zeros(len(X))
        r = _correlation(self.config.family, self.theta_eff, self._normalize(X), self._Xn)
        mean = self.mu + r @ self._alpha
        v = linalg.solve_triangular(self._L, r.T, lower=True)
        trend = 1.0 - self._Linv_ones @ v
        var = self.sigma2 * (
            1.0 - np.einsum("ij,ij->j", v, v) + trend**2 / self._one_Rinv_one
        )
        if np.any(var < -1e-8 * max(self.sigma2, 1.0)):
            raise FitError(f"negative predictive variance beyond tolerance: {var.min()}")
        var = np.maximum(var, 0.0)
        return self.y_offset + self.y_scale * mean, self.y_scale**2 * var

    def predict_one(self, x) -> tuple[float, float]:
        m, v = self.predict(np.asarray(x, dtype=float).reshape(1, -1))
        return float(m[0]), float(v[0])

    def predict_mean(self, X) -> np.ndarray:
        """Posterior mean only; skips the variance solves."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.degenerate:
            return np.full(len(X), self.y_offset)
        r = _correlation(self.config.family, self.theta_eff, self._normalize(X), self._Xn)
        return self.y_offset + self.y_scale * (self.mu + r @ self._alpha)

    def predict_gradient(self, x) -> np.ndarray:
        """Analytic gradient of the posterior mean w.r.t. raw coordinates."""
        x = np.asarray(x, dtype=float).ravel()
        if self.degenerate:
            return np.zeros(len(x))
        xn = (x - self.x_offset) / self.x_scale
        D = xn[None, :] - self._Xn  # 1 x n direction differences, broadcast
        if self.config.family == SQUARED_EXPONENTIAL:
            r = np.exp(-((D * D) @ self.theta_eff))
            g = -2.0 * self.theta_eff * ((r * self._alpha) @ D)
        else:
            a = np.abs(D) * self.theta_eff
            factors = (1.0 + _SQRT5 * a + 5.0 / 3.0 * a * a) * np.exp(-_SQRT5 * a)
            r = np.prod(factors, axis=1)
            # d/da of a factor, divided by the factor itself
            ratio = -(5.0 / 3.0) * a * (1.0 + _SQRT5 * a) / (1.0 + _SQRT5 * a + 5.0 / 3.0 * a * a)
            g = ((r * self._alpha)[:, None] * ratio * np.sign(D) * self.theta_eff).sum(axis=0)
        return self.y_scale / self.x_scale * g

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "family": self.config.family,
            "n_pls_components": self.config.n_pls_components,
            "nugget": self.config.nugget,
            "n_multistart": self.config.n_multistart,
            "seed": self.seed,
            "degenerate": self.degenerate,
            "nugget_used": self.nugget_used,
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "theta": self.theta.tolist(),
            "pls_weights": None if self.pls_weights is None else self.pls_weights.tolist(),
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, data: dict) -> "SurrogateModel":
        if data.get("version") != 1:
            raise FitError(f"unsupported model file version {data.get('version')!r}")
        config = KernelConfig(
            family=data["family"],
            n_pls_components=data["n_pls_components"],
            nugget=data["nugget"],
            n_multistart=data["n_multistart"],
        )
        model = cls(
            config=config,
            X=np.asarray(data["X"], dtype=float),
            y=np.asarray(data["y"], dtype=float),
            theta=np.asarray(data["theta"], dtype=float),
            pls_weights=None if data["pls_weights"] is None else np.asarray(data["pls_weights"]),
            nugget_used=data["nugget_used"],
            seed=data["seed"],
            degenerate=data["degenerate"],
        )
        if model.degenerate:
            model.y_offset = float(model.y.mean()) if len(model.y) else 0.0
            model.x_offset = np.zeros(model.X.shape[1])
            model.x_scale = np.ones(model.X.shape[1])
            return model
        _prepare(model)
        return model

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _scalers(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = X.min(axis=0), X.max(axis=0)
    scale = hi - lo
    scale[scale <= 0] = 1.0
    return lo, scale


def _neg_log_likelihood(theta_eff, Xn, yn, nugget, family, defect_scale=None):
    """Concentrated NLL plus the exact interpolation defect at the training rows.

    The defect nugget * |alpha_i| is what prediction misses y_i by; guarding
    it keeps the search out of the numerically untrustworthy smoothness
    corner where the covariance is effectively singular.
    """
    n = len(Xn)
    R = _correlation(family, theta_eff, Xn, Xn)
    R[np.diag_indices_from(R)] += nugget
    try:
        L = linalg.cholesky(R, lower=True)
    except linalg.LinAlgError:
        return None
    ones = np.ones(n)
    Rinv_y = linalg.cho_solve((L, True), yn)
    Rinv_1 = linalg.cho_solve((L, True), ones)
    denom = float(ones @ Rinv_1)
    if denom <= 0:
        return None
    mu = float(ones @ Rinv_y) / denom
    resid = yn - mu
    alpha = Rinv_y - mu * Rinv_1
    sigma2 = float(resid @ alpha) / n
    if sigma2 <= 0:
        sigma2 = 1e-300
    nll = n * math.log(sigma2) + 2.0 * float(np.sum(np.log(np.diag(L))))
    if defect_scale is None:
        return nll
    defect = nugget * float(np.max(np.abs(alpha) / defect_scale))
    return nll, defect


def _prepare(model: SurrogateModel) -> None:
    """Recompute scalers, trend, variance and factorizations from stored data."""
    model.x_offset, model.x_scale = _scalers(model.X)
    model.y_offset = float(model.y.mean())
    ys = float(model.y.std())
    model.y_scale = ys if ys > 0 else 1.0
    Xn = (model.X - model.x_offset) / model.x_scale
    yn = (model.y - model.y_offset) / model.y_scale
    if model.pls_weights is not None and model.pls_weights.shape[1] > 0:
        model.theta_eff = (model.pls_weights**2) @ model.theta
    else:
        model.theta_eff = model.theta.copy()
    n = len(Xn)
    R = _correlation(model.config.family, model.theta_eff, Xn, Xn)
    R[np.diag_indices_from(R)] += model.nugget_used
    try:
        L = linalg.cholesky(R, lower=True)
    except linalg.LinAlgError as exc:
        raise FitError(f"covariance not SPD at stored hyperparameters: {exc}") from exc
    ones = np.ones(n)
    Linv_ones = linalg.solve_triangular(L, ones, lower=True)
    one_Rinv_one = float(Linv_ones @ Linv_ones)
    Rinv_y = linalg.cho_solve((L, True), yn)
    mu = float(ones @ Rinv_y) / one_Rinv_one
    resid = yn - mu
    alpha = linalg.cho_solve((L, True), resid)
    alpha += linalg.cho_solve((L, True), resid - R @ alpha)  # one refinement step
    sigma2 = float(resid @ alpha) / n
    model._Xn = Xn
    model._L = L
    model._Linv_ones = Linv_ones
    model._one_Rinv_one = one_Rinv_one
    model.mu = mu
    model._alpha = alpha
    model.sigma2 = max(sigma2, 1e-300)
    model.log_likelihood = -(n * math.log(model.sigma2) + 2.0 * float(np.sum(np.log(np.diag(L)))))


def fit(X, y, config: KernelConfig, seed: int = 0) -> SurrogateModel:
    """Fit a GP to (X, y) by seeded multistart likelihood maximization.

    Duplicate rows (within 1e-12) are merged keeping the first occurrence.
    Constant y produces a degenerate model with zero predictive variance.
    On Cholesky failure the nugget escalates tenfold up to MAX_NUGGET before
    the fit is abandoned.
    """
    if config.second_stage:
        raise NotImplementedError("second-stage full-dimension refit is reserved, not implemented")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) != len(y):
        raise FitError(f"X has {len(X)} rows but y has {len(y)}")
    X, y = _dedup_rows(X, y)
    n, d = X.shape
    if n < 2:
        raise FitError(f"need at least 2 distinct training rows, got {n}")

    base = SurrogateModel(
        config=config,
        X=X,
        y=y,
        theta=np.array([]),
        pls_weights=None,
        nugget_used=config.nugget,
        seed=seed,
    )
    if float(np.std(y)) <= 1e-15 * max(1.0, float(np.max(np.abs(y)))):
        base.degenerate = True
        base.y_offset = float(y.mean())
        base.x_offset = np.zeros(d)
        base.x_scale = np.ones(d)
        return base

    x_off, x_scl = _scalers(X)
    Xn = (X - x_off) / x_scl
    yn = (y - float(y.mean())) / float(np.std(y))

    h = min(config.n_pls_components, d, n - 1)
    weights = fit_pls(Xn, yn, h) if h > 0 else None
    q = h if h > 0 else d

    def expand(theta):
        return (weights**2) @ theta if weights is not None else theta

    lo, hi = LOG10_RATE_BOUNDS
    # defect tolerance in scaled-output units, per training row
    defect_scale = (1.0 + np.abs(y)) / float(np.std(y))

    def objective(log_theta, guarded=True):
        theta = 10.0 ** np.asarray(log_theta, dtype=float)
        nugget = config.nugget
        while True:
            out = _neg_log_likelihood(expand(theta), Xn, yn, nugget, config.family, defect_scale)
            if out is not None:
                nll, defect = out
                if guarded and defect > INTERPOLATION_GUARD:
                    # smooth barrier steering the search back to trustworthy models
                    return 1e8 * (1.0 + math.log10(defect / INTERPOLATION_GUARD))
                return nll
            nugget *= 10.0
            if nugget > MAX_NUGGET:
                return np.inf

    rng = np.random.default_rng(seed)
    starts = [np.zeros(q)]
    starts += [rng.uniform(lo, hi, size=q) for _ in range(max(config.n_multistart - 1, 0))]

    def search(guarded: bool):
        values = [objective(s, guarded) for s in starts]
        scored = sorted(((v, i) for i, v in enumerate(values)), key=lambda t: t[0])
        best_val, best_idx = scored[0]
        best_log_theta = starts[best_idx]
        # polish the two most promising starts; a polish never reports a worse
        # value than its own start, so the multistart monotonicity holds
        for _, idx in scored[: min(2, len(scored))]:
            res = optimize.minimize(
                objective,
                starts[idx],
                method="Powell",
                bounds=[(lo, hi)] * q,
                args=(guarded,),
                options={"maxfev": max(200, 60 * q), "xtol": 1e-3, "ftol": 1e-6},
            )
            cand = np.clip(res.x, lo, hi)
            val = objective(cand, guarded)
            if val < best_val:
                best_val, best_log_theta = val, cand
        return best_val, best_log_theta, values

    best_val, best_log_theta, start_values = search(guarded=True)
    if best_val >= 1e8:
        # clustered training rows: no hyperparameters in bounds interpolate
        # cleanly, so accept the best plain-likelihood model instead
        best_val, best_log_theta, start_values = search(guarded=False)
    if not np.isfinite(best_val):
        raise FitError(
            f"no SPD covariance found (n={n}, d={d}, nugget escalated to {MAX_NUGGET})"
        )

    theta = 10.0**best_log_theta
    # replay the nugget escalation so the stored value matches the likelihood
    nugget = config.nugget
    while _neg_log_likelihood(expand(theta), Xn, yn, nugget, config.family) is None:
        nugget *= 10.0
        if nugget > MAX_NUGGET:
            raise FitError("covariance not SPD after max nugget escalation")

    base.theta = theta
    base.pls_weights = weights
    base.nugget_used = nugget
    base.start_objectives = start_values
    base.fit_objective = best_val
    _prepare(base)
    return base


def predict(model: SurrogateModel, v) -> tuple[float, float]:
    coords = v.as_array() if hasattr(v, "as_array") else v
    return model.predict_one(coords)


def predict_gradient(model: SurrogateModel, v) -> np.ndarray:
    coords = v.as_array() if hasattr(v, "as_array") else v
    return model.predict_gradient(coords)


@dataclass
class MultiOutputSurrogate:
    """Independent GPs per objective and per constraint over shared inputs."""

    objectives: list[SurrogateModel]
    constraints: list[SurrogateModel]

    def __post_init__(self):
        models = self.objectives + self.constraints
        if not self.objectives:
            raise FitError("need at least one objective model")
        X0 = models[0].X
        for m in models[1:]:
            if m.X.shape != X0.shape or not np.array_equal(m.X, X0):
                raise FitError("all component models must share identical training inputs")

    @property
    def X(self) -> np.ndarray:
        return self.objectives[0].X

    @classmethod
    def fit(cls, X, F, G=None, config: KernelConfig = KernelConfig(), seed: int = 0):
        """Fit one model per column of F (objectives) and G (constraints).

        Constraints reuse the objective kernel configuration; sub-seeds are
        derived deterministically from `seed`.
        """
        F = np.atleast_2d(np.asarray(F, dtype=float))
        objectives = [fit(X, F[:, i], config, seed=seed + i) for i in range(F.shape[1])]
        constraints = []
        if G is not None and np.size(G):
            G = np.atleast_2d(np.asarray(G, dtype=float))
            constraints = [
                fit(X, G[:, j], config, seed=seed + F.shape[1] + j) for j in range(G.shape[1])
            ]
        return cls(objectives=objectives, constraints=constraints)

    def predict_objectives(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        means = np.empty(len(self.objectives))
        variances = np.empty(len(self.objectives))
        for i, m in enumerate(self.objectives):
            mean, var = m.predict(x)
            means[i], variances[i] = mean[0], var[0]
        return means, variances

    def predict_constraint_means(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return np.array([m.predict_mean(x)[0] for m in self.constraints])

    def predict_point(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Objective means/variances plus constraint means at one point.

        Squared-exponential models share the squared-difference matrix (all
        models carry identical inputs and scalers); other families fall back
        to per-model prediction.
        """
        x = np.asarray(x, dtype=float).ravel()
        models = self.objectives + self.constraints
        shared = all(
            m.config.family == SQUARED_EXPONENTIAL and not m.degenerate for m in models
        )
        if not shared:
            f_means, f_vars = self.predict_objectives(x)
            return f_means, f_vars, self.predict_constraint_means(x)
        m0 = models[0]
        xn = (x - m0.x_offset) / m0.x_scale
        D2 = np.square(xn[None, :] - m0._Xn)  # n x d, shared by every model
        n_obj = len(self.objectives)
        f_means = np.empty(n_obj)
        f_vars = np.empty(n_obj)
        g_means = np.empty(len(self.constraints))
        for i, m in enumerate(models):
            r = np.exp(-(D2 @ m.theta_eff))
            mean = m.y_offset + m.y_scale * (m.mu + r @ m._alpha)
            if i < n_obj:
                v = linalg.solve_triangular(m._L, r, lower=True)
                trend = 1.0 - m._Linv_ones @ v
                var = m.sigma2 * (1.0 - v @ v + trend**2 / m._one_Rinv_one)
                if var < -1e-8 * max(m.sigma2, 1.0):
                    raise FitError(f"negative predictive variance beyond tolerance: {var}")
                f_means[i] = mean
                f_vars[i] = m.y_scale**2 * max(var, 0.0)
            else:
                g_means[i - n_obj] = mean
        return f_means, f_vars, g_means
