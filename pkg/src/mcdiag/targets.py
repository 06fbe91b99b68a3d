"""Target distributions for the bundled samplers and diagnostics examples.

Three targets are used throughout the test battery: the unit exponential
(handled directly by the independence sampler), a two-dimensional density
with six well-separated modes on a box, and a Bayesian logistic-regression
posterior with a wide normal prior. A small mode finder supports starting
chains at local modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

__all__ = [
    "TargetModel",
    "LogisticData",
    "sixmodal_logdensity",
    "sixmodal_target",
    "sixmodal_modes",
    "SIXMODAL_BOX",
    "synth_logistic_data",
    "logistic_log_likelihood",
    "logistic_log_prior",
    "logistic_log_posterior",
    "logistic_log_posterior_grad",
    "logistic_log_posterior_hess",
    "find_mode",
    "find_logistic_mode",
]

SIXMODAL_BOX = (-10.0, 10.0)

# Beyond this the squared residual overflows; the density is zero there anyway.
_RESIDUAL_LIMIT = 1e150


@dataclass(frozen=True)
class TargetModel:
    """Unnormalized target: a vectorized log-density on a box.

    log_density maps an (m, dim) array to m values, returning -inf outside
    the box. known_constant, when set, is the true integral of
    exp(log_density) for use in tests.
    """

    log_density: Callable[[np.ndarray], np.ndarray]
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    name: str = "target"
    known_constant: float | None = None


def sixmodal_logdensity(points) -> np.ndarray:
    """log f(x, y) = -x^2/2 - ((csc y)^5 - x)^2/2 on the box [-10, 10]^2.

    The cosecant wall vanishes at every multiple of pi, cutting the box into
    strips that each hold exactly one mode; six of the strips carry visible
    mass. Outside the box, and wherever the residual overflows, the density
    is zero.
    """
    pts = np.asarray(points, dtype=float)
    squeeze = pts.ndim == 1
    if squeeze:
        pts = pts[None, :]
    if pts.shape[1] != 2:
        raise ValueError(f"points must have 2 columns, got {pts.shape[1]}")
    x, y = pts[:, 0], pts[:, 1]
    lo, hi = SIXMODAL_BOX
    inside = (x >= lo) & (x <= hi) & (y >= lo) & (y <= hi)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        residual = np.sin(y) ** -5.0 - x
        out = -0.5 * x * x - 0.5 * residual * residual
    out = np.where(inside & (np.abs(residual) <= _RESIDUAL_LIMIT), out, -np.inf)
    return out[0] if squeeze else out


def _sixmodal_logf_scalar(x: float, y: float) -> float:
    """Scalar twin of sixmodal_logdensity for tight sampler loops."""
    lo, hi = SIXMODAL_BOX
    if not (lo <= x <= hi and lo <= y <= hi):
        return -math.inf
    s = math.sin(y)
    if s == 0.0:
        return -math.inf
    try:
        residual = s ** -5.0 - x
    except OverflowError:
        return -math.inf
    if abs(residual) > _RESIDUAL_LIMIT:
        return -math.inf
    return -0.5 * x * x - 0.5 * residual * residual


def sixmodal_target() -> TargetModel:
    return TargetModel(
        log_density=sixmodal_logdensity,
        dim=2,
        lower=np.array([SIXMODAL_BOX[0]] * 2),
        upper=np.array([SIXMODAL_BOX[1]] * 2),
        name="sixmodal",
    )


def sixmodal_modes() -> np.ndarray:
    """The six local modes, found numerically from coarse grid seeds.

    Sorted by y coordinate. At fixed y the exponent peaks at x = csc(y)^5 / 2,
    so the modes sit at (+-1/2, odd multiples of pi/2).
    """
    logf = sixmodal_logdensity
    lower = np.array([SIXMODAL_BOX[0]] * 2)
    upper = np.array([SIXMODAL_BOX[1]] * 2)
    found = []
    for half in (-2.5, -1.5, -0.5, 0.5, 1.5, 2.5):
        y0 = half * math.pi
        x0 = math.copysign(1.0, math.sin(y0) ** -5.0)
        mode = find_mode(logf, np.array([x0, y0]), lower=lower, upper=upper)
        found.append(mode)
    modes = np.array(sorted(found, key=lambda m: m[1]))
    return modes


@dataclass(frozen=True)
class LogisticData:
    """Design matrix (first column all ones) and binary response."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise ValueError("X must be 2-d")
        if X.shape[0] != y.size:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("y must be 0/1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def synth_logistic_data(n_obs: int, beta_true, seed) -> LogisticData:
    """Simulate logistic data: intercept column plus iid standard normal covariates."""
    beta = np.asarray(beta_true, dtype=float).reshape(-1)
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")
    if beta.size < 1:
        raise ValueError("beta_true must have at least the intercept")
    rng = np.random.default_rng(seed)
    X = np.ones((n_obs, beta.size))
    if beta.size > 1:
        X[:, 1:] = rng.standard_normal((n_obs, beta.size - 1))
    prob = expit(X @ beta)
    y = (rng.random(n_obs) < prob).astype(float)
    return LogisticData(X=X, y=y)


def logistic_log_likelihood(beta, data: LogisticData) -> float:
    """sum_i [y_i eta_i - log(1 + exp(eta_i))] with eta = X beta, overflow-safe."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    eta = data.X @ beta
    return float(data.y @ eta - np.logaddexp(0.0, eta).sum())


def logistic_log_prior(beta, prior_sd: float = 10.0) -> float:
    """Mean-zero isotropic normal log-prior, constants included."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    d = beta.size
    return float(-0.5 * (beta @ beta) / prior_sd**2 - 0.5 * d * math.log(2.0 * math.pi * prior_sd**2))


def logistic_log_posterior(beta, data: LogisticData, prior_sd: float = 10.0) -> float:
    return logistic_log_likelihood(beta, data) + logistic_log_prior(beta, prior_sd)


def logistic_log_posterior_grad(beta, data: LogisticData, prior_sd: float = 10.0) -> np.ndarray:
    """X^T (y - expit(X beta)) - beta / prior_sd^2."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    resid = data.y - expit(data.X @ beta)
    return data.X.T @ resid - beta / prior_sd**2


def logistic_log_posterior_hess(beta, data: LogisticData, prior_sd: float = 10.0) -> np.ndarray:
    """Hessian of the log-posterior (negative definite everywhere)."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    prob = expit(data.X @ beta)
    weights = prob * (1.0 - prob)
    info = (data.X * weights[:, None]).T @ data.X
    return -(info + np.eye(beta.size) / prior_sd**2)


def _numeric_grad(fn, x: np.ndarray) -> np.ndarray:
    grad = np.empty_like(x)
    for j in range(x.size):
        h = 1e-6 * (1.0 + abs(x[j]))
        up = x.copy()
        dn = x.copy()
        up[j] += h
        dn[j] -= h
        grad[j] = (fn(up) - fn(dn)) / (2.0 * h)
    return grad


def _scalar_log_density(log_density, probe: np.ndarray):
    """Wrap a log-density to take one flat point, probing the call style once."""
    try:
        out = np.asarray(log_density(probe[None, :]))
        if out.shape == (1,):
            return lambda pt: float(np.asarray(log_density(pt[None, :])).reshape(-1)[0])
    except Exception:
        pass
    return lambda pt: float(np.asarray(log_density(pt)).reshape(-1)[0])


def find_mode(
    log_density,
    start,
    grad=None,
    lower=None,
    upper=None,
    grad_tol: float = 1e-6,
    max_steps: int = 10_000,
) -> np.ndarray:
    """Gradient ascent with backtracking toward a local mode.

    Missing gradients are replaced by central differences. Iterates are
    clipped to the box when bounds are given, and the best point seen is
    returned once the gradient norm drops below grad_tol or the step budget
    runs out.
    """
    x = np.asarray(start, dtype=float).reshape(-1).copy()
    logf = _scalar_log_density(log_density, x)
    f = logf(x)
    if not math.isfinite(f):
        raise ValueError("log density is not finite at the starting point")
    gradient = grad if grad is not None else (lambda pt: _numeric_grad(logf, pt))
    step = 1.0
    best_x, best_f = x.copy(), f
    for _ in range(max_steps):
        g = np.asarray(gradient(x), dtype=float).reshape(-1)
        norm = float(np.linalg.norm(g))
        if norm < grad_tol:
            break
        moved = False
        while step > 1e-18:
            cand = x + step * g
            if lower is not None:
                cand = np.maximum(cand, lower)
            if upper is not None:
                cand = np.minimum(cand, upper)
            fc = logf(cand)
            if math.isfinite(fc) and fc > f:
                x, f = cand, fc
                step *= 2.0
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        if f > best_f:
            best_x, best_f = x.copy(), f
    return best_x


def find_logistic_mode(data: LogisticData, prior_sd: float = 10.0, start=None) -> np.ndarray:
    """Posterior mode by damped Newton ascent; the posterior is strictly concave."""
    beta = np.zeros(data.dim) if start is None else np.asarray(start, dtype=float).reshape(-1).copy()
    f = logistic_log_posterior(beta, data, prior_sd)
    if not math.isfinite(f):
        raise ValueError("log posterior is not finite at the starting point")
    for _ in range(100):
        g = logistic_log_posterior_grad(beta, data, prior_sd)
        if float(np.linalg.norm(g)) < 1e-10:
            break
        H = logistic_log_posterior_hess(beta, data, prior_sd)
        direction = np.linalg.solve(-H, g)
        scale = 1.0
        while scale > 1e-12:
            cand = beta + scale * direction
            fc = logistic_log_posterior(cand, data, prior_sd)
            if fc > f:
                beta, f = cand, fc
                break
            scale *= 0.5
        else:
            break
    return beta
