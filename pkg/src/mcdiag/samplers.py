"""Reference Metropolis-Hastings samplers for the diagnostics test bed.

Three kernels with known, tunable pathologies: an independence sampler for
the unit exponential whose proposal rate controls mixing quality, a
Metropolis-within-Gibbs walker for the six-mode box density that gets stuck
in whichever mode it starts near, and a preconditioned random-walk sampler
for the logistic posterior. All draws come from numpy's PCG64 generator, so
a fixed SamplerConfig reproduces a chain bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import Chain
from .targets import (
    LogisticData,
    _sixmodal_logf_scalar,
    find_logistic_mode,
    logistic_log_posterior,
    logistic_log_posterior_hess,
)

__all__ = [
    "SamplerConfig",
    "independence_mh_exp",
    "tv_bound_burnin",
    "sixmodal_mwg",
    "logistic_rwmh",
    "tune_rwmh_scale",
]


@dataclass(frozen=True)
class SamplerConfig:
    """What a sampler run needs to be reproducible.

    theta is the independence-proposal rate, scales the per-coordinate
    random-walk standard deviations for the within-Gibbs updates, and
    step_scale the global multiplier for the preconditioned random walk
    (None picks 2.38/sqrt(d)).
    """

    n_iterations: int
    initial: object
    seed: int
    theta: float | None = None
    scales: tuple[float, float] = (1.0, 0.25)
    step_scale: float | None = None

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.theta is not None and not self.theta > 0:
            raise ValueError("theta must be positive")
        if any(not s > 0 for s in self.scales):
            raise ValueError("proposal scales must be positive")
        if self.step_scale is not None and not self.step_scale > 0:
            raise ValueError("step_scale must be positive")


def _accept_log_prob_exp(x: float, y: float, theta: float) -> float:
    """Log acceptance probability of the Exp(theta)-proposal independence sampler.

    For the Exp(1) target the ratio pi(y) q(x) / (pi(x) q(y)) collapses to
    exp((theta - 1)(y - x)).
    """
    return min(0.0, (theta - 1.0) * (y - x))


def independence_mh_exp(config: SamplerConfig) -> tuple[Chain, float]:
    """Independence Metropolis-Hastings for the unit exponential target.

    Proposals are iid Exp(theta). theta = 1 reproduces the target exactly
    (every proposal accepted); theta < 1 keeps a geometric convergence
    guarantee; theta > 1 proposes from a lighter tail than the target and
    the chain sticks wherever it has climbed.
    """
    if config.theta is None:
        raise ValueError("independence sampler needs theta")
    x = float(np.asarray(config.initial).reshape(-1)[0])
    if not x > 0:
        raise ValueError("initial state must be positive")
    theta = config.theta
    n = config.n_iterations
    rng = np.random.default_rng(config.seed)
    proposals = rng.exponential(1.0 / theta, n)
    log_u = np.log(rng.random(n))
    draws = np.empty(n)
    slope = theta - 1.0
    accepted = 0
    for i in range(n):
        y = proposals[i]
        if log_u[i] < slope * (y - x):
            x = y
            accepted += 1
        draws[i] = x
    chain = Chain(draws, name=f"exp-indep-theta{theta:g}-seed{config.seed}", seed=config.seed)
    return chain, accepted / n


def tv_bound_burnin(theta: float, delta: float) -> int:
    """Iterations until the total-variation bound (1 - theta)^n drops below delta.

    Only the heavy-proposal regime theta < 1 carries the geometric bound.
    The tiny slack inside the ceiling keeps ratios that are exact integers
    in real arithmetic from being pushed up a step by floating point.
    """
    if not 0 < theta < 1:
        raise ValueError("the geometric bound holds for 0 < theta < 1 only")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    ratio = math.log(delta) / math.log1p(-theta)
    return max(1, int(math.ceil(ratio - 1e-12)))


def sixmodal_mwg(config: SamplerConfig) -> tuple[Chain, tuple[float, float]]:
    """Metropolis-within-Gibbs for the six-mode box density.

    Each iteration updates x then y with normal random-walk proposals of
    standard deviations config.scales; proposals outside the box land on
    zero density and are rejected automatically. Returns the chain plus
    per-coordinate acceptance rates.
    """
    start = np.asarray(config.initial, dtype=float).reshape(-1)
    if start.size != 2:
        raise ValueError("initial state must be a 2-vector")
    x, y = float(start[0]), float(start[1])
    log_f = _sixmodal_logf_scalar(x, y)
    if not math.isfinite(log_f):
        raise ValueError("initial state has zero target density")
    scale_x, scale_y = config.scales
    n = config.n_iterations
    rng = np.random.default_rng(config.seed)
    noise = rng.standard_normal((n, 2))
    log_u = np.log(rng.random((n, 2)))
    draws = np.empty((n, 2))
    acc_x = acc_y = 0
    for i in range(n):
        cand = x + scale_x * noise[i, 0]
        log_f_cand = _sixmodal_logf_scalar(cand, y)
        if log_u[i, 0] < log_f_cand - log_f:
            x, log_f = cand, log_f_cand
            acc_x += 1
        cand = y + scale_y * noise[i, 1]
        log_f_cand = _sixmodal_logf_scalar(x, cand)
        if log_u[i, 1] < log_f_cand - log_f:
            y, log_f = cand, log_f_cand
            acc_y += 1
        draws[i, 0] = x
        draws[i, 1] = y
    chain = Chain(draws, name=f"sixmodal-seed{config.seed}", seed=config.seed)
    return chain, (acc_x / n, acc_y / n)


def _proposal_root(data: LogisticData, prior_sd: float, precondition) -> np.ndarray:
    """Cholesky factor of the proposal shape matrix.

    "curvature" inverts the observed information (minus the log-posterior
    Hessian) at the mode; "identity" skips preconditioning; an array is
    used as the shape matrix directly.
    """
    d = data.dim
    if isinstance(precondition, str):
        if precondition == "identity":
            return np.eye(d)
        if precondition != "curvature":
            raise ValueError('precondition must be "curvature", "identity", or a matrix')
        mode = find_logistic_mode(data, prior_sd)
        info = -logistic_log_posterior_hess(mode, data, prior_sd)
        shape = np.linalg.inv(info)
    else:
        shape = np.asarray(precondition, dtype=float)
        if shape.shape != (d, d):
            raise ValueError(f"precondition matrix must be {d}x{d}")
    shape = 0.5 * (shape + shape.T)
    try:
        return np.linalg.cholesky(shape)
    except np.linalg.LinAlgError as exc:
        raise ValueError("proposal shape matrix is not positive definite") from exc


def logistic_rwmh(
    data: LogisticData,
    config: SamplerConfig,
    prior_sd: float = 10.0,
    precondition="curvature",
) -> tuple[Chain, float]:
    """Random-walk Metropolis for the logistic posterior.

    Proposal steps are step_scale * L z with L the Cholesky factor of the
    preconditioner, so by default the walk matches the posterior curvature
    at the mode. step_scale defaults to 2.38/sqrt(d).
    """
    beta = np.asarray(config.initial, dtype=float).reshape(-1)
    if beta.size != data.dim:
        raise ValueError(f"initial state has dimension {beta.size}, data needs {data.dim}")
    tau = config.step_scale if config.step_scale is not None else 2.38 / math.sqrt(data.dim)
    root = _proposal_root(data, prior_sd, precondition)
    log_post = logistic_log_posterior(beta, data, prior_sd)
    if not math.isfinite(log_post):
        raise ValueError("initial state has non-finite log posterior")
    n = config.n_iterations
    rng = np.random.default_rng(config.seed)
    steps = rng.standard_normal((n, data.dim)) @ (tau * root).T
    log_u = np.log(rng.random(n))
    draws = np.empty((n, data.dim))
    accepted = 0
    for i in range(n):
        cand = beta + steps[i]
        cand_log_post = logistic_log_posterior(cand, data, prior_sd)
        if log_u[i] < cand_log_post - log_post:
            beta, log_post = cand, cand_log_post
            accepted += 1
        draws[i] = beta
    chain = Chain(draws, name=f"logistic-rwmh-seed{config.seed}", seed=config.seed)
    return chain, accepted / n


def tune_rwmh_scale(
    data: LogisticData,
    initial,
    seed: int,
    prior_sd: float = 10.0,
    precondition="curvature",
    target: tuple[float, float] = (0.3, 0.5),
    pilot_n: int = 2_000,
    max_rounds: int = 12,
) -> tuple[float, float]:
    """Bisect step_scale until pilot acceptance lands in the target band.

    Acceptance is monotone decreasing in the scale, so an expanding bracket
    plus geometric bisection converges in a handful of pilot runs. Returns
    (step_scale, last pilot acceptance rate).
    """
    low, high = target
    if not 0 < low < high < 1:
        raise ValueError("target acceptance band must satisfy 0 < low < high < 1")
    tau = 2.38 / math.sqrt(data.dim)
    below = above = None  # bracket: acceptance too high / too low
    rate = float("nan")
    for round_idx in range(max_rounds):
        config = SamplerConfig(
            n_iterations=pilot_n,
            initial=initial,
            seed=int(np.random.SeedSequence(entropy=seed, spawn_key=(round_idx,)).generate_state(1)[0]),
            step_scale=tau,
        )
        _, rate = logistic_rwmh(data, config, prior_sd, precondition)
        if rate > high:
            below = tau
            tau = tau * 2.0 if above is None else math.sqrt(tau * above)
        elif rate < low:
            above = tau
            tau = tau / 2.0 if below is None else math.sqrt(tau * below)
        else:
            return tau, rate
    return tau, rate
