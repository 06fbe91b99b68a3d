"""Effective sample size and sequential stopping rules.

The univariate rules compare a fixed-width confidence interval for the
running mean against an absolute or relative tolerance; the multivariate
rules do the same with the volume of a confidence ellipsoid, which is
algebraically the same thing as demanding a minimum effective sample size.
All rules share the convention that a verdict fires only once the chain
has reached a minimum length, so early noise in the variance estimates
cannot end a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .chain import Chain, series_values
from .variance import CovarianceEstimate, VarianceEstimate

__all__ = [
    "StoppingConfig",
    "StoppingVerdict",
    "ConfidenceRegion",
    "RULES",
    "ess",
    "mess",
    "mess_threshold",
    "confidence_interval",
    "confidence_region",
    "fwsr_check",
    "relative_fwsr_check",
    "fixed_volume_check",
    "multivariate_relsd_check",
    "mess_rule_check",
    "sample_size_projection",
]

RULES = (
    "fwsr",
    "relative-magnitude",
    "relative-sd",
    "fixed-volume",
    "multivariate-relative-sd",
    "mess-threshold",
)


@dataclass(frozen=True)
class StoppingConfig:
    """Shared knobs for the stopping rules.

    epsilon is the precision target (absolute or relative depending on the
    rule), alpha the confidence level complement, min_n the minimum chain
    length before any rule may fire. quantile picks the critical value for
    the univariate interval: "normal" uses z_{1-alpha/2}, "student-t" uses
    the t quantile with (#batches - 1) degrees of freedom.
    """

    rule: str = "fwsr"
    epsilon: float = 0.005
    alpha: float = 0.05
    min_n: int = 10_000
    quantile: str = "normal"

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}, expected one of {RULES}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.min_n < 1:
            raise ValueError("min_n must be >= 1")
        if self.quantile not in ("normal", "student-t"):
            raise ValueError('quantile must be "normal" or "student-t"')


@dataclass(frozen=True)
class StoppingVerdict:
    """Outcome of one rule evaluation at chain length n.

    For every rule except mess-threshold the rule fires when
    statistic <= threshold; mess-threshold fires when statistic >= threshold.
    Ties stop in both conventions. degenerate marks a zero variance estimate.
    """

    stop: bool
    n: int
    rule: str
    statistic: float
    threshold: float
    half_width: float | None = None
    degenerate: bool = False


@dataclass(frozen=True)
class ConfidenceRegion:
    """Ellipsoid {theta : n (mean - theta)^T Sigma^{-1} (mean - theta) <= radius2}."""

    center: np.ndarray
    longrun: np.ndarray
    n: int
    radius2: float
    volume: float
    log_volume: float


def _critical_value(config: StoppingConfig, estimate: VarianceEstimate) -> float:
    if config.quantile == "normal":
        return float(stats.norm.ppf(1.0 - config.alpha / 2.0))
    df = estimate.n_batches - 1
    if df < 1:
        raise ValueError("student-t critical value needs a batch-means estimate with >= 2 batches")
    return float(stats.t.ppf(1.0 - config.alpha / 2.0, df))


def ess(series, estimate: VarianceEstimate) -> float:
    """Effective sample size n * lambda^2-hat / sigma^2-hat."""
    vals = series_values(series)
    if estimate.longrun <= 0.0:
        raise ValueError("effective sample size undefined for zero long-run variance")
    return vals.size * estimate.marginal / estimate.longrun


def _logdet(mat: np.ndarray, label: str) -> float:
    sign, logdet = np.linalg.slogdet(mat)
    if sign <= 0:
        raise ValueError(f"{label} covariance is not positive definite")
    return float(logdet)


def _check_nonsingular(estimate: CovarianceEstimate):
    if estimate.singular:
        raise ValueError("long-run covariance estimate is singular; cannot take a determinant")


def mess(chain: Chain, estimate: CovarianceEstimate) -> float:
    """Multivariate effective sample size n (|Lambda| / |Sigma|)^{1/p}."""
    _check_nonsingular(estimate)
    p = chain.p
    ld_marginal = _logdet(estimate.marginal, "marginal")
    ld_longrun = _logdet(estimate.longrun, "long-run")
    return chain.n * math.exp((ld_marginal - ld_longrun) / p)


def mess_threshold(p: int, alpha: float, epsilon: float) -> float:
    """Minimum multivariate ESS for relative precision epsilon at level alpha.

        2^{2/p} pi / (p Gamma(p/2))^{2/p} * chi2_{1-alpha,p} / epsilon^2
    """
    if p < 1:
        raise ValueError("dimension must be >= 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    chi2 = float(stats.chi2.ppf(1.0 - alpha, p))
    log_th = (
        (2.0 / p) * math.log(2.0)
        + math.log(math.pi)
        - (2.0 / p) * (math.log(p) + float(gammaln(p / 2.0)))
        + math.log(chi2)
        - 2.0 * math.log(epsilon)
    )
    return math.exp(log_th)


def confidence_interval(series, estimate: VarianceEstimate, config: StoppingConfig) -> tuple[float, float]:
    """(center, half-width) for the running mean: half-width = t* sigma-hat / sqrt(n)."""
    vals = series_values(series)
    tstar = _critical_value(config, estimate)
    sigma = math.sqrt(max(estimate.longrun, 0.0))
    return float(vals.mean()), tstar * sigma / math.sqrt(vals.size)


def confidence_region(chain: Chain, estimate: CovarianceEstimate, alpha: float = 0.05) -> ConfidenceRegion:
    """Large-sample confidence ellipsoid for the vector of running means.

    Volume = 2 pi^{p/2} / (p Gamma(p/2)) * (chi2_{1-alpha,p} / n)^{p/2} * |Sigma-hat|^{1/2}.
    """
    _check_nonsingular(estimate)
    n, p = chain.n, chain.p
    chi2 = float(stats.chi2.ppf(1.0 - alpha, p))
    logdet = _logdet(estimate.longrun, "long-run")
    log_volume = (
        math.log(2.0)
        + (p / 2.0) * math.log(math.pi)
        - math.log(p)
        - float(gammaln(p / 2.0))
        + (p / 2.0) * (math.log(chi2) - math.log(n))
        + 0.5 * logdet
    )
    return ConfidenceRegion(
        center=chain.draws.mean(axis=0),
        longrun=estimate.longrun,
        n=n,
        radius2=chi2,
        volume=math.exp(log_volume),
        log_volume=log_volume,
    )


def fwsr_check(series, estimate: VarianceEstimate, config: StoppingConfig) -> StoppingVerdict:
    """Fixed-width rule: stop once t* sigma-hat / sqrt(n) + 1/n <= epsilon and n >= min_n.

    The 1/n padding keeps an accidental early zero of sigma-hat from ending
    the run on its own; a genuinely constant chain stops at min_n flagged
    degenerate.
    """
    vals = series_values(series)
    n = vals.size
    tstar = _critical_value(config, estimate)
    half_width = tstar * math.sqrt(max(estimate.longrun, 0.0)) / math.sqrt(n)
    statistic = half_width + 1.0 / n
    stop = n >= config.min_n and statistic <= config.epsilon
    return StoppingVerdict(
        stop=stop,
        n=n,
        rule="fwsr",
        statistic=statistic,
        threshold=config.epsilon,
        half_width=half_width,
        degenerate=estimate.degenerate,
    )


def relative_fwsr_check(series, estimate: VarianceEstimate, config: StoppingConfig) -> StoppingVerdict:
    """Relative fixed-width rules.

    relative-magnitude scales the tolerance by |running mean| (undefined at
    zero mean), relative-sd by the marginal standard deviation lambda-hat.
    A zero lambda-hat gives threshold zero: the rule can then never fire and
    the verdict is flagged degenerate.
    """
    if config.rule not in ("relative-magnitude", "relative-sd"):
        raise ValueError(f"config.rule must be a relative rule, got {config.rule!r}")
    vals = series_values(series)
    n = vals.size
    tstar = _critical_value(config, estimate)
    half_width = tstar * math.sqrt(max(estimate.longrun, 0.0)) / math.sqrt(n)
    statistic = half_width + 1.0 / n
    degenerate = estimate.degenerate
    if config.rule == "relative-magnitude":
        center = abs(float(vals.mean()))
        if center == 0.0:
            raise ValueError("relative-magnitude rule undefined when the running mean is zero")
        threshold = config.epsilon * center
    else:
        lam = math.sqrt(max(estimate.marginal, 0.0))
        threshold = config.epsilon * lam
        degenerate = degenerate or lam == 0.0
    stop = n >= config.min_n and statistic <= threshold
    return StoppingVerdict(
        stop=stop,
        n=n,
        rule=config.rule,
        statistic=statistic,
        threshold=threshold,
        half_width=half_width,
        degenerate=degenerate,
    )


def _volume_statistic(chain: Chain, estimate: CovarianceEstimate, config: StoppingConfig) -> float:
    region = confidence_region(chain, estimate, config.alpha)
    return math.exp(region.log_volume / chain.p) + 1.0 / chain.n


def fixed_volume_check(chain: Chain, estimate: CovarianceEstimate, config: StoppingConfig) -> StoppingVerdict:
    """Stop once Vol(C_alpha)^{1/p} + 1/n <= epsilon."""
    statistic = _volume_statistic(chain, estimate, config)
    stop = chain.n >= config.min_n and statistic <= config.epsilon
    return StoppingVerdict(
        stop=stop,
        n=chain.n,
        rule="fixed-volume",
        statistic=statistic,
        threshold=config.epsilon,
    )


def multivariate_relsd_check(chain: Chain, estimate: CovarianceEstimate, config: StoppingConfig) -> StoppingVerdict:
    """Stop once Vol(C_alpha)^{1/p} + 1/n <= epsilon |Lambda-hat|^{1/(2p)}.

    Dropping the 1/n padding this is the same decision as the mess-threshold
    rule; keeping both routes lets them cross-check each other.
    """
    statistic = _volume_statistic(chain, estimate, config)
    p = chain.p
    threshold = config.epsilon * math.exp(_logdet(estimate.marginal, "marginal") / (2.0 * p))
    stop = chain.n >= config.min_n and statistic <= threshold
    return StoppingVerdict(
        stop=stop,
        n=chain.n,
        rule="multivariate-relative-sd",
        statistic=statistic,
        threshold=threshold,
    )


def mess_rule_check(chain: Chain, estimate: CovarianceEstimate, config: StoppingConfig) -> StoppingVerdict:
    """Stop once the multivariate ESS reaches mess_threshold (ties stop)."""
    value = mess(chain, estimate)
    threshold = mess_threshold(chain.p, config.alpha, config.epsilon)
    stop = chain.n >= config.min_n and value >= threshold
    return StoppingVerdict(
        stop=stop,
        n=chain.n,
        rule="mess-threshold",
        statistic=value,
        threshold=threshold,
    )


def sample_size_projection(pilot_n: int, pilot_half_width: float, target_half_width: float) -> int:
    """Project the run length needed to shrink a half-width: ceil(n (hw/hw')^2).

    A tiny relative slack absorbs floating point error in the square so that
    exact ratios land on the exact integer.
    """
    if pilot_n < 1:
        raise ValueError("pilot_n must be >= 1")
    if pilot_half_width <= 0 or target_half_width <= 0:
        raise ValueError("half-widths must be positive")
    ratio = pilot_half_width / target_half_width
    raw = pilot_n * ratio * ratio
    return int(math.ceil(raw * (1.0 - 1e-12)))
