"""Long-run variance estimation for stationary sampler output.

Everything downstream (effective sample size, fixed-width stopping,
spectral diagnostics) runs off two quantities estimated here: the marginal
variance lambda^2 of the series and the long-run variance sigma^2 that
appears in the CLT sqrt(n) (mean - mu) -> N(0, sigma^2). Two estimators are
provided, non-overlapping batch means and a lag-window estimate of the
spectral density at frequency zero, plus their multivariate batch-means
analogue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import Chain, series_values

__all__ = [
    "VarianceEstimate",
    "CovarianceEstimate",
    "default_width",
    "lag_autocovariance",
    "lag_autocorrelation",
    "autocorrelations",
    "batch_means_var",
    "multivariate_batch_means",
    "spectral_var_zero",
]

# Relative floor applied when the lag-window estimate comes out negative.
SPECTRAL_FLOOR = 1e-12


@dataclass(frozen=True)
class VarianceEstimate:
    """Univariate variance estimates for one series.

    longrun is sigma^2-hat, marginal is lambda^2-hat (divisor n-1).
    width is the batch size or lag-window bandwidth that produced longrun.
    degenerate marks a constant series; floored marks a negative spectral
    estimate that was clipped to SPECTRAL_FLOOR * marginal.
    """

    longrun: float
    marginal: float
    method: str
    width: int
    n: int
    n_batches: int = 0
    degenerate: bool = False
    floored: bool = False


@dataclass(frozen=True)
class CovarianceEstimate:
    """Multivariate batch-means estimates for one chain.

    longrun and marginal are p-by-p symmetric PSD matrices. singular is set
    when the long-run estimate cannot support a determinant (fewer batches
    than dimensions, a zero eigenvalue, or an eigenvalue repaired by
    clipping); consumers that need a determinant must refuse such input.
    """

    longrun: np.ndarray
    marginal: np.ndarray
    method: str
    width: int
    n: int
    n_batches: int
    singular: bool = False
    clipped: bool = False


def default_width(n: int) -> int:
    """Default batch size / bandwidth: floor(sqrt(n))."""
    return int(math.isqrt(n))


def lag_autocovariance(series, lag: int) -> float:
    """gamma-hat(k) = (1/n) sum_{i<=n-k} (x_i - xbar)(x_{i+k} - xbar).

    Biased (divisor n) so the sequence is positive semidefinite.
    """
    vals = series_values(series)
    n = vals.size
    if not 0 <= lag <= n - 1:
        raise ValueError(f"lag must lie in 0..{n - 1}, got {lag}")
    centered = vals - vals.mean()
    if lag == 0:
        return float(centered @ centered / n)
    return float(centered[:-lag] @ centered[lag:] / n)


def lag_autocorrelation(series, lag: int) -> float:
    """rho-hat(k) = gamma-hat(k) / gamma-hat(0); errors on a constant series."""
    g0 = lag_autocovariance(series, 0)
    if g0 <= 0.0:
        raise ValueError("autocorrelation undefined for a constant series")
    return lag_autocovariance(series, lag) / g0


def _autocovariances_fft(centered: np.ndarray, max_lag: int) -> np.ndarray:
    """All gamma-hat(0..max_lag) at once via the circular-convolution trick."""
    n = centered.size
    size = 1
    while size < 2 * n:
        size *= 2
    spec = np.fft.rfft(centered, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[: max_lag + 1]
    return acov / n


def autocorrelations(series, max_lag: int) -> np.ndarray:
    """rho-hat(0..max_lag) as one array; errors on a constant series."""
    vals = series_values(series)
    if not 0 <= max_lag <= vals.size - 1:
        raise ValueError(f"max_lag must lie in 0..{vals.size - 1}, got {max_lag}")
    acov = _autocovariances_fft(vals - vals.mean(), max_lag)
    if acov[0] <= 0.0:
        raise ValueError("autocorrelation undefined for a constant series")
    return acov / acov[0]


def _check_width(n: int, width, minimum_n: int) -> int:
    if n < minimum_n:
        raise ValueError(f"need at least {minimum_n} draws, got {n}")
    b = default_width(n) if width is None else int(width)
    if b < 1:
        raise ValueError(f"width must be >= 1, got {b}")
    return b


def batch_means_var(series, batch_size: int | None = None) -> VarianceEstimate:
    """Non-overlapping batch-means estimate of the long-run variance.

    The series is cut into a = floor(n/b) consecutive batches of size b
    (default floor(sqrt(n))); a trailing remainder is discarded. Then

        sigma^2-hat = b/(a-1) * sum_k (BM_k - mean(BM))^2

    where BM_k are the batch means. At least two batches are required.
    """
    vals = series_values(series)
    n = vals.size
    b = _check_width(n, batch_size, minimum_n=4)
    a = n // b
    if a < 2:
        raise ValueError(f"batch size {b} leaves {a} batch(es); need at least 2 from n={n}")
    means = vals[: a * b].reshape(a, b).mean(axis=1)
    dev = means - means.mean()
    longrun = float(b / (a - 1) * (dev @ dev))
    marginal = float(vals.var(ddof=1))
    return VarianceEstimate(
        longrun=longrun,
        marginal=marginal,
        method="batch-means",
        width=b,
        n=n,
        n_batches=a,
        degenerate=(longrun == 0.0),
    )


def _tukey_hanning_weights(bandwidth: int) -> np.ndarray:
    """w(k/b) = (1 + cos(pi k / b)) / 2 for k = 1..b."""
    k = np.arange(1, bandwidth + 1)
    return 0.5 * (1.0 + np.cos(np.pi * k / bandwidth))


def spectral_var_zero(series, bandwidth: int | None = None) -> VarianceEstimate:
    """Lag-window estimate of the spectral density at frequency zero.

    S-hat(0) = gamma-hat(0) + 2 sum_{k=1..b} w(k/b) gamma-hat(k) with the
    Tukey-Hanning window, normalized so S(0) equals the long-run variance.
    A negative estimate is floored at SPECTRAL_FLOOR * marginal variance
    and flagged.
    """
    vals = series_values(series)
    n = vals.size
    b = _check_width(n, bandwidth, minimum_n=4)
    if b > n - 1:
        raise ValueError(f"bandwidth {b} too large for n={n}")
    acov = _autocovariances_fft(vals - vals.mean(), b)
    longrun = float(acov[0] + 2.0 * (_tukey_hanning_weights(b) @ acov[1:]))
    marginal = float(vals.var(ddof=1))
    degenerate = marginal == 0.0
    floored = False
    floor = SPECTRAL_FLOOR * marginal
    if not degenerate and longrun < floor:
        longrun = floor
        floored = True
    if degenerate:
        longrun = 0.0
    return VarianceEstimate(
        longrun=longrun,
        marginal=marginal,
        method="spectral",
        width=b,
        n=n,
        degenerate=degenerate,
        floored=floored,
    )


def _psd_repair(mat: np.ndarray) -> tuple[np.ndarray, bool, bool]:
    """Symmetrize and clip negative eigenvalues to zero.

    Returns (repaired, clipped, singular). Clipping only fires on floating
    point noise since both inputs are Gram matrices, but a clipped or
    zero-eigenvalue matrix must not feed a determinant.
    """
    sym = 0.5 * (mat + mat.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    tol = 1e-12 * max(eigvals[-1], 0.0)
    singular = bool(eigvals[0] <= tol)
    clipped = bool(eigvals[0] < 0.0)
    if clipped:
        sym = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
        sym = 0.5 * (sym + sym.T)
    return sym, clipped, singular


def multivariate_batch_means(chain: Chain, batch_size: int | None = None) -> CovarianceEstimate:
    """Multivariate batch-means long-run covariance plus the marginal covariance.

    Sigma-hat = b/(a-1) * sum_k (BM_k - mean)(BM_k - mean)^T over a = floor(n/b)
    consecutive batch-mean vectors. With a <= p batches the estimate cannot
    have full rank and is flagged singular.
    """
    draws = chain.draws
    n, p = draws.shape
    b = _check_width(n, batch_size, minimum_n=4)
    a = n // b
    if a < 2:
        raise ValueError(f"batch size {b} leaves {a} batch(es); need at least 2 from n={n}")
    means = draws[: a * b].reshape(a, b, p).mean(axis=1)
    dev = means - means.mean(axis=0)
    longrun = b / (a - 1) * (dev.T @ dev)
    centered = draws - draws.mean(axis=0)
    marginal = centered.T @ centered / (n - 1)
    longrun, clipped_l, singular_l = _psd_repair(longrun)
    marginal, _, _ = _psd_repair(marginal)
    singular = singular_l or clipped_l or a <= p
    return CovarianceEstimate(
        longrun=longrun,
        marginal=marginal,
        method="batch-means",
        width=b,
        n=n,
        n_batches=a,
        singular=singular,
        clipped=clipped_l,
    )
