"""Single-chain convergence diagnostics: Geweke, Heidelberger-Welch, Raftery-Lewis.

All three reduce the chain to a scalar series and ask whether its early and
late behaviour are compatible with stationarity. Spectral variances come
from mcdiag.variance so the same estimator conventions apply everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln, kve

from .chain import quantile as _quantile
from .chain import series_values
from .variance import spectral_var_zero

__all__ = [
    "GewekeResult",
    "HwResult",
    "RlResult",
    "geweke",
    "heidelberger_welch",
    "cramer_von_mises_cdf",
    "rl_nmin",
    "raftery_lewis",
]


@dataclass(frozen=True)
class GewekeResult:
    """Two-sample z-score comparing the head and tail of a chain."""

    z: float
    mean_head: float
    mean_tail: float
    spectral_head: float
    spectral_tail: float
    n_head: int
    n_tail: int


@dataclass(frozen=True)
class HwResult:
    """Stationarity verdict from the Brownian-bridge (Cramer-von Mises) test.

    discard_fraction is the fraction of the original chain dropped from the
    front before the test first passed; 0.5 with passed=False means the test
    kept failing after half the chain was gone.
    """

    passed: bool
    discard_fraction: float
    cvm_statistic: float
    p_value: float
    n_used: int


@dataclass(frozen=True)
class RlResult:
    """Raftery-Lewis run-length estimates for one quantile.

    thinning is the sub-sampling interval k at which the binary indicator
    chain looks first-order Markov, burn_in and run_length are in units of
    original iterations, and dependence_factor = (burn_in + run_length) /
    n_min measures the price of autocorrelation relative to iid sampling.
    """

    thinning: int
    burn_in: int
    run_length: int
    n_min: int
    dependence_factor: float
    prob_01: float
    prob_10: float
    quantile: float
    threshold: float


def geweke(series, frac_head: float = 0.1, frac_tail: float = 0.5) -> GewekeResult:
    """Compare the mean of the first 10% of a chain against the last 50%.

    z = (mean_head - mean_tail) / sqrt(S_head(0)/n_head + S_tail(0)/n_tail)
    with spectral variances estimated separately on each segment. Under
    stationarity z is asymptotically standard normal.
    """
    vals = series_values(series)
    n = vals.size
    if not (0 < frac_head < 1 and 0 < frac_tail < 1):
        raise ValueError("segment fractions must lie in (0, 1)")
    if frac_head + frac_tail > 1:
        raise ValueError("head and tail segments overlap")
    n_head = int(frac_head * n)
    n_tail = int(frac_tail * n)
    if n_head < 10 or n_tail < 10:
        raise ValueError(f"segments too short (head {n_head}, tail {n_tail}); need >= 10 points each")
    head = vals[:n_head]
    tail = vals[n - n_tail:]
    est_head = spectral_var_zero(head)
    est_tail = spectral_var_zero(tail)
    denom2 = est_head.longrun / n_head + est_tail.longrun / n_tail
    if denom2 <= 0.0:
        raise ValueError("degenerate segment variance; z-score undefined")
    return GewekeResult(
        z=float((head.mean() - tail.mean()) / math.sqrt(denom2)),
        mean_head=float(head.mean()),
        mean_tail=float(tail.mean()),
        spectral_head=est_head.longrun,
        spectral_tail=est_tail.longrun,
        n_head=n_head,
        n_tail=n_tail,
    )


def cramer_von_mises_cdf(x: float) -> float:
    """Asymptotic CDF of the Cramer-von Mises statistic.

    Series expansion of Csorgo and Faraway (1996), eq. 1.3, written with the
    exponentially scaled Bessel function so large arguments cannot overflow.
    Accurate to well below 1e-4 over the range where the answer is not
    already 0 or 1.
    """
    if x <= 0.0:
        return 0.0
    n_terms = 10 if x <= 10.0 else 10 + int(3.0 * math.sqrt(x))
    total = 0.0
    for k in range(n_terms):
        t = (4 * k + 1) ** 2 / (16.0 * x)
        log_term = (
            float(gammaln(k + 0.5))
            - float(gammaln(k + 1.0))
            + 0.5 * math.log(4 * k + 1)
            - 2.0 * t
        )
        bessel = float(kve(0.25, t))
        if bessel > 0.0:
            total += math.exp(log_term + math.log(bessel))
    total /= math.pi ** 1.5 * math.sqrt(x)
    return min(max(total, 0.0), 1.0)


def _bridge_cvm(window: np.ndarray, longrun: float) -> float:
    """CvM statistic (1/n) sum_j B(j/n)^2 of the standardized partial-sum bridge."""
    n = window.size
    partial = np.cumsum(window)
    j = np.arange(1, n + 1)
    bridge = (partial - j * window.mean()) / math.sqrt(n * longrun)
    return float(bridge @ bridge / n)


def heidelberger_welch(series, level: float = 0.05) -> HwResult:
    """Iterated stationarity test on the standardized partial-sum bridge.

    The Cramer-von Mises test runs on the full chain first; each failure
    discards another 10% of the original length from the front, up to half
    the chain. The spectral variance is re-estimated on each window.
    """
    vals = series_values(series)
    n = vals.size
    if n < 50:
        raise ValueError(f"need at least 50 draws, got {n}")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    last = None
    for tenths in range(6):
        frac = tenths / 10.0
        window = vals[int(frac * n):]
        est = spectral_var_zero(window)
        if est.degenerate:
            raise ValueError("window is constant; stationarity test undefined")
        cvm = _bridge_cvm(window, est.longrun)
        p_value = 1.0 - cramer_von_mises_cdf(cvm)
        last = HwResult(
            passed=p_value > level,
            discard_fraction=frac,
            cvm_statistic=cvm,
            p_value=p_value,
            n_used=window.size,
        )
        if last.passed:
            return last
    return last


def rl_nmin(q: float, eps: float, s: float) -> int:
    """Iid-sampling floor on the run length for a quantile estimate.

    n_min = ceil(z^2 q (1-q) / eps^2) with z the (1+s)/2 normal quantile;
    the degenerate quantiles q = 0 and q = 1 need no draws at all.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if q in (0.0, 1.0):
        return 0
    z = float(stats.norm.ppf((1.0 + s) / 2.0))
    return int(math.ceil(z * z * q * (1.0 - q) / (eps * eps)))


def _transition_counts(binary: np.ndarray) -> np.ndarray:
    """2x2 counts of consecutive pairs in a 0/1 sequence."""
    frm, to = binary[:-1], binary[1:]
    counts = np.zeros((2, 2), dtype=np.int64)
    np.add.at(counts, (frm, to), 1)
    return counts


def _prefers_first_order(binary: np.ndarray) -> bool:
    """BIC comparison of first- vs second-order Markov fits on a 0/1 sequence.

    G2 is the likelihood-ratio statistic for conditional independence of
    W_{t-2} and W_t given W_{t-1} (2 extra parameters in the second-order
    model), so the first-order model wins when G2 < 2 log(#triples).
    """
    if binary.size < 3:
        return False
    triples = np.zeros((2, 2, 2), dtype=np.int64)
    np.add.at(triples, (binary[:-2], binary[1:-1], binary[2:]), 1)
    n_triples = binary.size - 2
    g2 = 0.0
    pair_ij = triples.sum(axis=2)
    pair_jl = triples.sum(axis=0)
    mid = triples.sum(axis=(0, 2))
    for i in range(2):
        for j in range(2):
            for l in range(2):
                observed = triples[i, j, l]
                if observed == 0:
                    continue
                fitted = pair_ij[i, j] * pair_jl[j, l] / mid[j]
                g2 += 2.0 * observed * math.log(observed / fitted)
    return g2 - 2.0 * math.log(n_triples) < 0.0


def raftery_lewis(
    series,
    q: float = 0.5,
    eps: float = 0.005,
    s: float = 0.95,
    converge_eps: float = 0.001,
) -> RlResult:
    """Raftery-Lewis burn-in and run-length estimates for one quantile.

    The chain is reduced to the indicator of sitting at or below its
    empirical q-quantile; the indicator sequence is thinned until a
    first-order Markov fit is preferred by BIC, and the fitted two-state
    transition probabilities give closed-form burn-in and run-length
    requirements in original iterations.
    """
    vals = series_values(series)
    n = vals.size
    n_min = rl_nmin(q, eps, s)
    if n_min == 0:
        raise ValueError("q = 0 or 1 needs no sampling; nothing to estimate")
    if n < n_min:
        raise ValueError(f"need at least n_min = {n_min} draws for q={q}, eps={eps}; have {n}")
    threshold = _quantile(vals, q)
    binary = (vals <= threshold).astype(np.int8)
    k_max = max(1, min(n // 50, 50))
    k = k_max
    for cand in range(1, k_max + 1):
        if _prefers_first_order(binary[::cand]):
            k = cand
            break
    thinned = binary[::k]
    counts = _transition_counts(thinned)
    if counts[0].sum() == 0 or counts[1].sum() == 0:
        raise ValueError(f"indicator chain is one-sided at q={q}; transition probabilities undefined")
    alpha = counts[0, 1] / counts[0].sum()
    beta = counts[1, 0] / counts[1].sum()
    if alpha + beta == 0.0:
        raise ValueError(f"indicator chain never moves at q={q}")
    lam = 1.0 - alpha - beta
    if lam == 0.0 or abs(lam) >= 1.0:
        # log|lam| is -inf or 0; the geometric decay argument collapses and
        # one thinned step is all the burn-in there is.
        burn_in = k
    else:
        m_star = math.log(converge_eps * (alpha + beta) / max(alpha, beta)) / math.log(abs(lam))
        burn_in = k * int(math.ceil(m_star))
    z = float(stats.norm.ppf((1.0 + s) / 2.0))
    run_raw = k * (alpha * beta * (2.0 - alpha - beta) / (alpha + beta) ** 3) * (z / eps) ** 2
    run_length = max(1, int(math.ceil(run_raw)))
    return RlResult(
        thinning=k,
        burn_in=burn_in,
        run_length=run_length,
        n_min=n_min,
        dependence_factor=(burn_in + run_length) / n_min,
        prob_01=float(alpha),
        prob_10=float(beta),
        quantile=q,
        threshold=float(threshold),
    )
