"""Gelman-Rubin potential scale reduction factors over parallel chains.

The univariate factor compares the pooled variance estimate V-hat against
the within-chain variance W; the multivariate version replaces the ratio
with the top generalized eigenvalue of the between- and within-chain
covariance matrices (Brooks and Gelman 1998). Values near 1 say the chains
have mixed; the factor here is the variance ratio itself, no square root
is taken.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .chain import Chain, ChainSet

__all__ = ["PsrfResult", "MpsrfResult", "psrf", "mpsrf", "psrf_series"]


@dataclass(frozen=True)
class PsrfResult:
    """Univariate potential scale reduction V-hat / W at one coordinate."""

    rhat: float
    within: float
    between_over_n: float
    pooled: float
    m: int
    n: int


@dataclass(frozen=True)
class MpsrfResult:
    """Multivariate potential scale reduction (n-1)/n + (1 + 1/m) lambda_1."""

    rhat: float
    top_eigenvalue: float
    within: np.ndarray
    between_over_n: np.ndarray
    m: int
    n: int


def _as_chainset(chains) -> ChainSet:
    if isinstance(chains, ChainSet):
        return chains
    return ChainSet(tuple(chains))


def _stack(chains: ChainSet) -> tuple[np.ndarray, int, int]:
    n = chains.equal_length()
    if chains.m < 2:
        raise ValueError("potential scale reduction needs at least 2 chains")
    if n < 2:
        raise ValueError("potential scale reduction needs at least 2 draws per chain")
    return np.stack([c.draws for c in chains]), chains.m, n


def psrf(chains, coordinate: int = 1) -> PsrfResult:
    """Univariate potential scale reduction factor at one coordinate.

    W is the mean of the per-chain sample variances, B/n the sample variance
    of the chain means, V-hat = (n-1)/n W + B/n, and R-hat = V-hat / W.
    """
    cs = _as_chainset(chains)
    draws, m, n = _stack(cs)
    if not 1 <= coordinate <= cs.p:
        raise ValueError(f"coordinate {coordinate} out of range 1..{cs.p}")
    x = draws[:, :, coordinate - 1]
    within = float(x.var(axis=1, ddof=1).mean())
    if within == 0.0:
        raise ValueError("within-chain variance is zero; R-hat undefined")
    between_over_n = float(x.mean(axis=1).var(ddof=1))
    pooled = (n - 1) / n * within + between_over_n
    return PsrfResult(
        rhat=pooled / within,
        within=within,
        between_over_n=between_over_n,
        pooled=pooled,
        m=m,
        n=n,
    )


def mpsrf(chains) -> MpsrfResult:
    """Multivariate potential scale reduction factor over all coordinates.

    lambda_1 is the largest eigenvalue of W*^{-1} B*/n, computed through the
    symmetric generalized eigenproblem so a nearly singular W* fails loudly
    instead of returning noise.
    """
    cs = _as_chainset(chains)
    draws, m, n = _stack(cs)
    p = cs.p
    chain_means = draws.mean(axis=1)
    within = np.zeros((p, p))
    for i in range(m):
        dev = draws[i] - chain_means[i]
        within += dev.T @ dev
    within /= m * (n - 1)
    dev_means = chain_means - chain_means.mean(axis=0)
    between_over_n = dev_means.T @ dev_means / (m - 1)
    within = 0.5 * (within + within.T)
    between_over_n = 0.5 * (between_over_n + between_over_n.T)
    # Cholesky inside eigh tolerates a numerically regularized singular W*
    # and would return noise, so reject rank-deficient W* explicitly.
    wvals = np.linalg.eigvalsh(within)
    if wvals[0] <= 1e-12 * max(wvals[-1], 0.0):
        raise ValueError("within-chain covariance is singular; multivariate R-hat undefined")
    try:
        eigvals = eigh(between_over_n, within, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("within-chain covariance is singular; multivariate R-hat undefined") from exc
    top = float(eigvals[-1])
    return MpsrfResult(
        rhat=(n - 1) / n + (1.0 + 1.0 / m) * top,
        top_eigenvalue=top,
        within=within,
        between_over_n=between_over_n,
        m=m,
        n=n,
    )


def psrf_series(chains, step: int, coordinate: int | None = 1) -> tuple[np.ndarray, np.ndarray]:
    """R-hat evaluated on growing prefixes n_k = k * step.

    coordinate=None computes the multivariate factor. Prefixes where the
    factor is undefined (all chains still constant, say) are marked NaN so
    a plot shows the gap instead of hiding it.
    """
    cs = _as_chainset(chains)
    n = cs.equal_length()
    if step < 2:
        raise ValueError("step must be >= 2")
    ns, values = [], []
    for nk in range(step, n + 1, step):
        prefix = ChainSet(tuple(Chain(c.draws[:nk], name=c.name) for c in cs))
        try:
            if coordinate is None:
                value = mpsrf(prefix).rhat
            else:
                value = psrf(prefix, coordinate).rhat
        except ValueError:
            value = float("nan")
        ns.append(nk)
        values.append(value)
    if not ns:
        raise ValueError(f"step {step} exceeds chain length {n}")
    return np.asarray(ns), np.asarray(values)
