"""Kernel density models and KL-divergence checks between chains.

Two sampler-quality checks live here. The first fits an adaptive Gaussian
product-kernel density to each chain and flags pairs of chains whose
estimated symmetric KL divergence exceeds a cutoff; chains that agree get
grouped into tiles/clusters. The second compares the normalizing constant
implied by one chain's density estimate against a quadrature value computed
straight from the unnormalized target, which catches a sampler that has
quietly missed part of the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .chain import Chain

__all__ = [
    "KdeModel",
    "KlEstimate",
    "Tool1Result",
    "Tool2Result",
    "adaptive_kde_fit",
    "kde_sample",
    "kl_estimate",
    "tool1",
    "tool2",
    "tile_clusters",
    "calibrate_cutoff",
]

# Log-ratios are clamped here before averaging; one draw landing where the
# other model underflows must not produce an infinite estimate.
LOG_RATIO_CLAMP = 700.0

# Keep chunked kernel evaluations near this many point pairs (memory bound).
_CHUNK_BUDGET = 20_000_000


def _as_points(samples) -> np.ndarray:
    if isinstance(samples, Chain):
        return samples.draws
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"samples must be 1-d or 2-d, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("samples contain non-finite values")
    return pts


@dataclass(frozen=True)
class KdeModel:
    """Adaptive Gaussian product-kernel density estimate.

    Point i carries kernel widths bandwidth * local_factors[i]; the local
    factors have geometric mean one, widening kernels in sparse regions and
    narrowing them where the pilot density is high.
    """

    points: np.ndarray
    bandwidth: np.ndarray
    local_factors: np.ndarray
    sensitivity: float

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def logpdf(self, x) -> np.ndarray:
        pts = _as_points(x)
        if pts.shape[1] != self.dim:
            raise ValueError(f"evaluation points have dimension {pts.shape[1]}, model has {self.dim}")
        widths = self.bandwidth[None, :] * self.local_factors[:, None]
        return _mixture_logpdf(pts, self.points, widths)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))


def _mixture_logpdf(x: np.ndarray, points: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """log of (1/n) sum_i prod_j N(x_j; points_ij, widths_ij), chunked.

    The squared distances expand into three matrix products, so the inner
    loop stays in BLAS; chunking over evaluation points bounds memory. The
    log-sum-exp over kernels is done in place on the chunk buffer because
    the scratch matrices dominate the running time otherwise.
    """
    n, d = points.shape
    halfinv2 = 0.5 / widths**2
    lin = 2.0 * points * halfinv2
    # Per-kernel constant: 0.5 sum_j p_ij^2 / w_ij^2 + sum_j log w_ij.
    const = (halfinv2 * points**2).sum(axis=1) + np.log(widths).sum(axis=1)
    offset = math.log(n) + 0.5 * d * math.log(2.0 * math.pi)
    out = np.empty(x.shape[0])
    chunk = max(1, _CHUNK_BUDGET // max(n, 1))
    for start in range(0, x.shape[0], chunk):
        xc = x[start:start + chunk]
        # g = -(0.5 (x - p)^2 / w^2 + log w) summed over dims, as (M, n).
        g = xc @ lin.T
        g -= xc**2 @ halfinv2.T
        g -= const[None, :]
        top = g.max(axis=1)
        safe = np.where(np.isfinite(top), top, 0.0)
        np.subtract(g, safe[:, None], out=g)
        np.exp(g, out=g)
        total = g.sum(axis=1)
        out[start:start + chunk] = np.where(
            np.isfinite(top), safe + np.log(total) - offset, -np.inf)
    return out


def adaptive_kde_fit(samples, sensitivity: float = 0.5) -> KdeModel:
    """Fit the adaptive KDE: per-dimension pilot bandwidths, then local factors.

    Pilot widths follow the d-dimensional normal-reference rule
    h_j = sd_j (4 / ((d+2) n))^{1/(d+4)}; local factors are
    (pilot density / geometric mean)^{-sensitivity} (Silverman 1986, sec 5.3).
    """
    pts = _as_points(samples)
    n, d = pts.shape
    if n < 2:
        raise ValueError("need at least 2 samples to fit a density")
    if not 0.0 <= sensitivity <= 1.0:
        raise ValueError("sensitivity must lie in [0, 1]")
    sd = pts.std(axis=0, ddof=1)
    if np.any(sd == 0.0):
        j = int(np.flatnonzero(sd == 0.0)[0])
        raise ValueError(f"coordinate {j + 1} is constant; bandwidth undefined")
    bandwidth = sd * (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))
    pilot_width = np.broadcast_to(bandwidth, (n, d))
    pilot_log = _mixture_logpdf(pts, pts, pilot_width)
    log_factors = -sensitivity * (pilot_log - pilot_log.mean())
    # Exact renormalization: the geometric mean of the factors is pinned to 1.
    log_factors -= log_factors.mean()
    factors = np.exp(log_factors)
    return KdeModel(points=pts, bandwidth=bandwidth, local_factors=factors, sensitivity=sensitivity)


def kde_sample(model: KdeModel, size: int, seed) -> np.ndarray:
    """Smoothed bootstrap from the fitted density: pick a point, add kernel noise.

    seed feeds numpy's default PCG64 generator; a fixed seed reproduces the
    draws bit for bit.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, model.n, size)
    noise = rng.standard_normal((size, model.dim))
    widths = model.bandwidth[None, :] * model.local_factors[idx][:, None]
    return model.points[idx] + widths * noise


@dataclass(frozen=True)
class KlEstimate:
    """Monte Carlo estimate of a directed KL divergence between two models.

    clamped counts draws whose log-ratio hit the +-700 guard; floored marks
    a small negative average that was clipped to zero.
    """

    value: float
    floored: bool
    clamped: int
    n_draws: int


def kl_estimate(p_from: KdeModel, p_to: KdeModel, n_draws: int = 10_000, seed=0) -> KlEstimate:
    """KL(p_from || p_to) ~ mean of log p_from(Z) - log p_to(Z), Z ~ p_from."""
    if p_from.dim != p_to.dim:
        raise ValueError("models have different dimensions")
    draws = kde_sample(p_from, n_draws, seed)
    ratios = p_from.logpdf(draws) - p_to.logpdf(draws)
    clamped = int(np.sum(~(np.abs(ratios) <= LOG_RATIO_CLAMP)))
    ratios = np.clip(ratios, -LOG_RATIO_CLAMP, LOG_RATIO_CLAMP)
    value = float(ratios.mean())
    floored = value < 0.0
    return KlEstimate(value=max(value, 0.0), floored=floored, clamped=clamped, n_draws=n_draws)


@dataclass(frozen=True)
class Tool1Result:
    """Pairwise symmetric KL divergences between chains.

    values[i, j] = (KL(i||j) + KL(j||i)) / 2 with zeros on the diagonal;
    passed means the largest pair stayed at or below the cutoff.
    """

    values: np.ndarray
    max_divergence: float
    passed: bool
    cutoff: float
    n_draws: int
    clamped: int
    floored: int


def _pair_seed(seed: int, i: int, j: int, direction: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(i, j, direction))


def tool1(
    chains,
    cutoff: float = 0.06,
    n_draws: int = 10_000,
    seed: int = 0,
    sensitivity: float = 0.5,
) -> Tool1Result:
    """Flag disagreeing chains by their maximum pairwise symmetric KL divergence.

    Each chain gets its own adaptive KDE; every ordered pair gets a
    deterministic seed substream derived from (seed, i, j, direction), so
    the result does not depend on evaluation order.
    """
    samples = [_as_points(c) for c in chains]
    m = len(samples)
    if m < 2:
        raise ValueError("need at least 2 chains to compare")
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    models = [adaptive_kde_fit(s, sensitivity) for s in samples]
    values = np.zeros((m, m))
    clamped = 0
    floored = 0
    for i in range(m):
        for j in range(i + 1, m):
            fwd = kl_estimate(models[i], models[j], n_draws, _pair_seed(seed, i, j, 0))
            rev = kl_estimate(models[j], models[i], n_draws, _pair_seed(seed, i, j, 1))
            sym = 0.5 * (fwd.value + rev.value)
            values[i, j] = values[j, i] = sym
            clamped += fwd.clamped + rev.clamped
            floored += int(fwd.floored) + int(rev.floored)
    max_divergence = float(values.max())
    return Tool1Result(
        values=values,
        max_divergence=max_divergence,
        passed=max_divergence <= cutoff,
        cutoff=cutoff,
        n_draws=n_draws,
        clamped=clamped,
        floored=floored,
    )


def tile_clusters(values: np.ndarray, cutoff: float) -> list[tuple[int, ...]]:
    """Connected components of the "divergence <= cutoff" graph on chains.

    Chains are numbered from 1 to match report labels. Components come back
    sorted by their smallest member.
    """
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise ValueError("values must be a square matrix")
    m = vals.shape[0]
    seen = [False] * m
    clusters = []
    for root in range(m):
        if seen[root]:
            continue
        stack, members = [root], []
        seen[root] = True
        while stack:
            node = stack.pop()
            members.append(node)
            for other in range(m):
                if not seen[other] and vals[node, other] <= cutoff:
                    seen[other] = True
                    stack.append(other)
        clusters.append(tuple(sorted(x + 1 for x in members)))
    return sorted(clusters, key=lambda c: c[0])


@dataclass(frozen=True)
class Tool2Result:
    """Normalizing-constant check of one chain against its target.

    c_star integrates the unnormalized target on a tensor midpoint grid;
    c_hat inverts the mean log-ratio of the chain's KDE against the target.
    captured means the relative discrepancy t2_star stayed within threshold.
    """

    c_hat: float
    c_star: float
    t2_star: float
    captured: bool
    threshold: float
    clamped: int
    n_draws: int
    grid_nodes: int


def _midpoint_grid(lower: np.ndarray, upper: np.ndarray, nodes: int) -> tuple[np.ndarray, float]:
    axes = []
    cell = 1.0
    for lo, hi in zip(lower, upper):
        width = (hi - lo) / nodes
        axes.append(lo + width * (np.arange(nodes) + 0.5))
        cell *= width
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return pts, cell


def tool2(
    samples,
    target,
    grid_nodes: int = 400,
    n_draws: int = 10_000,
    seed: int = 0,
    threshold: float = 0.05,
    sensitivity: float = 0.5,
) -> Tool2Result:
    """Check that one chain has captured the full mass of its target.

    Quadrature gives c* = integral of exp(target.log_density); the chain
    gives log c-hat = -mean log(p_n(Z)/f(Z)) over Z drawn from its KDE p_n.
    A chain stuck in part of the support sees only that part's mass, so
    c-hat falls short of c* and t2_star = |c-hat - c*| / c* blows up.
    Bounded box support and dimension <= 2 only.
    """
    pts = _as_points(samples)
    if target.dim > 2:
        raise ValueError("quadrature check supports dimension <= 2 only")
    if pts.shape[1] != target.dim:
        raise ValueError(f"chain dimension {pts.shape[1]} != target dimension {target.dim}")
    lower = np.asarray(target.lower, dtype=float)
    upper = np.asarray(target.upper, dtype=float)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("target support must be a bounded box")
    if grid_nodes < 2:
        raise ValueError("grid_nodes must be >= 2")
    grid, cell = _midpoint_grid(lower, upper, grid_nodes)
    log_f_grid = np.asarray(target.log_density(grid), dtype=float)
    finite = log_f_grid[np.isfinite(log_f_grid)]
    if finite.size == 0:
        raise ValueError("target density is zero everywhere on the grid")
    log_c_star = float(logsumexp(finite)) + math.log(cell)
    model = adaptive_kde_fit(pts, sensitivity)
    draws = kde_sample(model, n_draws, seed)
    ratios = model.logpdf(draws) - np.asarray(target.log_density(draws), dtype=float)
    clamped = int(np.sum(~(np.abs(ratios) <= LOG_RATIO_CLAMP)))
    ratios = np.clip(ratios, -LOG_RATIO_CLAMP, LOG_RATIO_CLAMP)
    log_c_hat = -float(ratios.mean())
    c_star = math.exp(log_c_star)
    c_hat = math.exp(log_c_hat)
    t2_star = abs(c_hat - c_star) / c_star
    return Tool2Result(
        c_hat=c_hat,
        c_star=c_star,
        t2_star=t2_star,
        captured=t2_star <= threshold,
        threshold=threshold,
        clamped=clamped,
        n_draws=n_draws,
        grid_nodes=grid_nodes,
    )


def calibrate_cutoff(
    samples,
    n_resamples: int = 200,
    n_draws: int = 2_000,
    seed: int = 0,
    sensitivity: float = 0.5,
    percentile: float = 0.95,
) -> float:
    """Null reference for the tool1 cutoff from one well-mixed chain.

    Each resample shuffles the sample, splits it in half, fits a KDE to each
    half and estimates their symmetric KL divergence; the given percentile
    of those null divergences is a data-driven cutoff.
    """
    pts = _as_points(samples)
    if pts.shape[0] < 8:
        raise ValueError("need at least 8 samples to split")
    if n_resamples < 1:
        raise ValueError("n_resamples must be >= 1")
    rng = np.random.default_rng(seed)
    half = pts.shape[0] // 2
    divergences = np.empty(n_resamples)
    for r in range(n_resamples):
        perm = rng.permutation(pts.shape[0])
        a = adaptive_kde_fit(pts[perm[:half]], sensitivity)
        b = adaptive_kde_fit(pts[perm[half: 2 * half]], sensitivity)
        fwd = kl_estimate(a, b, n_draws, np.random.SeedSequence(entropy=seed, spawn_key=(r, 0)))
        rev = kl_estimate(b, a, n_draws, np.random.SeedSequence(entropy=seed, spawn_key=(r, 1)))
        divergences[r] = 0.5 * (fwd.value + rev.value)
    return float(np.quantile(divergences, percentile))
