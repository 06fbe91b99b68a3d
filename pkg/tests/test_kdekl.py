"""Adaptive KDE fitting and the KL-based agreement checks."""

import numpy as np
import pytest
from scipy.stats import norm

from mcdiag.kdekl import (
    adaptive_kde_fit,
    calibrate_cutoff,
    kde_sample,
    kl_estimate,
    tile_clusters,
    tool1,
    tool2,
)
from mcdiag.targets import TargetModel


def _std_normal_target():
    return TargetModel(
        log_density=lambda q: -0.5 * q[:, 0] ** 2 - 0.5 * np.log(2 * np.pi),
        dim=1,
        lower=np.array([-10.0]),
        upper=np.array([10.0]),
        name="stdnormal",
    )


def test_fit_bandwidth_normal_reference_rule():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(500, 2)) * np.array([1.0, 3.0])
    model = adaptive_kde_fit(pts)
    sd = pts.std(axis=0, ddof=1)
    expect = sd * (4.0 / (4.0 * 500)) ** (1.0 / 6.0)
    np.testing.assert_allclose(model.bandwidth, expect, rtol=1e-12)
    assert model.n == 500
    assert model.dim == 2


def test_local_factors_geometric_mean_one():
    rng = np.random.default_rng(1)
    model = adaptive_kde_fit(rng.exponential(size=800), sensitivity=0.5)
    log_factors = np.log(model.local_factors)
    assert abs(log_factors.mean()) < 1e-12
    # Sparse-region points get wider kernels than the bulk.
    tail_factor = model.local_factors[np.argmax(model.points[:, 0])]
    bulk_factor = model.local_factors[np.argmin(np.abs(model.points[:, 0] - np.median(model.points)))]
    assert tail_factor > bulk_factor


def test_sensitivity_zero_gives_fixed_bandwidth():
    rng = np.random.default_rng(2)
    model = adaptive_kde_fit(rng.normal(size=300), sensitivity=0.0)
    np.testing.assert_allclose(model.local_factors, 1.0, rtol=1e-12)


def test_symmetric_sample_symmetric_factors():
    # Symmetrized samples make the pilot density even, so mirrored points
    # carry identical local factors.
    rng = np.random.default_rng(3)
    half = rng.normal(size=200)
    pts = np.concatenate([half, -half])
    model = adaptive_kde_fit(pts)
    np.testing.assert_allclose(model.local_factors[:200], model.local_factors[200:], rtol=1e-9)


def test_fit_input_validation():
    with pytest.raises(ValueError, match="at least 2"):
        adaptive_kde_fit(np.array([1.0]))
    with pytest.raises(ValueError, match="constant"):
        adaptive_kde_fit(np.column_stack([np.ones(50), np.arange(50.0)]))
    with pytest.raises(ValueError, match="sensitivity"):
        adaptive_kde_fit(np.arange(50.0), sensitivity=1.5)
    with pytest.raises(ValueError, match="non-finite"):
        adaptive_kde_fit(np.array([1.0, np.nan, 2.0]))


def test_logpdf_matches_brute_force():
    rng = np.random.default_rng(4)
    model = adaptive_kde_fit(rng.normal(size=(150, 2)))
    grid = rng.normal(size=(60, 2)) * 2.0
    widths = model.bandwidth[None, :] * model.local_factors[:, None]
    expect = np.empty(60)
    for k in range(60):
        z = (grid[k][None, :] - model.points) / widths
        logk = -0.5 * (z ** 2).sum(axis=1) - np.log(widths).sum(axis=1) - np.log(2 * np.pi)
        top = logk.max()
        expect[k] = top + np.log(np.exp(logk - top).sum()) - np.log(model.n)
    np.testing.assert_allclose(model.logpdf(grid), expect, atol=1e-12)


def test_density_l1_error_small_for_normal_sample():
    model = adaptive_kde_fit(np.random.default_rng(0).normal(size=10_000))
    grid = np.linspace(-6.0, 6.0, 2401)
    est = np.exp(model.logpdf(grid[:, None]))
    l1 = np.trapezoid(np.abs(est - norm.pdf(grid)), grid)
    assert l1 < 0.05


def test_density_integrates_to_one():
    rng = np.random.default_rng(3)
    m1 = adaptive_kde_fit(rng.normal(size=3000))
    g = np.linspace(-9.0, 9.0, 4001)
    mass = np.trapezoid(np.exp(m1.logpdf(g[:, None])), g)
    assert mass == pytest.approx(1.0, abs=1e-3)
    m2 = adaptive_kde_fit(rng.normal(size=(3000, 2)))
    gx = np.linspace(-8.0, 8.0, 321)
    xx, yy = np.meshgrid(gx, gx)
    dens = np.exp(m2.logpdf(np.column_stack([xx.ravel(), yy.ravel()]))).reshape(xx.shape)
    mass2 = np.trapezoid(np.trapezoid(dens, gx, axis=1), gx)
    assert mass2 == pytest.approx(1.0, abs=1e-3)


def test_logpdf_dimension_mismatch():
    model = adaptive_kde_fit(np.random.default_rng(5).normal(size=(100, 2)))
    with pytest.raises(ValueError, match="dimension"):
        model.logpdf(np.zeros((4, 3)))


def test_kde_sample_reproducible_and_unbiased():
    model = adaptive_kde_fit(np.random.default_rng(3).normal(size=3000))
    a = kde_sample(model, 5000, seed=5)
    b = kde_sample(model, 5000, seed=5)
    np.testing.assert_array_equal(a, b)
    draws = kde_sample(model, 20_000, seed=5)
    se = draws.std(ddof=1) / np.sqrt(draws.shape[0])
    assert abs(draws.mean() - model.points.mean()) < 3 * se
    with pytest.raises(ValueError, match="size"):
        kde_sample(model, 0, seed=1)


def test_kl_self_is_zero():
    model = adaptive_kde_fit(np.random.default_rng(6).normal(size=1000))
    res = kl_estimate(model, model, n_draws=500, seed=7)
    assert res.value == 0.0
    assert res.clamped == 0


def test_kl_nonnegative_and_floored_flag():
    # Two halves of one iid sample: true KL ~ 0, the Monte Carlo average can
    # dip negative and must be clipped to zero with the flag set.
    rng = np.random.default_rng(7)
    x = rng.normal(size=4000)
    a = adaptive_kde_fit(x[:2000])
    b = adaptive_kde_fit(x[2000:])
    floored_seen = False
    for seed in range(12):
        res = kl_estimate(a, b, n_draws=400, seed=seed)
        assert res.value >= 0.0
        floored_seen = floored_seen or res.floored
    assert floored_seen


def test_kl_separated_normals_large():
    rng = np.random.default_rng(1)
    a = adaptive_kde_fit(rng.normal(0.0, 1.0, 4000))
    b = adaptive_kde_fit(rng.normal(10.0, 1.0, 4000))
    fwd = kl_estimate(a, b, n_draws=4000, seed=7)
    rev = kl_estimate(b, a, n_draws=4000, seed=8)
    sym = 0.5 * (fwd.value + rev.value)
    assert fwd.value > 8.0
    assert rev.value > 8.0
    assert 8.0 < sym < 16.0
    assert fwd.clamped == 0 and rev.clamped == 0


def test_kl_affine_equivariance_with_shared_seed():
    rng = np.random.default_rng(11)
    x1 = rng.normal(size=2500)
    x2 = rng.normal(2.0, 1.5, 2500)
    base = kl_estimate(adaptive_kde_fit(x1), adaptive_kde_fit(x2), n_draws=2500, seed=12)
    mapped = kl_estimate(
        adaptive_kde_fit(3.0 * x1 - 1.0), adaptive_kde_fit(3.0 * x2 - 1.0),
        n_draws=2500, seed=12)
    assert mapped.value == pytest.approx(base.value, abs=1e-10)


def test_kl_dimension_mismatch():
    a = adaptive_kde_fit(np.random.default_rng(8).normal(size=100))
    b = adaptive_kde_fit(np.random.default_rng(9).normal(size=(100, 2)))
    with pytest.raises(ValueError, match="dimensions"):
        kl_estimate(a, b, n_draws=10)


def test_tool1_same_distribution_passes():
    rng = np.random.default_rng(10)
    chains = [rng.normal(size=2000) for _ in range(3)]
    res = tool1(chains, cutoff=0.06, n_draws=2000, seed=1)
    assert res.passed
    assert res.max_divergence < 0.06
    assert res.values.shape == (3, 3)
    np.testing.assert_array_equal(np.diag(res.values), 0.0)
    np.testing.assert_allclose(res.values, res.values.T)


def test_tool1_separated_chains_fail():
    rng = np.random.default_rng(11)
    chains = [rng.normal(size=1500), rng.normal(size=1500) + 8.0]
    res = tool1(chains, cutoff=0.06, n_draws=1500, seed=2)
    assert not res.passed
    assert res.max_divergence > 0.6


def test_tool1_deterministic_in_seed():
    rng = np.random.default_rng(12)
    chains = [rng.normal(size=800) for _ in range(2)]
    a = tool1(chains, n_draws=500, seed=3)
    b = tool1(chains, n_draws=500, seed=3)
    np.testing.assert_array_equal(a.values, b.values)
    c = tool1(chains, n_draws=500, seed=4)
    assert not np.array_equal(a.values, c.values)


def test_tool1_needs_two_chains():
    with pytest.raises(ValueError, match="at least 2"):
        tool1([np.random.default_rng(13).normal(size=100)])


def test_tile_clusters_partitions():
    all_close = np.zeros((4, 4))
    assert tile_clusters(all_close, 0.06) == [(1, 2, 3, 4)]
    values = np.array([
        [0.0, 0.01, 5.0, 5.0],
        [0.01, 0.0, 5.0, 5.0],
        [5.0, 5.0, 0.0, 9.0],
        [5.0, 5.0, 9.0, 0.0],
    ])
    assert tile_clusters(values, 0.06) == [(1, 2), (3,), (4,)]
    with pytest.raises(ValueError, match="square"):
        tile_clusters(np.zeros((2, 3)), 0.06)


def test_tool2_captures_full_normal_sample():
    full = np.random.default_rng(6).normal(size=6000)
    res = tool2(full[:, None], _std_normal_target(), n_draws=3000, seed=9)
    assert res.c_star == pytest.approx(1.0, abs=1e-6)
    assert res.t2_star < 0.05
    assert res.captured


def test_tool2_flags_half_support_sample():
    full = np.random.default_rng(6).normal(size=6000)
    half = full[full > 0]
    res = tool2(half[:, None], _std_normal_target(), n_draws=3000, seed=9)
    assert not res.captured
    assert res.t2_star > 0.3
    assert res.c_hat < 0.7


def test_tool2_input_validation():
    target = _std_normal_target()
    x = np.random.default_rng(14).normal(size=200)
    with pytest.raises(ValueError, match="dimension"):
        tool2(np.zeros((50, 2)), target, n_draws=10)
    unbounded = TargetModel(
        log_density=target.log_density, dim=1,
        lower=np.array([-np.inf]), upper=np.array([10.0]))
    with pytest.raises(ValueError, match="bounded"):
        tool2(x[:, None], unbounded, n_draws=10)
    with pytest.raises(ValueError, match="grid_nodes"):
        tool2(x[:, None], target, grid_nodes=1, n_draws=10)
    big = TargetModel(
        log_density=lambda q: np.zeros(q.shape[0]), dim=3,
        lower=np.zeros(3), upper=np.ones(3))
    with pytest.raises(ValueError, match="<= 2"):
        tool2(np.zeros((50, 3)), big, n_draws=10)


def test_calibrate_cutoff_small_positive():
    cut = calibrate_cutoff(
        np.random.default_rng(6).normal(size=2000), n_resamples=8, n_draws=1000, seed=4)
    assert 0.0 < cut < 0.06
    with pytest.raises(ValueError, match="at least 8"):
        calibrate_cutoff(np.arange(4.0), n_resamples=2)
