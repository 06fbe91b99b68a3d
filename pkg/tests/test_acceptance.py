"""Acceptance battery for the full toolkit.

Fourteen criteria: closed-form golden values, stochastic-band behavior of
the bundled samplers under the stopping rules and diagnostics, algebraic
identities, estimator consistency, calibration rates, and the logistic
end-to-end run. Every test prints one "criterion NN: PASS/FAIL" line;
run `pytest tests/test_acceptance.py -v -rA` to see all of them.

Stochastic criteria pin their seeds, so observed values are reproducible;
the asserted bands are intentionally wider than the pinned draws.
"""

import math

import numpy as np

from mcdiag.chain import Chain
from mcdiag.classic import geweke, heidelberger_welch, rl_nmin
from mcdiag.gelman_rubin import mpsrf, psrf
from mcdiag.kdekl import tile_clusters, tool1, tool2
from mcdiag.report import ReportConfig, build_report
from mcdiag.samplers import (
    SamplerConfig,
    independence_mh_exp,
    logistic_rwmh,
    sixmodal_mwg,
    tune_rwmh_scale,
    tv_bound_burnin,
)
from mcdiag.stopping import (
    StoppingConfig,
    confidence_region,
    ess,
    fwsr_check,
    mess,
    mess_threshold,
    sample_size_projection,
)
from mcdiag.targets import (
    find_logistic_mode,
    logistic_log_posterior,
    logistic_log_posterior_grad,
    sixmodal_modes,
    sixmodal_target,
    synth_logistic_data,
)
from mcdiag.variance import CovarianceEstimate, batch_means_var, spectral_var_zero


def _criterion(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num:02d}: {detail}"


def test_c01_mess_threshold_golden_values():
    targets = [
        ((1, 0.05, 0.01), 153_658.0),
        ((10, 0.05, 0.02), 55_191.0),
        ((10, 0.05, 0.01), 220_766.0),
    ]
    values = [mess_threshold(*args) for args, _ in targets]
    errors = [abs(v - want) / want for v, (_, want) in zip(values, targets)]
    _criterion(
        1,
        max(errors) <= 1e-3,
        f"thresholds {[round(v, 1) for v in values]},"
        f" max relative error {max(errors):.2e}",
    )


def test_c02_run_length_nmin_golden():
    value = rl_nmin(0.5, 0.005, 0.95)
    _criterion(2, value == 38_415, f"n_min(0.5, 0.005, 0.95) = {value}")


def test_c03_tv_bound_burnin_golden():
    value = tv_bound_burnin(0.5, 0.01)
    _criterion(3, value == 7, f"burn-in bound (0.5, 0.01) = {value}")


def test_c04_sample_size_projection_golden():
    value = sample_size_projection(15_000, 0.112, 0.01)
    _criterion(4, value == 1_881_600, f"projection(15000, 0.112, 0.01) = {value}")


def test_c05_fwsr_terminates_in_band():
    config = StoppingConfig(rule="fwsr", epsilon=0.005, alpha=0.05, min_n=10_000)
    n_max = 700_000
    n_stars, mean_hits = [], 0
    for seed in range(20):
        chain, _ = independence_mh_exp(
            SamplerConfig(n_iterations=n_max, initial=1.0, seed=1000 + seed, theta=0.5)
        )
        x = chain.coordinate(1)
        n_star = None
        for k in range(10_000, n_max + 1, 5_000):
            prefix = x[:k]
            if fwsr_check(prefix, batch_means_var(prefix), config).stop:
                n_star = k
                break
        n_stars.append(n_star)
        mean_hits += n_star is not None and abs(float(np.mean(x[:n_star])) - 1.0) <= 0.01
    in_band = all(n is not None and 150_000 <= n <= 600_000 for n in n_stars)
    _criterion(
        5,
        in_band and mean_hits >= 18,
        f"n* range [{min(n_stars)}, {max(n_stars)}],"
        f" mean within 0.01 in {mean_hits}/20 runs",
    )


def test_c06_ess_contrast_between_regimes():
    n = 38_415
    ratios = []
    for seed in range(10):
        values = {}
        for theta in (0.5, 5.0):
            chain, _ = independence_mh_exp(
                SamplerConfig(n_iterations=n, initial=1.0, seed=2000 + seed, theta=theta)
            )
            x = chain.coordinate(1)
            values[theta] = ess(x, batch_means_var(x))
        ratios.append(values[0.5] / values[5.0])
    hits = sum(r >= 20.0 for r in ratios)
    _criterion(
        6,
        hits >= 9,
        f"ESS ratio range [{min(ratios):.1f}, {max(ratios):.1f}], >= 20 in {hits}/10",
    )


def test_c07_scale_reduction_contrast():
    starts = (0.5, 1.0, 2.0, 4.0)
    low_hits = high_hits = 0
    low_max, high_min = 0.0, math.inf
    for trial in range(10):
        rhat = {}
        for theta in (0.5, 5.0):
            chains = [
                independence_mh_exp(
                    SamplerConfig(n_iterations=2_000, initial=s,
                                  seed=3000 + 10 * trial + i, theta=theta)
                )[0]
                for i, s in enumerate(starts)
            ]
            rhat[theta] = psrf(chains).rhat
        low_hits += rhat[0.5] < 1.1
        high_hits += rhat[5.0] > 1.5
        low_max = max(low_max, rhat[0.5])
        high_min = min(high_min, rhat[5.0])
    _criterion(
        7,
        low_hits >= 9 and high_hits >= 9,
        f"theta=0.5 max R-hat {low_max:.4f} ({low_hits}/10 below 1.1);"
        f" theta=5 min R-hat {high_min:.2f} ({high_hits}/10 above 1.5)",
    )


def test_c08_sixmodal_two_cluster_detection():
    modes = sixmodal_modes()
    picks = (3, 3, 4, 4)
    chains = []
    for k, pick in enumerate(picks):
        chain, _ = sixmodal_mwg(
            SamplerConfig(n_iterations=12_000, initial=modes[pick - 1], seed=100 + k)
        )
        chains.append(Chain(chain.draws[::2], name=chain.name))
    result = tool1(chains, cutoff=0.06, n_draws=2_000, seed=9)
    clusters = tile_clusters(result.values, 0.06)
    _criterion(
        8,
        result.max_divergence >= 0.6 and clusters == [(1, 2), (3, 4)],
        f"max divergence {result.max_divergence:.2f}, clusters {clusters}",
    )


def test_c09_sixmodal_false_convergence_flagged():
    start = sixmodal_modes()[3]
    chains = [
        sixmodal_mwg(SamplerConfig(n_iterations=6_000, initial=start, seed=100 + k))[0]
        for k in range(4)
    ]
    rhats = [psrf(chains, coordinate=j).rhat for j in (1, 2)]
    thinned = Chain(chains[0].draws[::2], name=chains[0].name)
    result = tool2(thinned, sixmodal_target(), n_draws=2_000, seed=5)
    _criterion(
        9,
        max(rhats) < 1.1 and result.t2_star > 0.5,
        f"marginal R-hat {[round(r, 4) for r in rhats]} all below 1.1,"
        f" yet T2* = {result.t2_star:.3f}",
    )


def test_c10_algebraic_identities():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1_000):
        p = int(rng.integers(1, 6))
        n = int(rng.integers(100, 5_000))
        a = rng.standard_normal((p, p))
        b = rng.standard_normal((p, p))
        longrun = a @ a.T + 0.1 * np.eye(p)
        marginal = b @ b.T + 0.1 * np.eye(p)
        estimate = CovarianceEstimate(
            longrun=longrun, marginal=marginal, method="batch-means",
            width=1, n=n, n_batches=p + 5,
        )
        chain = Chain(np.zeros((n, p)))
        epsilon = float(rng.uniform(0.01, 0.5))
        lhs = mess(chain, estimate) / mess_threshold(p, 0.05, epsilon)
        region = confidence_region(chain, estimate, alpha=0.05)
        vol_stat = math.exp(region.log_volume / p)
        lam_root = math.exp(0.5 / p * np.linalg.slogdet(marginal)[1])
        rhs = (epsilon * lam_root / vol_stat) ** 2
        worst = max(worst, abs(lhs - rhs) / rhs)

    rng = np.random.default_rng(3)
    base = [Chain(rng.standard_normal(60)) for _ in range(4)]
    mapped = [Chain(2.7 * c.draws - 3.0, name=c.name) for c in base]
    affine_dev = abs(psrf(base).rhat - psrf(mapped).rhat)

    wide = [Chain(rng.standard_normal((80, 3))) for _ in range(4)]
    transform = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
    moved = [Chain(c.draws @ transform.T + 1.5, name=c.name) for c in wide]
    linear_dev = abs(mpsrf(wide).rhat - mpsrf(moved).rhat) / mpsrf(wide).rhat

    uni = psrf(base)
    gap = mpsrf(base).rhat - uni.rhat
    expect = uni.between_over_n / (len(base) * uni.within)
    p1_dev = abs(gap - expect)

    ok = (worst <= 1e-10 and affine_dev <= 1e-12
          and linear_dev <= 1e-10 and p1_dev <= 1e-12)
    _criterion(
        10,
        ok,
        f"rule identity worst {worst:.1e} over 1000 SPD pairs;"
        f" affine dev {affine_dev:.1e}; linear-map dev {linear_dev:.1e};"
        f" p=1 gap dev {p1_dev:.1e}",
    )


def _ar1(n: int, phi: float, seed: int) -> np.ndarray:
    e = np.random.default_rng(seed).standard_normal(n + 500)
    x = np.empty(n + 500)
    x[0] = e[0] / math.sqrt(1.0 - phi * phi)
    for t in range(1, n + 500):
        x[t] = phi * x[t - 1] + e[t]
    return x[500:]


def test_c11_longrun_variance_consistency():
    n = 1_000_000
    x = _ar1(n, 0.5, seed=2)
    bm_ar = batch_means_var(x).longrun
    sp_ar = spectral_var_zero(x).longrun
    z = np.random.default_rng(1002).standard_normal(n)
    bm_iid = batch_means_var(z).longrun
    sp_iid = spectral_var_zero(z).longrun
    ok = (abs(bm_ar - 4.0) / 4.0 <= 0.10 and abs(sp_ar - 4.0) / 4.0 <= 0.10
          and abs(bm_iid - 1.0) <= 0.05 and abs(sp_iid - 1.0) <= 0.05)
    _criterion(
        11,
        ok,
        f"AR(1): batch means {bm_ar:.3f}, spectral {sp_ar:.3f} (target 4);"
        f" iid: {bm_iid:.3f}, {sp_iid:.3f} (target 1)",
    )


def test_c12_calibration_rates():
    reps, n = 500, 10_000
    rng = np.random.default_rng(7)
    z_crit = 1.959963984540054
    geweke_hits = hw_hits = 0
    for _ in range(reps):
        x = rng.standard_normal(n)
        geweke_hits += abs(geweke(x).z) < z_crit
        result = heidelberger_welch(x)
        hw_hits += result.passed and result.discard_fraction == 0.0
    geweke_rate = geweke_hits / reps
    hw_rate = hw_hits / reps
    ok = 0.92 <= geweke_rate <= 0.98 and 0.92 <= hw_rate <= 0.98
    _criterion(
        12,
        ok,
        f"geweke {geweke_rate:.3f}, heidelberger-welch {hw_rate:.3f},"
        f" band [0.92, 0.98]",
    )


def test_c13_logistic_end_to_end():
    beta_true = (0.5, -0.5, 0.5)
    data = synth_logistic_data(200, beta_true, seed=11)
    mode = find_logistic_mode(data)
    tau, pilot_rate = tune_rwmh_scale(data, initial=mode, seed=77)

    chains, rates = [], []
    for k in range(4):
        chain, rate = logistic_rwmh(
            data,
            SamplerConfig(n_iterations=20_000, initial=mode, seed=600 + k, step_scale=tau),
        )
        chains.append(chain)
        rates.append(rate)
    rates_ok = 0.3 <= pilot_rate <= 0.5 and all(0.3 <= r <= 0.5 for r in rates)

    # per-coordinate stop on the first chain, then accuracy at the stop
    config = StoppingConfig(rule="fwsr", epsilon=0.0075, alpha=0.05, min_n=10_000)
    z_scores = []
    stops_ok = True
    for j in (1, 2, 3):
        x = chains[0].coordinate(j)
        n_star = None
        for m in range(10_000, 20_001, 2_000):
            if fwsr_check(x[:m], batch_means_var(x[:m]), config).stop:
                n_star = m
                break
        if n_star is None:
            stops_ok = False
            continue
        est = float(np.mean(x[:n_star]))
        sd = float(np.std(x[:n_star], ddof=1))
        z_scores.append(abs(est - beta_true[j - 1]) / sd)
    accuracy_ok = stops_ok and all(z < 3.0 for z in z_scores)

    thinned = [Chain(c.draws[::16], name=c.name) for c in chains]
    report = build_report(
        thinned, ("psrf", "tool1", "ci"), ReportConfig(seed=3, n_draws=2_000)
    )
    psrf_vals = [r.statistics["rhat"] for r in report.records if r.diagnostic == "psrf"]
    tool1_marginals = [
        r.statistics["max_divergence"] for r in report.records
        if r.diagnostic == "tool1" and r.target.startswith("x")
    ]
    table_ok = len(report.summary) == 3 and all(
        row["rhat"] is not None and row["half_width"] is not None
        and row["tool1"] is not None
        for row in report.summary
    )
    report_ok = (report.error_count() == 0 and max(psrf_vals) < 1.1
                 and max(tool1_marginals) < 0.06 and table_ok)

    _criterion(
        13,
        rates_ok and accuracy_ok and report_ok,
        f"acceptance {min(rates):.3f}-{max(rates):.3f},"
        f" |mean-true|/sd max {max(z_scores):.2f} at the stop,"
        f" report: R-hat max {max(psrf_vals):.4f},"
        f" marginal divergence max {max(tool1_marginals):.4f}",
    )


def test_c14_gradient_against_central_differences():
    data = synth_logistic_data(200, (0.5, -0.5, 0.5), seed=11)
    rng = np.random.default_rng(14)
    worst = 0.0
    for _ in range(100):
        beta = rng.uniform(-2.0, 2.0, 3)
        analytic = logistic_log_posterior_grad(beta, data)
        numeric = np.empty(3)
        for j in range(3):
            h = 1e-6 * (1.0 + abs(beta[j]))
            up, dn = beta.copy(), beta.copy()
            up[j] += h
            dn[j] -= h
            numeric[j] = (
                logistic_log_posterior(up, data) - logistic_log_posterior(dn, data)
            ) / (2.0 * h)
        worst = max(
            worst,
            float(np.linalg.norm(analytic - numeric) / np.linalg.norm(analytic)),
        )
    _criterion(14, worst <= 1e-6, f"worst relative gradient error {worst:.2e}")
