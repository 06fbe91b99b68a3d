"""Tests for the three bundled MCMC kernels and the analytic burn-in bound."""

import math

import numpy as np
import pytest

from mcdiag.samplers import (
    SamplerConfig,
    _accept_log_prob_exp,
    independence_mh_exp,
    logistic_rwmh,
    sixmodal_mwg,
    tune_rwmh_scale,
    tv_bound_burnin,
)
from mcdiag.targets import sixmodal_modes, synth_logistic_data


def test_config_validation():
    with pytest.raises(ValueError, match="n_iterations"):
        SamplerConfig(n_iterations=0, initial=1.0, seed=0)
    with pytest.raises(ValueError, match="theta"):
        SamplerConfig(n_iterations=10, initial=1.0, seed=0, theta=0.0)
    with pytest.raises(ValueError, match="scales"):
        SamplerConfig(n_iterations=10, initial=1.0, seed=0, scales=(0.0, 1.0))
    with pytest.raises(ValueError, match="step_scale"):
        SamplerConfig(n_iterations=10, initial=1.0, seed=0, step_scale=0.0)


def test_exp_acceptance_log_probability():
    # ratio collapses to exp((theta-1)(y-x))
    assert _accept_log_prob_exp(1.0, 2.0, 0.5) == pytest.approx(-0.5)
    assert _accept_log_prob_exp(2.0, 0.5, 0.5) == 0.0
    assert _accept_log_prob_exp(0.3, 5.0, 1.0) == 0.0


def test_exp_sampler_theta_one_is_iid_target():
    # proposals match the target, so every draw is accepted verbatim
    config = SamplerConfig(n_iterations=50_000, initial=1.0, seed=42, theta=1.0)
    chain, rate = independence_mh_exp(config)
    assert rate == 1.0
    expect = np.random.default_rng(42).exponential(1.0, 50_000)
    assert np.array_equal(chain.draws[:, 0], expect)
    assert abs(chain.draws.mean() - 1.0) < 4 / math.sqrt(50_000)


def test_exp_sampler_geometric_regime_mean():
    config = SamplerConfig(n_iterations=100_000, initial=1.0, seed=5, theta=0.5)
    chain, rate = independence_mh_exp(config)
    assert 0 < rate < 1
    assert np.all(chain.draws > 0)
    assert abs(chain.draws.mean() - 1.0) < 0.05
    assert chain.name == "exp-indep-theta0.5-seed5"


def test_exp_sampler_light_proposals_stick_low():
    # theta > 1 proposes from a lighter tail; the chain cannot hold the
    # deep right tail and the long-run mean sags below 1
    config = SamplerConfig(n_iterations=300_000, initial=0.1, seed=1, theta=5.0)
    chain, rate = independence_mh_exp(config)
    assert rate < 0.5
    assert 0.7 < chain.draws.mean() < 0.85


def test_exp_sampler_determinism_and_errors():
    config = SamplerConfig(n_iterations=100, initial=1.0, seed=9, theta=0.7)
    a, _ = independence_mh_exp(config)
    b, _ = independence_mh_exp(config)
    assert np.array_equal(a.draws, b.draws)
    with pytest.raises(ValueError, match="needs theta"):
        independence_mh_exp(SamplerConfig(n_iterations=10, initial=1.0, seed=0))
    with pytest.raises(ValueError, match="positive"):
        independence_mh_exp(
            SamplerConfig(n_iterations=10, initial=0.0, seed=0, theta=0.5)
        )


def test_tv_bound_burnin_values():
    assert tv_bound_burnin(0.5, 0.01) == 7
    assert tv_bound_burnin(0.5, 0.5) == 1
    # 0.1^2 equals 0.01 exactly; strict inequality pushes one step further
    assert tv_bound_burnin(0.9, 0.01) == 2


def test_tv_bound_burnin_monotone_in_delta():
    previous = 0
    for delta in (0.5, 0.1, 0.01, 1e-6):
        n = tv_bound_burnin(0.3, delta)
        assert n >= previous
        previous = n
    assert (1 - 0.3) ** previous < 1e-6 <= (1 - 0.3) ** (previous - 1)


def test_tv_bound_burnin_domain():
    with pytest.raises(ValueError, match="0 < theta < 1"):
        tv_bound_burnin(1.0, 0.01)
    with pytest.raises(ValueError, match="0 < theta < 1"):
        tv_bound_burnin(5.0, 0.01)
    with pytest.raises(ValueError, match="delta"):
        tv_bound_burnin(0.5, 0.0)
    with pytest.raises(ValueError, match="delta"):
        tv_bound_burnin(0.5, 1.0)


def test_sixmodal_mwg_runs_and_is_deterministic():
    start = sixmodal_modes()[3]
    config = SamplerConfig(n_iterations=5_000, initial=start, seed=12)
    chain, (acc_x, acc_y) = sixmodal_mwg(config)
    again, rates = sixmodal_mwg(config)
    assert np.array_equal(chain.draws, again.draws)
    assert rates == (acc_x, acc_y)
    assert chain.draws.shape == (5_000, 2)
    assert 0 < acc_x < 1 and 0 < acc_y < 1
    assert np.all(np.abs(chain.draws) <= 10.0)
    assert chain.name == "sixmodal-seed12"


def test_sixmodal_mwg_errors():
    with pytest.raises(ValueError, match="2-vector"):
        sixmodal_mwg(SamplerConfig(n_iterations=10, initial=(1.0,), seed=0))
    with pytest.raises(ValueError, match="zero target density"):
        sixmodal_mwg(SamplerConfig(n_iterations=10, initial=(0.0, 0.0), seed=0))


def test_sixmodal_mwg_small_steps_stay_in_basin():
    # proposal scales far below the wall spacing cannot cross a csc pole,
    # so the y coordinate never leaves its starting strip
    start = sixmodal_modes()[3]  # (0.5, pi/2)
    config = SamplerConfig(
        n_iterations=30_000, initial=start, seed=7, scales=(0.01, 0.01)
    )
    chain, _ = sixmodal_mwg(config)
    y = chain.draws[:, 1]
    assert np.all((y > 0.0) & (y < math.pi))


def test_logistic_rwmh_runs_and_is_deterministic():
    data = synth_logistic_data(200, (0.5, -0.5, 0.5), seed=11)
    config = SamplerConfig(n_iterations=2_000, initial=np.zeros(3), seed=3)
    chain, rate = logistic_rwmh(data, config)
    again, rate2 = logistic_rwmh(data, config)
    assert np.array_equal(chain.draws, again.draws)
    assert rate == rate2
    assert chain.draws.shape == (2_000, 3)
    assert 0 < rate < 1
    assert not np.array_equal(chain.draws[0], chain.draws[-1])
    assert chain.name == "logistic-rwmh-seed3"


def test_logistic_rwmh_tiny_steps_accept_everything():
    data = synth_logistic_data(100, (0.5, -0.5), seed=2)
    config = SamplerConfig(
        n_iterations=1_000, initial=np.zeros(2), seed=4, step_scale=1e-8
    )
    _, rate = logistic_rwmh(data, config)
    assert rate > 0.99


def test_logistic_rwmh_precondition_options():
    data = synth_logistic_data(100, (0.5, -0.5), seed=2)
    config = SamplerConfig(n_iterations=500, initial=np.zeros(2), seed=4)
    chain_id, _ = logistic_rwmh(data, config, precondition="identity")
    chain_mx, _ = logistic_rwmh(data, config, precondition=np.eye(2))
    assert np.array_equal(chain_id.draws, chain_mx.draws)
    with pytest.raises(ValueError, match="precondition must be"):
        logistic_rwmh(data, config, precondition="wrong")
    with pytest.raises(ValueError, match="must be 2x2"):
        logistic_rwmh(data, config, precondition=np.eye(3))
    with pytest.raises(ValueError, match="positive definite"):
        logistic_rwmh(data, config, precondition=-np.eye(2))


def test_logistic_rwmh_errors():
    data = synth_logistic_data(50, (0.5, -0.5), seed=2)
    with pytest.raises(ValueError, match="dimension 3"):
        logistic_rwmh(
            data, SamplerConfig(n_iterations=10, initial=np.zeros(3), seed=0)
        )
    with np.errstate(invalid="ignore", over="ignore"):
        with pytest.raises(ValueError, match="non-finite log posterior"):
            logistic_rwmh(
                data,
                SamplerConfig(n_iterations=10, initial=np.array([np.inf, 0.0]), seed=0),
            )


def test_tune_rwmh_scale_lands_in_band():
    data = synth_logistic_data(200, (0.5, -0.5, 0.5), seed=11)
    from mcdiag.targets import find_logistic_mode

    mode = find_logistic_mode(data)
    tau, rate = tune_rwmh_scale(data, mode, seed=77)
    assert 0.3 <= rate <= 0.5
    assert tau == pytest.approx(1.3741, abs=2e-4)
    with pytest.raises(ValueError, match="band"):
        tune_rwmh_scale(data, mode, seed=77, target=(0.5, 0.3))
