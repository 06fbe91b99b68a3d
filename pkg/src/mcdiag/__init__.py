"""Convergence diagnostics and stopping rules for Markov chain Monte Carlo.

The package splits into chain containers (chain), long-run variance
estimation (variance), sequential stopping rules and effective sample size
(stopping), potential scale reduction factors (gelman_rubin), single-chain
diagnostics (classic), kernel-density divergence tools (kdekl), target
densities (targets), reference samplers (samplers), file formats (io),
figures (plots), and the combined report (report). The mcdiag console
script in cli drives all of it.
"""

from .chain import (
    Chain,
    ChainSet,
    FunctionSpec,
    ScalarSeries,
    apply_function,
    drop_burnin,
    quantile,
    running_mean,
    summarize,
)
from .classic import (
    GewekeResult,
    HwResult,
    RlResult,
    cramer_von_mises_cdf,
    geweke,
    heidelberger_welch,
    raftery_lewis,
    rl_nmin,
)
from .gelman_rubin import MpsrfResult, PsrfResult, mpsrf, psrf, psrf_series
from .kdekl import (
    KdeModel,
    KlEstimate,
    Tool1Result,
    Tool2Result,
    adaptive_kde_fit,
    calibrate_cutoff,
    kde_sample,
    kl_estimate,
    tile_clusters,
    tool1,
    tool2,
)
from .samplers import (
    SamplerConfig,
    independence_mh_exp,
    logistic_rwmh,
    sixmodal_mwg,
    tune_rwmh_scale,
    tv_bound_burnin,
)
from .stopping import (
    ConfidenceRegion,
    StoppingConfig,
    StoppingVerdict,
    confidence_interval,
    confidence_region,
    ess,
    fixed_volume_check,
    fwsr_check,
    mess,
    mess_rule_check,
    mess_threshold,
    multivariate_relsd_check,
    relative_fwsr_check,
    sample_size_projection,
)
from .targets import (
    LogisticData,
    TargetModel,
    find_logistic_mode,
    find_mode,
    logistic_log_posterior,
    sixmodal_modes,
    sixmodal_target,
    synth_logistic_data,
)
from .variance import (
    CovarianceEstimate,
    VarianceEstimate,
    autocorrelations,
    batch_means_var,
    multivariate_batch_means,
    spectral_var_zero,
)

__version__ = "0.1.0"

__all__ = [
    "Chain",
    "ChainSet",
    "FunctionSpec",
    "ScalarSeries",
    "apply_function",
    "drop_burnin",
    "quantile",
    "running_mean",
    "summarize",
    "GewekeResult",
    "HwResult",
    "RlResult",
    "cramer_von_mises_cdf",
    "geweke",
    "heidelberger_welch",
    "raftery_lewis",
    "rl_nmin",
    "MpsrfResult",
    "PsrfResult",
    "mpsrf",
    "psrf",
    "psrf_series",
    "KdeModel",
    "KlEstimate",
    "Tool1Result",
    "Tool2Result",
    "adaptive_kde_fit",
    "calibrate_cutoff",
    "kde_sample",
    "kl_estimate",
    "tile_clusters",
    "tool1",
    "tool2",
    "SamplerConfig",
    "independence_mh_exp",
    "logistic_rwmh",
    "sixmodal_mwg",
    "tune_rwmh_scale",
    "tv_bound_burnin",
    "ConfidenceRegion",
    "StoppingConfig",
    "StoppingVerdict",
    "confidence_interval",
    "confidence_region",
    "ess",
    "fixed_volume_check",
    "fwsr_check",
    "mess",
    "mess_rule_check",
    "mess_threshold",
    "multivariate_relsd_check",
    "relative_fwsr_check",
    "sample_size_projection",
    "LogisticData",
    "TargetModel",
    "find_logistic_mode",
    "find_mode",
    "logistic_log_posterior",
    "sixmodal_modes",
    "sixmodal_target",
    "synth_logistic_data",
    "CovarianceEstimate",
    "VarianceEstimate",
    "autocorrelations",
    "batch_means_var",
    "multivariate_batch_means",
    "spectral_var_zero",
    "__version__",
]
