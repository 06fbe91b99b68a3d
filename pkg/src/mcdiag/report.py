"""Diagnostic report assembly.

A report is a flat list of records, one per requested diagnostic per
target (coordinate, chain, or quantile), each carrying its inputs, its
statistics, a verdict, and the wall time it took. Diagnostics that cannot
run on the supplied chains still produce a record, with a structured error
instead of statistics, so the record count always equals the request
count. Records for independent targets are computed concurrently; the
record order is fixed by the request, not by completion.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .chain import Chain
from .classic import geweke, heidelberger_welch, raftery_lewis
from .gelman_rubin import mpsrf, psrf
from .kdekl import tool1, tool2
from .stopping import StoppingConfig, confidence_interval, ess, mess, mess_threshold
from .targets import TargetModel
from .variance import batch_means_var, multivariate_batch_means, spectral_var_zero

__all__ = [
    "DIAGNOSTICS",
    "ReportConfig",
    "DiagnosticRecord",
    "DiagnosticReport",
    "run_diagnostics",
    "build_report",
    "summary_table",
    "render_text",
]

DIAGNOSTICS = (
    "psrf",
    "mpsrf",
    "geweke",
    "heidel",
    "raftery",
    "ess",
    "mess",
    "ci",
    "tool1",
    "tool2",
)

CONVERGED = "converged"
NONCONVERGED = "non-converged"
NONE = "none"
ERROR = "error"

# exception types that become structured error records instead of crashing
_RECORDABLE = (ValueError, ZeroDivisionError, np.linalg.LinAlgError, FloatingPointError)


@dataclass(frozen=True)
class ReportConfig:
    """Shared diagnostic settings.

    epsilon feeds the half-width target, the Raftery-Lewis precision, and
    the multivariate ESS threshold; rhat_cutoff is the conventional 1.1
    convergence line. q_values fans the Raftery-Lewis diagnostic out over
    quantiles. target enables the normalizing-constant check and must be a
    bounded density of dimension at most 2.
    """

    alpha: float = 0.05
    epsilon: float = 0.005
    cutoff: float = 0.06
    q_values: tuple[float, ...] = (0.5,)
    estimator: str = "batch-means"
    seed: int = 0
    n_draws: int = 10_000
    sensitivity: float = 0.5
    rhat_cutoff: float = 1.1
    rl_s: float = 0.95
    target: TargetModel | None = None
    max_workers: int | None = None

    def __post_init__(self):
        if self.estimator not in ("batch-means", "spectral"):
            raise ValueError('estimator must be "batch-means" or "spectral"')
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        for q in self.q_values:
            if not 0 < q < 1:
                raise ValueError("q values must lie in (0, 1)")


@dataclass
class DiagnosticRecord:
    diagnostic: str
    target: str
    inputs: dict
    statistics: dict
    verdict: str
    runtime_s: float = 0.0
    error: str | None = None


@dataclass
class DiagnosticReport:
    records: list[DiagnosticRecord]
    tool_versions: dict
    input_digests: dict
    config: dict
    created: str
    summary: list = field(default_factory=list)
    figures: list = field(default_factory=list)

    def error_count(self) -> int:
        return sum(1 for r in self.records if r.error is not None)

    def nonconverged_count(self) -> int:
        return sum(1 for r in self.records if r.verdict == NONCONVERGED)

    def to_payload(self) -> dict:
        return _jsonable(
            {
                "schema": "mcdiag-report/1",
                "created": self.created,
                "tool_versions": self.tool_versions,
                "inputs": self.input_digests,
                "config": self.config,
                "records": [vars(r) for r in self.records],
                "summary_table": self.summary,
                "figures": self.figures,
            }
        )

    def stable_payload(self) -> dict:
        """The report minus wall-clock fields, for run-to-run comparison."""
        payload = self.to_payload()
        payload.pop("created")
        for record in payload["records"]:
            record.pop("runtime_s")
        return payload


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        out = float(value)
        return out if math.isfinite(out) else repr(out)
    return value


def _univariate_estimate(series: np.ndarray, config: ReportConfig):
    if config.estimator == "batch-means":
        return batch_means_var(series)
    return spectral_var_zero(series)


def _coordinate_seed(seed: int, coordinate: int) -> int:
    # coordinate 0 is the joint comparison, j >= 1 the marginals
    return int(np.random.SeedSequence(entropy=int(seed), spawn_key=(coordinate,)).generate_state(1)[0])


def _verdict(flag: bool) -> str:
    return CONVERGED if flag else NONCONVERGED


def _task_psrf(chains, j, config):
    result = psrf(chains, coordinate=j)
    return (
        {"rhat": result.rhat, "within": result.within, "between_over_n": result.between_over_n},
        _verdict(result.rhat < config.rhat_cutoff),
    )


def _task_mpsrf(chains, config):
    result = mpsrf(chains)
    return (
        {"rhat": result.rhat, "top_eigenvalue": result.top_eigenvalue},
        _verdict(result.rhat < config.rhat_cutoff),
    )


def _task_geweke(chain, j, config):
    from scipy import stats

    result = geweke(chain.coordinate(j))
    z_crit = float(stats.norm.ppf(1.0 - config.alpha / 2.0))
    stats_out = {
        "z": result.z,
        "mean_head": result.mean_head,
        "mean_tail": result.mean_tail,
        "z_critical": z_crit,
    }
    return stats_out, _verdict(abs(result.z) < z_crit)


def _task_heidel(chain, j, config):
    result = heidelberger_welch(chain.coordinate(j), level=config.alpha)
    stats_out = {
        "passed": result.passed,
        "discard_fraction": result.discard_fraction,
        "cvm_statistic": result.cvm_statistic,
        "p_value": result.p_value,
        "n_used": result.n_used,
    }
    return stats_out, _verdict(result.passed)


def _task_raftery(chain, j, q, config):
    result = raftery_lewis(chain.coordinate(j), q=q, eps=config.epsilon, s=config.rl_s)
    stats_out = {
        "thinning": result.thinning,
        "burn_in": result.burn_in,
        "run_length": result.run_length,
        "n_min": result.n_min,
        "dependence_factor": result.dependence_factor,
    }
    return stats_out, NONE


def _task_ess(chain, j, config):
    series = chain.coordinate(j)
    estimate = _univariate_estimate(series, config)
    value = ess(series, estimate)
    return {"ess": value, "longrun": estimate.longrun, "marginal": estimate.marginal}, NONE


def _task_mess(chain, config):
    estimate = multivariate_batch_means(chain)
    value = mess(chain, estimate)
    threshold = mess_threshold(chain.p, config.alpha, config.epsilon)
    return {"mess": value, "threshold": threshold}, _verdict(value >= threshold)


def _task_ci(chain, j, config):
    series = chain.coordinate(j)
    estimate = _univariate_estimate(series, config)
    stop_config = StoppingConfig(rule="fwsr", epsilon=config.epsilon, alpha=config.alpha)
    mean, half_width = confidence_interval(series, estimate, stop_config)
    stats_out = {
        "mean": mean,
        "half_width": half_width,
        "longrun": estimate.longrun,
        "within_target": half_width <= config.epsilon,
    }
    return stats_out, NONE


def _task_tool1(chains, j, config):
    """j = 0 compares the joint densities, j >= 1 one marginal."""
    if j == 0:
        samples = list(chains)
    else:
        samples = [chain.coordinate(j) for chain in chains]
    result = tool1(
        samples,
        cutoff=config.cutoff,
        n_draws=config.n_draws,
        seed=_coordinate_seed(config.seed, j),
        sensitivity=config.sensitivity,
    )
    stats_out = {
        "max_divergence": result.max_divergence,
        "cutoff": result.cutoff,
        "values": result.values,
    }
    return stats_out, _verdict(result.passed)


def _task_tool2(chain, config):
    if config.target is None:
        raise ValueError("tool2 needs a target density (--target)")
    result = tool2(
        chain,
        config.target,
        n_draws=config.n_draws,
        seed=config.seed,
        sensitivity=config.sensitivity,
    )
    stats_out = {
        "c_hat": result.c_hat,
        "c_star": result.c_star,
        "t2_star": result.t2_star,
        "threshold": result.threshold,
    }
    return stats_out, _verdict(result.captured)


def _build_tasks(chains: list[Chain], diagnostics, config: ReportConfig) -> list[DiagnosticRecord | tuple]:
    """Expand the request into (record-shell, callable) pairs, in report order."""
    m = len(chains)
    p = chains[0].p
    coords = range(1, p + 1)
    tasks = []

    def add(diagnostic, target, inputs, fn):
        tasks.append((DiagnosticRecord(diagnostic, target, inputs, {}, NONE), fn))

    for diagnostic in diagnostics:
        if diagnostic == "psrf":
            for j in coords:
                add("psrf", f"x{j}", {"chains": m, "coordinate": j},
                    fn=lambda j=j: _task_psrf(chains, j, config))
        elif diagnostic == "mpsrf":
            add("mpsrf", "joint", {"chains": m, "p": p}, fn=lambda: _task_mpsrf(chains, config))
        elif diagnostic == "geweke":
            for chain in chains:
                for j in coords:
                    add("geweke", f"{chain.name} x{j}", {"chain": chain.name, "coordinate": j},
                        fn=lambda c=chain, j=j: _task_geweke(c, j, config))
        elif diagnostic == "heidel":
            for chain in chains:
                for j in coords:
                    add("heidel", f"{chain.name} x{j}", {"chain": chain.name, "coordinate": j},
                        fn=lambda c=chain, j=j: _task_heidel(c, j, config))
        elif diagnostic == "raftery":
            for chain in chains:
                for j in coords:
                    for q in config.q_values:
                        add("raftery", f"{chain.name} x{j} q={q:g}",
                            {"chain": chain.name, "coordinate": j, "q": q},
                            fn=lambda c=chain, j=j, q=q: _task_raftery(c, j, q, config))
        elif diagnostic == "ess":
            for chain in chains:
                for j in coords:
                    add("ess", f"{chain.name} x{j}",
                        {"chain": chain.name, "coordinate": j, "estimator": config.estimator},
                        fn=lambda c=chain, j=j: _task_ess(c, j, config))
        elif diagnostic == "mess":
            for chain in chains:
                add("mess", chain.name, {"chain": chain.name, "p": p},
                    fn=lambda c=chain: _task_mess(c, config))
        elif diagnostic == "ci":
            for chain in chains:
                for j in coords:
                    add("ci", f"{chain.name} x{j}",
                        {"chain": chain.name, "coordinate": j, "estimator": config.estimator,
                         "alpha": config.alpha},
                        fn=lambda c=chain, j=j: _task_ci(c, j, config))
        elif diagnostic == "tool1":
            for j in coords:
                add("tool1", f"x{j}", {"chains": m, "coordinate": j},
                    fn=lambda j=j: _task_tool1(chains, j, config))
            if p > 1:
                add("tool1", "joint", {"chains": m, "p": p},
                    fn=lambda: _task_tool1(chains, 0, config))
        elif diagnostic == "tool2":
            for chain in chains:
                add("tool2", chain.name, {"chain": chain.name, "p": p},
                    fn=lambda c=chain: _task_tool2(c, config))
        else:
            raise ValueError(f"unknown diagnostic {diagnostic!r}, expected one of {DIAGNOSTICS}")
    return tasks


def _run_task(shell_fn) -> DiagnosticRecord:
    record, fn = shell_fn
    start = time.perf_counter()
    try:
        record.statistics, record.verdict = fn()
    except _RECORDABLE as exc:
        record.verdict = ERROR
        record.error = str(exc)
    record.runtime_s = time.perf_counter() - start
    return record


def run_diagnostics(chains, diagnostics, config: ReportConfig | None = None) -> list[DiagnosticRecord]:
    """Run the requested diagnostics over all applicable targets.

    chains is a non-empty list of equal-dimension Chain objects. Returns
    one record per diagnostic per target, in a fixed fan-out order.
    Diagnostics that cannot run (wrong chain count, wrong dimension,
    missing target) yield error records rather than exceptions.
    """
    config = config or ReportConfig()
    chains = list(chains)
    if not chains:
        raise ValueError("need at least one chain")
    dims = {chain.p for chain in chains}
    if len(dims) != 1:
        raise ValueError("all chains must share a dimension")
    tasks = _build_tasks(chains, diagnostics, config)
    if len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=config.max_workers or 4) as pool:
        return list(pool.map(_run_task, tasks))


def build_report(
    chains,
    diagnostics,
    config: ReportConfig | None = None,
    input_files=None,
) -> DiagnosticReport:
    """Run diagnostics and wrap them with provenance into a report."""
    from . import io as io_mod

    config = config or ReportConfig()
    records = run_diagnostics(chains, diagnostics, config)
    versions = {"mcdiag": __version__}
    for module_name in ("numpy", "scipy", "matplotlib"):
        try:
            module = __import__(module_name)
            versions[module_name] = getattr(module, "__version__", "unknown")
        except ImportError:
            pass
    digests = {}
    for path in input_files or []:
        digests[str(path)] = io_mod.file_digest(path)
    config_payload = {
        "alpha": config.alpha,
        "epsilon": config.epsilon,
        "cutoff": config.cutoff,
        "q_values": list(config.q_values),
        "estimator": config.estimator,
        "seed": config.seed,
        "n_draws": config.n_draws,
        "sensitivity": config.sensitivity,
        "rhat_cutoff": config.rhat_cutoff,
        "target": config.target.name if config.target is not None else None,
    }
    report = DiagnosticReport(
        records=records,
        tool_versions=versions,
        input_digests=digests,
        config=config_payload,
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    report.summary = summary_table(report, chains[0].p)
    return report


def summary_table(report: DiagnosticReport, p: int) -> list[dict]:
    """Per-variable summary rows: R-hat, largest half-width, marginal divergence.

    Mirrors the layout variable / R-hat / half-width / Tool 1; cells stay
    None when the corresponding diagnostic was not requested or errored.
    """
    rows = []
    for j in range(1, p + 1):
        label = f"x{j}"
        rhat = half_width = divergence = None
        for record in report.records:
            if record.error is not None:
                continue
            if record.diagnostic == "psrf" and record.inputs.get("coordinate") == j:
                rhat = record.statistics["rhat"]
            elif record.diagnostic == "ci" and record.inputs.get("coordinate") == j:
                value = record.statistics["half_width"]
                half_width = value if half_width is None else max(half_width, value)
            elif record.diagnostic == "tool1" and record.inputs.get("coordinate") == j:
                divergence = record.statistics["max_divergence"]
        rows.append(
            {"variable": label, "rhat": rhat, "half_width": half_width, "tool1": divergence}
        )
    return rows


def _format_cell(value, digits=3) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def render_text(report: DiagnosticReport) -> str:
    """Human-readable report: record table plus the per-variable summary."""
    lines = []
    lines.append("mcdiag diagnostic report")
    lines.append(f"created: {report.created}")
    for name, version in sorted(report.tool_versions.items()):
        lines.append(f"  {name} {version}")
    if report.input_digests:
        lines.append("inputs:")
        for path, digest in report.input_digests.items():
            lines.append(f"  {path} sha256={digest[:16]}")
    lines.append("")
    lines.append(f"records: {len(report.records)}")
    for record in report.records:
        if record.error is not None:
            lines.append(f"  [{record.diagnostic}] {record.target}: ERROR {record.error}")
            continue
        stats = ", ".join(
            f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}"
            for key, value in record.statistics.items()
            if not isinstance(value, (list, np.ndarray))
        )
        verdict = "" if record.verdict == NONE else f" -> {record.verdict}"
        lines.append(f"  [{record.diagnostic}] {record.target}: {stats}{verdict}")
    if report.summary:
        lines.append("")
        lines.append(f"{'variable':<12}{'R-hat':>10}{'half-width':>14}{'tool1':>10}")
        for row in report.summary:
            lines.append(
                f"{row['variable']:<12}"
                f"{_format_cell(row['rhat']):>10}"
                f"{_format_cell(row['half_width']):>14}"
                f"{_format_cell(row['tool1']):>10}"
            )
    nonconverged = report.nonconverged_count()
    errors = report.error_count()
    lines.append("")
    lines.append(f"non-converged verdicts: {nonconverged}, errors: {errors}")
    return "\n".join(lines) + "\n"
