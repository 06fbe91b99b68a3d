"""The mcdiag command line.

Five subcommands: simulate writes chain files from the reference samplers,
diagnose runs a chosen diagnostic set over chain files, stop-check replays
a stopping rule on growing prefixes, plot emits single figures, and report
runs the full applicable battery plus figures in one pass.

Exit codes: 0 success, 1 operational error (bad flags, unreadable files,
incompatible diagnostic selections), 2 when --fail-on-nonconverged is set
and any verdict came back non-converged.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .chain import Chain, drop_burnin
from .classic import rl_nmin
from .io import (
    file_digest,
    load_chain_file,
    save_chain_file,
    save_logistic_data,
    save_manifest,
)
from .report import (
    DIAGNOSTICS,
    ReportConfig,
    build_report,
    render_text,
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
    RULES,
    StoppingConfig,
    fixed_volume_check,
    fwsr_check,
    mess_rule_check,
    multivariate_relsd_check,
    relative_fwsr_check,
)
from .targets import find_logistic_mode, sixmodal_modes, sixmodal_target, synth_logistic_data
from .variance import batch_means_var, multivariate_batch_means, spectral_var_zero

__all__ = ["main"]

_UNIVARIATE_RULES = ("fwsr", "relative-magnitude", "relative-sd")


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2; this CLI reserves 2 for
    non-convergence, so usage errors exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _spawn_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(key)).generate_state(1)[0])


def _parse_float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_q_list(text: str) -> list[float]:
    """Quantile lists: '0.1,0.5' or the range form '0.1..0.9' (step 0.1)."""
    if ".." in text:
        start_text, end_text = text.split("..", maxsplit=1)
        start, end = float(start_text), float(end_text)
        if end < start:
            raise ValueError(f"empty quantile range {text!r}")
        count = int(round((end - start) / 0.1)) + 1
        return [round(start + 0.1 * k, 10) for k in range(count)]
    return _parse_float_list(text)


def _load_chains(paths, burnin: int, coords=None) -> list[Chain]:
    chains = []
    for path in paths:
        chain = load_chain_file(path)
        chain = drop_burnin(chain, burnin)
        if coords:
            for c in coords:
                if not 1 <= c <= chain.p:
                    raise ValueError(f"coordinate {c} out of range for {path} (p={chain.p})")
            chain = Chain(chain.draws[:, [c - 1 for c in coords]], name=chain.name)
        chains.append(chain)
    return chains


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------- simulate


def _simulate_exp_indep(args, chain_seeds):
    x0 = _parse_float_list(args.x0)
    if len(x0) == 1:
        x0 = x0 * args.chains
    if len(x0) != args.chains:
        raise ValueError(f"--x0 needs 1 or {args.chains} values, got {len(x0)}")
    chains, rates = [], []
    for k in range(args.chains):
        config = SamplerConfig(n_iterations=args.n, initial=x0[k], seed=chain_seeds[k], theta=args.theta)
        chain, rate = independence_mh_exp(config)
        chains.append(chain)
        rates.append(rate)
    extra = {"theta": args.theta, "x0": x0}
    if args.theta < 1:
        extra["suggested_burnin"] = tv_bound_burnin(args.theta, 0.01)
    return chains, rates, extra


def _simulate_sixmodal(args, chain_seeds):
    modes = sixmodal_modes()
    if args.modes:
        picks = _parse_int_list(args.modes)
        if len(picks) != args.chains:
            raise ValueError(f"--modes needs {args.chains} entries, got {len(picks)}")
    elif args.init_mode == "same":
        picks = [4] * args.chains
    else:
        picks = [(k % 6) + 1 for k in range(args.chains)]
    for pick in picks:
        if not 1 <= pick <= 6:
            raise ValueError(f"mode index {pick} out of range 1..6")
    chains, rates = [], []
    for k in range(args.chains):
        start = modes[picks[k] - 1]
        config = SamplerConfig(n_iterations=args.n, initial=start, seed=chain_seeds[k])
        chain, rate = sixmodal_mwg(config)
        chains.append(chain)
        rates.append(list(rate))
    extra = {"init_mode": args.init_mode, "mode_indices": picks,
             "starts": [list(map(float, modes[p - 1])) for p in picks]}
    return chains, rates, extra


def _simulate_logistic(args, chain_seeds, out_dir):
    if args.beta_true:
        beta_true = _parse_float_list(args.beta_true)
        if len(beta_true) != args.dim:
            raise ValueError(f"--beta-true needs {args.dim} values, got {len(beta_true)}")
    else:
        beta_true = [0.5 * (-1.0) ** j for j in range(args.dim)]
    data = synth_logistic_data(args.n_obs, beta_true, seed=_spawn_seed(args.seed, 0))
    data_path = os.path.join(out_dir, "data.csv")
    save_logistic_data(data, data_path)
    start = find_logistic_mode(data, args.prior_sd) if args.start == "mode" else np.zeros(args.dim)
    if args.step_scale is not None:
        tau, pilot_rate = args.step_scale, None
    else:
        tau, pilot_rate = tune_rwmh_scale(data, start, seed=_spawn_seed(args.seed, 500_000),
                                          prior_sd=args.prior_sd)
    chains, rates = [], []
    for k in range(args.chains):
        config = SamplerConfig(n_iterations=args.n, initial=start, seed=chain_seeds[k], step_scale=tau)
        chain, rate = logistic_rwmh(data, config, prior_sd=args.prior_sd)
        chains.append(chain)
        rates.append(rate)
    extra = {
        "n_obs": args.n_obs,
        "dim": args.dim,
        "beta_true": beta_true,
        "prior_sd": args.prior_sd,
        "start": args.start,
        "start_point": [float(v) for v in np.asarray(start)],
        "step_scale": tau,
        "pilot_acceptance": pilot_rate,
        "data_file": "data.csv",
    }
    return chains, rates, extra


def cmd_simulate(args) -> int:
    out_dir = _ensure_out(args.out)
    chain_seeds = [_spawn_seed(args.seed, k + 1) for k in range(args.chains)]
    if args.example == "exp-indep":
        chains, rates, extra = _simulate_exp_indep(args, chain_seeds)
    elif args.example == "sixmodal":
        chains, rates, extra = _simulate_sixmodal(args, chain_seeds)
    else:
        chains, rates, extra = _simulate_logistic(args, chain_seeds, out_dir)
    files = []
    for k, chain in enumerate(chains, start=1):
        name = f"chain-{k}.csv"
        save_chain_file(chain, os.path.join(out_dir, name))
        files.append(name)
    manifest = {
        "example": args.example,
        "n": args.n,
        "chains": args.chains,
        "seed": args.seed,
        "chain_seeds": chain_seeds,
        "chain_files": files,
        "acceptance_rates": rates,
        "mcdiag_version": __version__,
        "parameters": extra,
    }
    save_manifest(os.path.join(out_dir, "manifest.json"), manifest)
    print(f"wrote {len(files)} chain file(s) and manifest.json to {out_dir}")
    return 0


# ---------------------------------------------------------------- diagnose


def _report_config(args, q_values=None) -> ReportConfig:
    target = sixmodal_target() if getattr(args, "target", None) == "sixmodal" else None
    return ReportConfig(
        alpha=args.alpha,
        epsilon=args.epsilon,
        cutoff=args.cutoff,
        q_values=tuple(q_values or (0.5,)),
        estimator=args.estimator,
        seed=args.seed,
        n_draws=args.n_draws,
        target=target,
    )


def _write_report(report, out_dir) -> None:
    import json

    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as handle:
        json.dump(report.to_payload(), handle, indent=2)
        handle.write("\n")
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as handle:
        handle.write(render_text(report))


def _report_exit_code(report, fail_on_nonconverged: bool) -> int:
    if report.error_count() > 0:
        return 1
    if fail_on_nonconverged and report.nonconverged_count() > 0:
        return 2
    return 0


def cmd_diagnose(args) -> int:
    out_dir = _ensure_out(args.out)
    diagnostics = [d.strip() for d in args.diag.split(",") if d.strip()]
    for d in diagnostics:
        if d not in DIAGNOSTICS:
            raise ValueError(f"unknown diagnostic {d!r}, expected one of {DIAGNOSTICS}")
    q_values = _parse_q_list(args.q) if args.q else None
    coords = _parse_int_list(args.coords) if args.coords else None
    chains = _load_chains(args.chains, args.burnin, coords)
    config = _report_config(args, q_values)
    report = build_report(chains, diagnostics, config, input_files=args.chains)
    _write_report(report, out_dir)
    print(render_text(report), end="")
    return _report_exit_code(report, args.fail_on_nonconverged)


# ---------------------------------------------------------------- stop-check


def _rule_check(rule: str):
    if rule == "fwsr":
        return fwsr_check
    if rule in ("relative-magnitude", "relative-sd"):
        return relative_fwsr_check
    if rule == "fixed-volume":
        return fixed_volume_check
    if rule == "multivariate-relative-sd":
        return multivariate_relsd_check
    return mess_rule_check


def cmd_stop_check(args) -> int:
    out_dir = _ensure_out(args.out)
    chain = drop_burnin(load_chain_file(args.chain), args.burnin)
    config = StoppingConfig(rule=args.rule, epsilon=args.epsilon, alpha=args.alpha,
                            min_n=args.min_n, quantile=args.quantile)
    univariate = args.rule in _UNIVARIATE_RULES
    if univariate and not 1 <= args.coord <= chain.p:
        raise ValueError(f"--coord {args.coord} out of range (chain has p={chain.p})")
    n = chain.n
    interval = args.check_interval or max(1, math.ceil(n / 100))
    grid = list(range(interval, n + 1, interval))
    if not grid or grid[-1] != n:
        grid.append(n)
    check = _rule_check(args.rule)
    trajectory = []
    first_stop = None
    for k in grid:
        try:
            if univariate:
                series = chain.coordinate(args.coord)[:k]
                estimate = (batch_means_var(series) if args.estimator == "batch-means"
                            else spectral_var_zero(series))
                verdict = check(series, estimate, config)
            else:
                prefix = Chain(chain.draws[:k], name=chain.name)
                estimate = multivariate_batch_means(prefix)
                verdict = check(prefix, estimate, config)
        except ValueError:
            # prefix too short for the estimator: record a gap, keep going
            trajectory.append((k, float("nan"), float("nan"), False))
            continue
        trajectory.append((k, verdict.statistic, verdict.threshold, verdict.stop))
        if verdict.stop and first_stop is None:
            first_stop = verdict
    csv_path = os.path.join(out_dir, "stop-check.csv")
    with open(csv_path, "w", encoding="utf-8") as handle:
        handle.write("n,statistic,threshold,stop\n")
        for k, stat, threshold, stop in trajectory:
            handle.write(f"{k},{stat:.17g},{threshold:.17g},{int(stop)}\n")
    payload = {
        "chain": os.fspath(args.chain),
        "chain_sha256": file_digest(args.chain),
        "rule": args.rule,
        "epsilon": args.epsilon,
        "alpha": args.alpha,
        "min_n": args.min_n,
        "check_interval": interval,
        "burnin": args.burnin,
        "coordinate": args.coord if univariate else None,
        "estimator": args.estimator if univariate else "batch-means",
        "n_available": n,
        "stopped": first_stop is not None,
        "n_star": first_stop.n if first_stop else None,
        "statistic": first_stop.statistic if first_stop else None,
        "threshold": first_stop.threshold if first_stop else None,
        "degenerate": bool(first_stop.degenerate) if first_stop else False,
        "trajectory_file": "stop-check.csv",
    }
    save_manifest(os.path.join(out_dir, "stop-check.json"), payload)
    if first_stop is not None:
        note = " (degenerate variance estimate)" if first_stop.degenerate else ""
        print(f"rule {args.rule}: stopped at n={first_stop.n}{note}")
    else:
        print(f"rule {args.rule}: not yet after n={n}")
    if args.fail_on_nonconverged and first_stop is None:
        return 2
    return 0


# ---------------------------------------------------------------- plot


def cmd_plot(args) -> int:
    from . import plots

    out_dir = _ensure_out(args.out)
    coords = _parse_int_list(args.coords) if args.coords else None
    chains = _load_chains(args.chains, args.burnin)
    p = chains[0].p
    if any(chain.p != p for chain in chains):
        raise ValueError("all chains must share a dimension")
    wanted = coords or list(range(1, p + 1))
    written = []
    if args.kind == "trace":
        for j in wanted:
            out = plots.trace_plot(chains, j, os.path.join(out_dir, f"trace-x{j}"))
            written.extend(out.values())
    elif args.kind == "acf":
        for chain in chains:
            for j in wanted:
                max_lag = args.max_lag if args.max_lag is not None else min(50, chain.n - 1)
                out = plots.acf_plot(chain, j, max_lag,
                                     os.path.join(out_dir, f"acf-{chain.name}-x{j}"))
                written.extend(out.values())
    elif args.kind == "running-mean":
        for j in wanted:
            out = plots.running_mean_plot(chains, j, os.path.join(out_dir, f"running-mean-x{j}"))
            written.extend(out.values())
    elif args.kind == "psrf":
        step = args.step or max(2, math.ceil(chains[0].n / 20))
        for j in wanted:
            out = plots.psrf_plot(chains, j, step, os.path.join(out_dir, f"psrf-x{j}"))
            written.extend(out.values())
        if p > 1:
            out = plots.psrf_plot(chains, None, step, os.path.join(out_dir, "mpsrf"))
            written.extend(out.values())
    else:  # tile
        from .kdekl import tool1

        result = tool1([c for c in chains], cutoff=args.cutoff, n_draws=args.n_draws,
                       seed=args.seed)
        out = plots.tile_plot(result.values, args.cutoff, os.path.join(out_dir, "tile"),
                              names=[c.name for c in chains])
        written.extend(out.values())
    for path in written:
        print(path)
    return 0


# ---------------------------------------------------------------- report


def cmd_report(args) -> int:
    from . import plots

    out_dir = _ensure_out(args.out)
    q_values = _parse_q_list(args.q) if args.q else None
    coords = _parse_int_list(args.coords) if args.coords else None
    chains = _load_chains(args.chains, args.burnin, coords)
    m, p, n = len(chains), chains[0].p, chains[0].n
    diagnostics = []
    if m >= 2:
        diagnostics.extend(["psrf", "mpsrf"])
    diagnostics.extend(["geweke", "heidel"])
    # the run-length diagnostic needs a pilot of n_min draws; keep only the
    # quantiles the chains are long enough for
    min_n_chain = min(chain.n for chain in chains)
    q_values = [q for q in (q_values or [0.5])
                if min_n_chain >= rl_nmin(q, args.epsilon, 0.95)]
    if q_values:
        diagnostics.append("raftery")
    diagnostics.extend(["ess", "mess", "ci"])
    if m >= 2:
        diagnostics.append("tool1")
    if getattr(args, "target", None) and p <= 2:
        diagnostics.append("tool2")
    config = _report_config(args, q_values)
    report = build_report(chains, diagnostics, config, input_files=args.chains)

    figures = []
    equal_length = len({c.n for c in chains}) == 1
    for j in range(1, p + 1):
        if equal_length:
            figures.append(plots.trace_plot(chains, j, os.path.join(out_dir, f"trace-x{j}")))
            figures.append(
                plots.running_mean_plot(chains, j, os.path.join(out_dir, f"running-mean-x{j}"))
            )
        max_lag = min(50, chains[0].n - 1)
        figures.append(
            plots.acf_plot(chains[0], j, max_lag, os.path.join(out_dir, f"acf-{chains[0].name}-x{j}"))
        )
        if m >= 2 and equal_length:
            step = max(2, math.ceil(n / 20))
            figures.append(plots.psrf_plot(chains, j, step, os.path.join(out_dir, f"psrf-x{j}")))
    joint_label = "joint" if p > 1 else "x1"
    for record in report.records:
        if record.diagnostic == "tool1" and record.target == joint_label and record.error is None:
            values = np.asarray(record.statistics["values"], dtype=float)
            figures.append(plots.tile_plot(values, config.cutoff, os.path.join(out_dir, "tile"),
                                           names=[c.name for c in chains]))
            break
    report.figures = [os.path.basename(f["figure"]) for f in figures]
    _write_report(report, out_dir)
    print(render_text(report), end="")
    print(f"report.json, report.txt, and {len(figures)} figure(s) in {out_dir}")
    return _report_exit_code(report, args.fail_on_nonconverged)


# ---------------------------------------------------------------- parser


def _add_diag_flags(parser, with_target: bool = True):
    parser.add_argument("--alpha", type=float, default=0.05, help="confidence complement")
    parser.add_argument("--epsilon", type=float, default=0.005, help="precision target")
    parser.add_argument("--cutoff", type=float, default=0.06, help="divergence cutoff")
    parser.add_argument("--q", default=None,
                        help="quantiles for the run-length diagnostic: '0.1,0.5' or '0.1..0.9'")
    parser.add_argument("--estimator", choices=["batch-means", "spectral"],
                        default="batch-means", help="long-run variance estimator")
    parser.add_argument("--n-draws", type=int, default=10_000,
                        help="Monte Carlo draws per divergence estimate")
    if with_target:
        parser.add_argument("--target", choices=["sixmodal"], default=None,
                            help="known target for the normalizing-constant check")


def build_parser() -> _Parser:
    parser = _Parser(prog="mcdiag",
                     description="Convergence diagnostics and stopping rules for MCMC output.")
    parser.add_argument("--version", action="version", version=f"mcdiag {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", parents=[], help="run a reference sampler",
                              description="Write chain files from a built-in sampler.")
    sim.add_argument("example", choices=["exp-indep", "sixmodal", "logistic-synth"])
    sim.add_argument("--n", type=int, required=True, help="iterations per chain")
    sim.add_argument("--chains", type=int, default=1, help="number of parallel chains")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=".", help="output directory")
    sim.add_argument("--theta", type=float, default=0.5, help="exp-indep proposal rate")
    sim.add_argument("--x0", default="1.0", help="exp-indep start(s), comma separated")
    sim.add_argument("--init-mode", choices=["same", "spread"], default="same",
                     help="sixmodal start placement")
    sim.add_argument("--modes", default=None, help="sixmodal mode indices, e.g. '3,3,4,4'")
    sim.add_argument("--n-obs", type=int, default=200, help="logistic-synth observations")
    sim.add_argument("--dim", type=int, default=3, help="logistic-synth dimension")
    sim.add_argument("--beta-true", default=None, help="logistic-synth truth, comma separated")
    sim.add_argument("--prior-sd", type=float, default=10.0)
    sim.add_argument("--start", choices=["mode", "zero"], default="mode")
    sim.add_argument("--step-scale", type=float, default=None,
                     help="skip tuning and use this random-walk scale")
    sim.set_defaults(func=cmd_simulate)

    diag = commands.add_parser("diagnose", help="run selected diagnostics on chain files")
    diag.add_argument("--chains", nargs="+", required=True, help="chain files")
    diag.add_argument("--diag", required=True, help=f"comma list from {','.join(DIAGNOSTICS)}")
    diag.add_argument("--coords", default=None, help="restrict to these coordinates, e.g. '1,3'")
    diag.add_argument("--burnin", type=int, default=0)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--out", default=".")
    diag.add_argument("--fail-on-nonconverged", action="store_true")
    _add_diag_flags(diag)
    diag.set_defaults(func=cmd_diagnose)

    stop = commands.add_parser("stop-check", help="replay a stopping rule on growing prefixes")
    stop.add_argument("--chain", required=True, help="chain file")
    stop.add_argument("--rule", choices=list(RULES), default="fwsr")
    stop.add_argument("--coord", type=int, default=1, help="coordinate for univariate rules")
    stop.add_argument("--epsilon", type=float, default=0.005)
    stop.add_argument("--alpha", type=float, default=0.05)
    stop.add_argument("--min-n", type=int, default=10_000)
    stop.add_argument("--check-interval", type=int, default=None,
                      help="prefix spacing; default ceil(n/100)")
    stop.add_argument("--quantile", choices=["normal", "student-t"], default="normal")
    stop.add_argument("--estimator", choices=["batch-means", "spectral"], default="batch-means")
    stop.add_argument("--burnin", type=int, default=0)
    stop.add_argument("--out", default=".")
    stop.add_argument("--fail-on-nonconverged", action="store_true",
                      help="exit 2 when the rule has not fired by the end of the chain")
    stop.set_defaults(func=cmd_stop_check)

    plot = commands.add_parser("plot", help="emit one kind of figure")
    plot.add_argument("--kind", choices=["trace", "acf", "running-mean", "psrf", "tile"],
                      required=True)
    plot.add_argument("--chains", nargs="+", required=True, help="chain files")
    plot.add_argument("--coords", default=None, help="coordinates to plot (default: all)")
    plot.add_argument("--burnin", type=int, default=0)
    plot.add_argument("--max-lag", type=int, default=None, help="acf maximum lag")
    plot.add_argument("--step", type=int, default=None, help="psrf prefix spacing")
    plot.add_argument("--cutoff", type=float, default=0.06, help="tile divergence cutoff")
    plot.add_argument("--n-draws", type=int, default=10_000)
    plot.add_argument("--seed", type=int, default=0)
    plot.add_argument("--out", default=".")
    plot.set_defaults(func=cmd_plot)

    rep = commands.add_parser("report", help="full battery: diagnostics, figures, summary table")
    rep.add_argument("--chains", nargs="+", required=True, help="chain files")
    rep.add_argument("--coords", default=None)
    rep.add_argument("--burnin", type=int, default=0)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--out", default=".")
    rep.add_argument("--fail-on-nonconverged", action="store_true")
    _add_diag_flags(rep)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"mcdiag: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
