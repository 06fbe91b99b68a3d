"""Static figure emission: trace, autocorrelation, running mean, iterative
potential scale reduction, and the pairwise-divergence tile plot.

Every plot function writes two files from one base path: an SVG figure and
a CSV holding exactly the numbers that were drawn, so downstream checks
never have to parse graphics. Figures render on the Agg backend with the
SVG date metadata and hash salt pinned, which keeps repeated runs
byte-identical.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "mcdiag"

import matplotlib.pyplot as plt
import numpy as np

from .chain import Chain
from .gelman_rubin import psrf_series
from .kdekl import tile_clusters
from .variance import autocorrelations

__all__ = [
    "trace_plot",
    "acf_plot",
    "running_mean_plot",
    "psrf_plot",
    "tile_plot",
]

PSRF_REFERENCE = 1.1


def _coordinate_columns(chains: list[Chain], coordinate: int) -> np.ndarray:
    lengths = {chain.n for chain in chains}
    if len(lengths) != 1:
        raise ValueError("overlaid chains must have equal length")
    return np.column_stack([chain.coordinate(coordinate) for chain in chains])


def _write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = np.column_stack(columns)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(f"{value:.17g}" for value in row) + "\n")


def _save(fig, base) -> dict:
    figure_path = f"{base}.svg"
    fig.savefig(figure_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return figure_path


def trace_plot(chains: list[Chain], coordinate: int, base) -> dict:
    """Time series of one coordinate, one line per chain.

    Returns {"figure": svg_path, "data": csv_path}; the CSV has an
    iteration column plus one column per chain.
    """
    values = _coordinate_columns(chains, coordinate)
    iterations = np.arange(1, values.shape[0] + 1, dtype=float)
    fig, ax = plt.subplots(figsize=(7.0, 3.0))
    for k, chain in enumerate(chains):
        ax.plot(iterations, values[:, k], linewidth=0.7, label=chain.name)
    ax.set_xlabel("iteration")
    ax.set_ylabel(f"x{coordinate}")
    ax.set_title(f"trace of x{coordinate}")
    if len(chains) > 1:
        ax.legend(fontsize="x-small")
    fig.tight_layout()
    figure_path = _save(fig, base)
    data_path = f"{base}.csv"
    _write_csv(
        data_path,
        ["iteration"] + [chain.name for chain in chains],
        [iterations] + [values[:, k] for k in range(values.shape[1])],
    )
    return {"figure": figure_path, "data": data_path}


def acf_plot(chain: Chain, coordinate: int, max_lag: int, base) -> dict:
    """Sample autocorrelations at lags 0..max_lag as vertical bars."""
    series = chain.coordinate(coordinate)
    acf = autocorrelations(series, max_lag)
    lags = np.arange(max_lag + 1, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 3.0))
    ax.vlines(lags, 0.0, acf, linewidth=1.5)
    ax.axhline(0.0, color="black", linewidth=0.6)
    ax.set_xlabel("lag")
    ax.set_ylabel("autocorrelation")
    ax.set_title(f"autocorrelation of x{coordinate}, {chain.name}")
    fig.tight_layout()
    figure_path = _save(fig, base)
    data_path = f"{base}.csv"
    _write_csv(data_path, ["lag", "autocorrelation"], [lags, acf])
    return {"figure": figure_path, "data": data_path}


def running_mean_plot(chains: list[Chain], coordinate: int, base) -> dict:
    """Cumulative time-average estimates of one coordinate per chain."""
    values = _coordinate_columns(chains, coordinate)
    n = values.shape[0]
    iterations = np.arange(1, n + 1, dtype=float)
    means = np.cumsum(values, axis=0) / iterations[:, None]
    fig, ax = plt.subplots(figsize=(7.0, 3.0))
    for k, chain in enumerate(chains):
        ax.plot(iterations, means[:, k], linewidth=0.9, label=chain.name)
    ax.set_xlabel("iteration")
    ax.set_ylabel(f"running mean of x{coordinate}")
    ax.set_title(f"running mean of x{coordinate}")
    if len(chains) > 1:
        ax.legend(fontsize="x-small")
    fig.tight_layout()
    figure_path = _save(fig, base)
    data_path = f"{base}.csv"
    _write_csv(
        data_path,
        ["iteration"] + [chain.name for chain in chains],
        [iterations] + [means[:, k] for k in range(means.shape[1])],
    )
    return {"figure": figure_path, "data": data_path}


def psrf_plot(chains: list[Chain], coordinate, step: int, base) -> dict:
    """Potential scale reduction factor on growing prefixes.

    coordinate None plots the multivariate factor. A horizontal line marks
    the conventional 1.1 cutoff. Prefixes where the factor is undefined
    (zero within-chain variance) appear as gaps.
    """
    ns, values = psrf_series(chains, step, coordinate=coordinate)
    label = "mpsrf" if coordinate is None else f"psrf of x{coordinate}"
    fig, ax = plt.subplots(figsize=(6.5, 3.0))
    ax.plot(ns, values, linewidth=1.0)
    ax.axhline(PSRF_REFERENCE, color="gray", linewidth=0.8, linestyle="--")
    ax.set_xlabel("iterations used")
    ax.set_ylabel(label)
    ax.set_title(f"iterative {label}")
    fig.tight_layout()
    figure_path = _save(fig, base)
    data_path = f"{base}.csv"
    _write_csv(data_path, ["n", "factor"], [ns.astype(float), values])
    return {"figure": figure_path, "data": data_path}


def tile_plot(values: np.ndarray, cutoff: float, base, names=None) -> dict:
    """Cluster-membership tiles for a pairwise divergence matrix.

    Pairs in the same cluster under the cutoff render gray, pairs in
    different clusters render black. The CSV lists every ordered pair with
    its divergence and cluster indicator.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    if values.shape != (m, m):
        raise ValueError("pairwise divergence matrix must be square")
    clusters = tile_clusters(values, cutoff)
    member = np.empty(m, dtype=int)
    for label, group in enumerate(clusters):
        for index in group:
            member[index - 1] = label
    same = (member[:, None] == member[None, :]).astype(int)
    if names is None:
        names = [f"chain {i}" for i in range(1, m + 1)]
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    # 1 - same: gray (0) for same cluster, black (1) for different
    cmap = matplotlib.colors.ListedColormap(["#b3b3b3", "#000000"])
    ax.imshow(1 - same, cmap=cmap, vmin=0, vmax=1)
    ax.set_xticks(range(m), labels=names, rotation=45, ha="right", fontsize="small")
    ax.set_yticks(range(m), labels=names, fontsize="small")
    ax.set_title(f"divergence clusters at cutoff {cutoff:g}")
    fig.tight_layout()
    figure_path = _save(fig, base)
    data_path = f"{base}.csv"
    ii, jj = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
    _write_csv(
        data_path,
        ["i", "j", "divergence", "same_cluster"],
        [
            ii.ravel().astype(float),
            jj.ravel().astype(float),
            values.ravel(),
            same.ravel().astype(float),
        ],
    )
    return {"figure": figure_path, "data": data_path}
