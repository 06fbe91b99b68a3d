"""Containers and basic summaries for MCMC sampler output.

A chain is an n-by-p array of draws in iteration order. Downstream
diagnostics consume a Chain, a ChainSet (several runs targeting the same
distribution), or a ScalarSeries obtained by applying a scalar function
of the state to every draw. Burn-in is removed by slicing a chain before
a series is built, never inside a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Chain",
    "ChainSet",
    "ScalarSeries",
    "FunctionSpec",
    "apply_function",
    "drop_burnin",
    "running_mean",
    "quantile",
    "summarize",
]


def _as_finite_2d(draws) -> np.ndarray:
    arr = np.array(draws, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"draws must be a 1-d or 2-d array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"chain needs at least one draw and one coordinate, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
        raise ValueError(f"non-finite draw at iteration {bad + 1}")
    return arr


@dataclass(frozen=True)
class Chain:
    """One sampler run: rows are iterations, columns are coordinates.

    Draws must be finite. The array is frozen after validation so results
    computed from a chain cannot drift under later mutation.
    """

    draws: np.ndarray
    name: str = "chain"
    seed: int | None = None

    def __post_init__(self):
        arr = _as_finite_2d(self.draws)
        arr.flags.writeable = False
        object.__setattr__(self, "draws", arr)

    @property
    def n(self) -> int:
        return self.draws.shape[0]

    @property
    def p(self) -> int:
        return self.draws.shape[1]

    def coordinate(self, j: int) -> np.ndarray:
        """Column ``j`` (1-based) as a flat array."""
        if not 1 <= j <= self.p:
            raise ValueError(f"coordinate {j} out of range 1..{self.p}")
        return self.draws[:, j - 1]


@dataclass(frozen=True)
class ChainSet:
    """Several chains with a common coordinate dimension."""

    chains: tuple[Chain, ...]

    def __post_init__(self):
        chains = tuple(self.chains)
        if not chains:
            raise ValueError("chain set is empty")
        p0 = chains[0].p
        for c in chains[1:]:
            if c.p != p0:
                raise ValueError(f"chains disagree on dimension: {c.p} != {p0}")
        object.__setattr__(self, "chains", chains)

    @property
    def m(self) -> int:
        return len(self.chains)

    @property
    def p(self) -> int:
        return self.chains[0].p

    def equal_length(self) -> int:
        """Common chain length; raises when the chains differ."""
        lengths = sorted({c.n for c in self.chains})
        if len(lengths) != 1:
            raise ValueError(f"chains have unequal lengths: {lengths}")
        return lengths[0]

    def __iter__(self):
        return iter(self.chains)

    def __len__(self) -> int:
        return len(self.chains)

    def __getitem__(self, i: int) -> Chain:
        return self.chains[i]


@dataclass(frozen=True)
class ScalarSeries:
    """A scalar function of the state evaluated along one chain."""

    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size < 1:
            raise ValueError("series is empty")
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise ValueError(f"non-finite value at position {bad + 1}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class FunctionSpec:
    """Declarative description of the function applied to each draw.

    kind
        ``"coordinate"``  pick one coordinate (1-based ``coordinate``);
        ``"indicator"``   I(coordinate value <= threshold), in {0, 1};
        ``"table"``       externally computed values, one per iteration;
        ``"identity"``    keep the full vector state.
    """

    kind: str
    coordinate: int = 1
    threshold: float = 0.0
    table: np.ndarray | None = field(default=None, compare=False)

    _KINDS = ("coordinate", "indicator", "table", "identity")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}, expected one of {self._KINDS}")
        if self.kind in ("coordinate", "indicator") and self.coordinate < 1:
            raise ValueError("coordinate index is 1-based and must be >= 1")
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table function needs a values table")
            tab = np.array(self.table, dtype=float).reshape(-1)
            if not np.all(np.isfinite(tab)):
                raise ValueError("table contains non-finite values")
            object.__setattr__(self, "table", tab)


def apply_function(chain: Chain, spec: FunctionSpec):
    """Evaluate ``spec`` along ``chain``.

    Returns a ScalarSeries for the scalar kinds. The ``"identity"`` kind
    returns the chain itself so vector-valued consumers keep the full state.
    """
    if spec.kind == "identity":
        return chain
    if spec.kind == "coordinate":
        vals = chain.coordinate(spec.coordinate)
        label = f"{chain.name}:x{spec.coordinate}"
    elif spec.kind == "indicator":
        vals = (chain.coordinate(spec.coordinate) <= spec.threshold).astype(float)
        label = f"{chain.name}:I(x{spec.coordinate}<={spec.threshold:g})"
    else:  # table
        if spec.table.size != chain.n:
            raise ValueError(f"table has {spec.table.size} values but chain has {chain.n} iterations")
        vals = spec.table
        label = f"{chain.name}:table"
    return ScalarSeries(vals, source=label)


def drop_burnin(chain: Chain, burnin: int) -> Chain:
    """Remove the first ``burnin`` iterations, keeping at least one draw."""
    if burnin < 0:
        raise ValueError("burn-in must be non-negative")
    if burnin >= chain.n:
        raise ValueError(f"burn-in {burnin} leaves no draws (chain has {chain.n})")
    if burnin == 0:
        return chain
    return Chain(chain.draws[burnin:], name=chain.name, seed=chain.seed)


def series_values(series) -> np.ndarray:
    """Accept a ScalarSeries or a plain 1-d array-like and return the values."""
    if isinstance(series, ScalarSeries):
        return series.values
    vals = np.asarray(series, dtype=float).reshape(-1)
    if vals.size < 1:
        raise ValueError("series is empty")
    if not np.all(np.isfinite(vals)):
        raise ValueError("series contains non-finite values")
    return vals


def running_mean(series) -> np.ndarray:
    """Cumulative means: out[k] is the mean of the first k+1 values."""
    vals = series_values(series)
    return np.cumsum(vals) / np.arange(1, vals.size + 1)


def quantile(series, q: float) -> float:
    """Order-statistic quantile with linear interpolation (NumPy default)."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("quantile level must lie in [0, 1]")
    return float(np.quantile(series_values(series), q))


def summarize(series, quantiles=(0.05, 0.25, 0.5, 0.75, 0.95)) -> dict:
    """Mean, sample variance (divisor n-1), and selected quantiles."""
    vals = series_values(series)
    n = vals.size
    out = {
        "n": int(n),
        "mean": float(vals.mean()),
        "var": float(vals.var(ddof=1)) if n > 1 else float("nan"),
    }
    out["quantiles"] = {float(q): quantile(vals, q) for q in quantiles}
    return out
