"""Chain files, data files, manifests, and content digests.

Chains travel as plain comma-separated text: a header row ``x1,...,xp``
followed by one iteration per row. Values are serialized with 17
significant digits so a save/load round trip reproduces every double
bit for bit. Manifests are JSON with sorted keys, which keeps repeated
runs byte-identical and diffable.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .chain import Chain
from .targets import LogisticData

__all__ = [
    "load_chain_file",
    "save_chain_file",
    "load_logistic_data",
    "save_logistic_data",
    "load_manifest",
    "save_manifest",
    "file_digest",
]


def _parse_row(line: str, n_cols: int, line_no: int, path: str) -> list[float]:
    cells = line.split(",")
    if len(cells) != n_cols:
        raise ValueError(
            f"{path}, line {line_no}: expected {n_cols} columns, found {len(cells)}"
        )
    out = []
    for cell in cells:
        text = cell.strip()
        try:
            value = float(text)
        except ValueError:
            value = None
        if value is None or not np.isfinite(value):
            raise ValueError(f"{path}, line {line_no}: cell {text!r} is not a finite number")
        out.append(value)
    return out


def _read_table(path, expected_header=None) -> tuple[list[str], np.ndarray]:
    """Parse a header + rows file, reporting 1-based line numbers on failure."""
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or all(not line.strip() for line in lines):
        raise ValueError(f"{path}: file is empty")
    header = [cell.strip() for cell in lines[0].split(",")]
    if expected_header is not None and header != expected_header:
        raise ValueError(
            f"{path}, line 1: expected header {','.join(expected_header)!r},"
            f" found {lines[0]!r}"
        )
    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise ValueError(f"{path}, line {line_no}: blank row")
        rows.append(_parse_row(line, len(header), line_no, path))
    if not rows:
        raise ValueError(f"{path}: no data rows after the header")
    return header, np.asarray(rows, dtype=float)


def load_chain_file(path) -> Chain:
    """Read a chain from a comma-separated file with header x1,...,xp.

    Errors name the offending line: column-count mismatches, cells that do
    not parse as finite decimals (NaN and inf included), and empty files
    are all rejected.
    """
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as handle:
        first = handle.readline()
    p = len(first.split(","))
    expected = [f"x{j}" for j in range(1, p + 1)]
    _, values = _read_table(path, expected_header=expected)
    name = os.path.splitext(os.path.basename(path))[0]
    return Chain(values, name=name)


def save_chain_file(chain: Chain, path) -> None:
    """Write a chain in the load_chain_file format (17 significant digits)."""
    path = os.fspath(path)
    header = ",".join(f"x{j}" for j in range(1, chain.p + 1))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(header + "\n")
        for row in chain.draws:
            handle.write(",".join(f"{value:.17g}" for value in row) + "\n")


def save_logistic_data(data: LogisticData, path) -> None:
    """Write a binary-response design as y,x1,...,xd rows."""
    path = os.fspath(path)
    d = data.dim
    header = "y," + ",".join(f"x{j}" for j in range(1, d + 1))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(header + "\n")
        for yi, row in zip(data.y, data.X):
            cells = [f"{yi:.17g}"] + [f"{value:.17g}" for value in row]
            handle.write(",".join(cells) + "\n")


def load_logistic_data(path) -> LogisticData:
    """Read a y,x1,...,xd file written by save_logistic_data."""
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as handle:
        first = handle.readline()
    d = len(first.split(",")) - 1
    expected = ["y"] + [f"x{j}" for j in range(1, d + 1)]
    _, values = _read_table(path, expected_header=expected)
    return LogisticData(X=values[:, 1:], y=values[:, 0])


def save_manifest(path, payload: dict) -> None:
    """Write a JSON manifest with sorted keys (byte-stable across runs)."""
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_manifest(path) -> dict:
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def file_digest(path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(os.fspath(path), "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()
