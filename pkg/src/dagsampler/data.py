"""CSV ingestion and synthetic ground-truth generation."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .scores import ScoredDataset

__all__ = ["SyntheticSpec", "load_csv", "generate_synthetic"]


def _try_float(cell: str):
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path) -> ScoredDataset:
    """Load a rectangular numeric CSV (optional header) into a standardized dataset.

    The first row is treated as a header when any of its cells is
    non-numeric.  Ragged rows, non-numeric cells and constant columns raise
    descriptive ValueErrors.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        raw = [row for row in reader if row and any(c.strip() for c in row)]
    if not raw:
        raise ValueError(f"{path}: no data rows")
    start = 0
    if any(_try_float(c) is None for c in raw[0]):
        start = 1
        if len(raw) == 1:
            raise ValueError(f"{path}: header only, no data rows")
    width = len(raw[start])
    rows = []
    for r, row in enumerate(raw[start:], start=start + 1):
        if len(row) != width:
            raise ValueError(f"{path}: row {r} has {len(row)} cells, expected {width}")
        vals = []
        for c, cell in enumerate(row):
            v = _try_float(cell)
            if v is None:
                raise ValueError(f"{path}: non-numeric cell at row {r}, column {c + 1}: {cell!r}")
            vals.append(v)
        rows.append(vals)
    X = np.asarray(rows, dtype=float)
    try:
        return ScoredDataset.from_raw(X)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


@dataclass
class SyntheticSpec:
    """Ground-truth generator settings for a random linear Gaussian DAG."""

    n: int
    N: int
    edge_prob: float
    weight_range: tuple = (0.4, 2.0)
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        low, high = self.weight_range
        if not 0 < low < high:
            raise ValueError(f"weight range must satisfy 0 < low < high, got {self.weight_range}")
        if not 0 <= self.edge_prob <= 1:
            raise ValueError("edge_prob must lie in [0, 1]")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")


def generate_synthetic(spec: SyntheticSpec):
    """Sample a DAG and ancestral data from it; returns (truth, dataset, weights).

    A uniformly random topological order is drawn, each order-consistent edge
    is included with ``edge_prob``, and weights are uniform on
    +/-[low, high].  Columns follow the structural equations with independent
    Gaussian noise, then get standardized.
    """
    rng = np.random.default_rng(spec.seed)
    n, N = spec.n, spec.N
    order = rng.permutation(n)
    gamma = np.zeros((n, n), dtype=np.int8)
    weights = np.zeros((n, n))
    low, high = spec.weight_range
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < spec.edge_prob:
                u, v = int(order[a]), int(order[b])
                gamma[u, v] = 1
                weights[u, v] = rng.uniform(low, high) * (1 if rng.random() < 0.5 else -1)
    X = np.zeros((N, n))
    for b in range(n):
        v = int(order[b])
        X[:, v] = X @ weights[:, v] + spec.noise_sd * rng.standard_normal(N)
    return gamma, ScoredDataset.from_raw(X), weights
