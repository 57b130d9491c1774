"""Exact small-instance posterior enumeration and DAG evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import logsumexp

from .graphs import is_acyclic
from .scores import ModelPrior, ScoreCache, ScoredDataset, mask_of

__all__ = ["ExactPosterior", "enumerate_exact", "shd", "pep_mse", "pep_to_dag"]


@dataclass
class ExactPosterior:
    """All DAGs on up to 4 nodes with their normalized posterior and exact PEPs."""

    dags: list
    log_probs: np.ndarray
    pep_exact: np.ndarray
    _index: dict = field(default_factory=dict, repr=False)

    def index_of(self, gamma: np.ndarray) -> int:
        return self._index[np.asarray(gamma, dtype=np.int8).tobytes()]

    def __len__(self) -> int:
        return len(self.dags)


def enumerate_exact(ds: ScoredDataset, prior: ModelPrior, cache: ScoreCache | None = None) -> ExactPosterior:
    """Score every DAG by brute force; refuses more than 4 nodes."""
    n = ds.n
    if n > 4:
        raise ValueError(f"exact enumeration is limited to 4 nodes, got {n}")
    if cache is None:
        cache = ScoreCache()
    positions = [(i, j) for i in range(n) for j in range(n) if i != j]
    dags = []
    logps = []
    for bits in product((0, 1), repeat=len(positions)):
        gamma = np.zeros((n, n), dtype=np.int8)
        for (i, j), b in zip(positions, bits):
            gamma[i, j] = b
        if not is_acyclic(gamma):
            continue
        lp = sum(
            cache.score_mask(ds, prior, j, mask_of(np.nonzero(gamma[:, j])[0]))
            for j in range(n)
        ) + int(gamma.sum()) * prior.log_edge_odds
        dags.append(gamma)
        logps.append(lp)
    logps = np.asarray(logps)
    log_probs = logps - logsumexp(logps)
    probs = np.exp(log_probs)
    pep = np.zeros((n, n))
    for gamma, p in zip(dags, probs):
        pep += p * gamma
    index = {g.tobytes(): k for k, g in enumerate(dags)}
    return ExactPosterior(dags=dags, log_probs=log_probs, pep_exact=pep, _index=index)


def shd(estimated: np.ndarray, truth: np.ndarray) -> int:
    """Structural Hamming distance; a reversed edge counts once."""
    a = np.asarray(estimated)
    b = np.asarray(truth)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    only_a = (a == 1) & (b == 0)
    only_b = (b == 1) & (a == 0)
    reversals = int(np.sum(only_a & only_b.T))
    return int(only_a.sum() + only_b.sum()) - reversals


def pep_mse(estimate: np.ndarray, reference: np.ndarray) -> float:
    """Mean over off-diagonal entries of squared edge-probability differences."""
    a = np.asarray(estimate, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    n = a.shape[0]
    diff = (a - b) ** 2
    np.fill_diagonal(diff, 0.0)
    return float(diff.sum() / (n * (n - 1)))


def _find_cycle(gamma: np.ndarray):
    """Return the edge list of one directed cycle, or None."""
    n = gamma.shape[0]
    color = np.zeros(n, dtype=np.int8)  # 0 unseen, 1 on stack, 2 done
    parent = {}

    def dfs(u):
        color[u] = 1
        for v in np.nonzero(gamma[u])[0]:
            v = int(v)
            if color[v] == 0:
                parent[v] = u
                found = dfs(v)
                if found is not None:
                    return found
            elif color[v] == 1:
                cycle = [(u, v)]
                w = u
                while w != v:
                    cycle.append((parent[w], w))
                    w = parent[w]
                return cycle
        color[u] = 2
        return None

    for s in range(n):
        if color[s] == 0:
            found = dfs(int(s))
            if found is not None:
                return found
    return None


def pep_to_dag(pep: np.ndarray, threshold: float) -> np.ndarray:
    """Point estimate: keep dominant-direction edges above the threshold, break cycles.

    An edge enters only when strictly above the threshold and strictly above
    its opposite direction, so tied pairs drop out.  Any remaining cycle is
    broken by greedily removing its lowest-probability edge.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    pep = np.asarray(pep, dtype=float)
    gamma = ((pep > threshold) & (pep > pep.T)).astype(np.int8)
    np.fill_diagonal(gamma, 0)
    while not is_acyclic(gamma):
        cycle = _find_cycle(gamma)
        i, j = min(cycle, key=lambda e: pep[e[0], e[1]])
        gamma[i, j] = 0
    return gamma
