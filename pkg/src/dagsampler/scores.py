"""Closed-form node marginal likelihoods and DAG log posteriors.

Under the linear Gaussian model with a normal slab of variance g * sigma_j^2
on active weights and p(sigma_j^2) proportional to 1/sigma_j^2, the weights
and noise variances integrate out analytically.  The resulting score of a
node given its parent set is

    log p(x_j | parents) = -(N/2) log(2 pi) + log Gamma(N/2)
                           - (q/2) log g - (1/2) logdet(S)
                           - (N/2) log((x_j' x_j - b' S^{-1} b) / 2)

with S = Xp' Xp + I/g, b = Xp' x_j and q the parent count.  All inner
products are gathered from a precomputed Gram matrix, so per-evaluation cost
is independent of the sample count.  The DAG posterior factorizes over
columns, which is what makes caching by (node, parent set) effective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .graphs import DagState, FlipSet, children_lists, column_masks, is_acyclic

__all__ = [
    "ScoredDataset",
    "ModelPrior",
    "ScoreCache",
    "DegenerateDataError",
    "node_log_marginal",
    "log_posterior",
    "delta_log_posterior",
    "make_state",
    "flip_state",
]

LOG_2PI = math.log(2.0 * math.pi)


class DegenerateDataError(ValueError):
    """Raised when a node's residual quadratic form is numerically non-positive."""


@dataclass
class ScoredDataset:
    """Standardized observations with their Gram matrix.

    Columns carry mean 0 and unit sample standard deviation (ddof=1); this is
    the only data object the likelihood ever reads.
    """

    X: np.ndarray
    gram: np.ndarray
    N: int
    n: int

    @classmethod
    def from_raw(cls, X: np.ndarray) -> "ScoredDataset":
        """Standardize raw columns and precompute X'X.

        Raises ValueError on constant (zero-variance) columns.
        """
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("data must be a 2-d array (rows = observations)")
        N, n = X.shape
        if N < 3:
            raise ValueError(f"need at least 3 observations, got {N}")
        sd = X.std(axis=0, ddof=1)
        bad = np.nonzero(sd <= 0)[0]
        if bad.size:
            raise ValueError(f"constant column(s) {bad.tolist()}: zero variance, cannot standardize")
        Z = (X - X.mean(axis=0)) / sd
        return cls(X=Z, gram=Z.T @ Z, N=N, n=n)


@dataclass
class ModelPrior:
    """Slab scale g, prior edge probability h, and the slab covariance variant.

    Only the identity slab covariance is implemented; "gram-inverse" is
    accepted as a configuration value but raises on use.
    """

    g: float
    h: float
    slab: str = "identity"

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if not 0 < self.h < 1:
            raise ValueError(f"h must lie in (0, 1), got {self.h}")
        if self.slab not in ("identity", "gram-inverse"):
            raise ValueError(f"unknown slab covariance {self.slab!r}")

    @property
    def log_edge_odds(self) -> float:
        return math.log(self.h / (1.0 - self.h))


def score_parts(ds: ScoredDataset, prior: ModelPrior, j: int, idx: np.ndarray):
    """Score column j for the parent index array, returning the factor pieces.

    Returns (score, L, z, logdet, resid) so callers can extend the Cholesky
    factor by one parent without refactorizing.
    """
    gram = ds.gram
    q = int(idx.size)
    xjxj = gram[j, j]
    if q == 0:
        L = None
        z = None
        logdet = 0.0
        resid = float(xjxj)
    else:
        S = gram[np.ix_(idx, idx)] + np.eye(q) / prior.g
        b = gram[idx, j]
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            try:
                L = np.linalg.cholesky(S + 1e-10 * np.eye(q))
            except np.linalg.LinAlgError:
                raise DegenerateDataError(
                    f"node {j}: parent Gram matrix is not positive definite"
                ) from None
        logdet = 2.0 * float(np.sum(np.log(np.diagonal(L))))
        z = np.linalg.solve(L, b)
        resid = float(xjxj) - float(z @ z)
    if resid <= 0.0:
        raise DegenerateDataError(
            f"node {j}: non-positive residual quadratic form ({resid:.3e}); data degenerate"
        )
    N = ds.N
    score = (
        -0.5 * N * LOG_2PI
        + float(gammaln(0.5 * N))
        - 0.5 * q * math.log(prior.g)
        - 0.5 * logdet
        - 0.5 * N * math.log(0.5 * resid)
    )
    return score, L, z, logdet, resid


def node_log_marginal(ds: ScoredDataset, prior: ModelPrior, j: int, parents) -> float:
    """Log marginal likelihood of column j given a parent index list."""
    if prior.slab != "identity":
        raise NotImplementedError("gram-inverse slab covariance is not implemented")
    parents = [int(p) for p in parents]
    if j in parents:
        raise ValueError(f"node {j} cannot be its own parent")
    if len(set(parents)) != len(parents):
        raise ValueError("parent indices must be distinct")
    return score_parts(ds, prior, j, np.asarray(parents, dtype=np.intp))[0]


def _bits(mask: int, n: int):
    return [k for k in range(n) if (mask >> k) & 1]


def mask_of(parents) -> int:
    m = 0
    for p in parents:
        m |= 1 << int(p)
    return m


@dataclass
class ScoreCache:
    """Memo of node scores keyed by (node, parent bitmask).

    Disabling the cache must not change any sampled trajectory; it only trades
    recomputation for memory.
    """

    enabled: bool = True
    hits: int = 0
    misses: int = 0
    _table: dict = field(default_factory=dict)

    def score_mask(self, ds: ScoredDataset, prior: ModelPrior, j: int, mask: int) -> float:
        key = (j, mask)
        if self.enabled:
            val = self._table.get(key)
            if val is not None:
                self.hits += 1
                return val
        self.misses += 1
        val = node_log_marginal(ds, prior, j, _bits(mask, ds.n))
        if self.enabled:
            self._table[key] = val
        return val

    def score(self, ds: ScoredDataset, prior: ModelPrior, j: int, parents) -> float:
        return self.score_mask(ds, prior, j, mask_of(parents))

    def store(self, j: int, mask: int, value: float) -> None:
        """Insert an externally computed score (must equal node_log_marginal's)."""
        if self.enabled:
            self._table.setdefault((j, mask), value)

    def __len__(self) -> int:
        return len(self._table)


def make_state(ds: ScoredDataset, prior: ModelPrior, gamma: np.ndarray, cache: ScoreCache) -> DagState:
    """Score a DAG from scratch into a DagState; raises on cyclic input."""
    if not is_acyclic(gamma):
        raise ValueError("cannot score a cyclic graph")
    gamma = np.asarray(gamma, dtype=np.int8).copy()
    masks = column_masks(gamma)
    scores = np.array([cache.score_mask(ds, prior, j, masks[j]) for j in range(ds.n)])
    d = int(gamma.sum())
    return DagState(
        gamma=gamma,
        edge_count=d,
        node_scores=scores,
        log_posterior=float(scores.sum()) + d * prior.log_edge_odds,
        col_masks=masks,
        children=children_lists(gamma),
    )


def log_posterior(ds: ScoredDataset, prior: ModelPrior, state: DagState, cache: ScoreCache) -> float:
    """Unnormalized log posterior of a DAG, recomputed from its adjacency."""
    if not is_acyclic(state.gamma):
        raise ValueError("cyclic state has no posterior mass")
    masks = column_masks(state.gamma)
    total = sum(cache.score_mask(ds, prior, j, masks[j]) for j in range(ds.n))
    return float(total) + int(state.gamma.sum()) * prior.log_edge_odds


def delta_log_posterior(
    ds: ScoredDataset, prior: ModelPrior, state: DagState, fs: FlipSet, cache: ScoreCache
) -> float:
    """Change in log posterior from applying a flip set; rescores at most two columns."""
    delta = 0.0
    d_delta = 0
    # A mirrored pair toggles entries in two distinct columns; group by column.
    col_xor = {}
    for i, j in fs.positions:
        col_xor[j] = col_xor.get(j, 0) ^ (1 << i)
        d_delta += -1 if state.gamma[i, j] else 1
    for j, x in col_xor.items():
        new_mask = state.col_masks[j] ^ x
        delta += cache.score_mask(ds, prior, j, new_mask) - state.node_scores[j]
    return delta + d_delta * prior.log_edge_odds


def flip_state(
    ds: ScoredDataset, prior: ModelPrior, state: DagState, fs: FlipSet, cache: ScoreCache
) -> DagState:
    """Apply a flip set to a state, rescoring only the affected columns.

    The caller is responsible for acyclicity of the result.
    """
    new = state.copy()
    for i, j in fs.positions:
        new.gamma[i, j] = 1 - new.gamma[i, j]
        new.col_masks[j] ^= 1 << i
        if new.gamma[i, j]:
            new.edge_count += 1
            new.children[i].append(j)
        else:
            new.edge_count -= 1
            new.children[i].remove(j)
    for j in {j for _, j in fs.positions}:
        new.node_scores[j] = cache.score_mask(ds, prior, j, new.col_masks[j])
    # Resum rather than accumulate so long chains cannot drift.
    new.log_posterior = float(new.node_scores.sum()) + new.edge_count * prior.log_edge_odds
    return new
