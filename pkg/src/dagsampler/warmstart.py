"""Approximate posterior edge probabilities used to seed the proposal tuning.

Given a skeleton of permissible parents, each node's candidate parent sets
are enumerated (every subset of the permissible set, plus every such subset
extended by one outside node).  Dropping the acyclicity constraint makes the
posterior factorize per column, so unconstrained edge marginals come from a
per-node normalization; a pairwise correction then removes the mass that the
factorized approximation puts on mutually opposed edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit, gammaln, logsumexp

from .scores import ModelPrior, ScoreCache, ScoredDataset

__all__ = [
    "Skeleton",
    "ExtendedParentCollection",
    "WarmStart",
    "full_skeleton",
    "correlation_skeleton",
    "extend_parent_sets",
    "unconstrained_marginals",
    "unconstrained_log_odds",
    "acyclicity_correct",
    "compute_warmstart",
]


@dataclass
class Skeleton:
    """Permissible-parent indicator: H[i, j] = 1 allows i as a parent of j."""

    H: np.ndarray
    source: str = "file"

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.int8)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("skeleton must be a square matrix")
        if np.any(np.diagonal(H) != 0):
            raise ValueError("skeleton has nonzero diagonal entries")
        self.H = H

    @property
    def n(self) -> int:
        return self.H.shape[0]


class ExtendedParentCollection:
    """Per node: the candidate parent sets scored during warm-start.

    ``sets_by_node`` lists each node's sorted index tuples.  When built by
    ``extend_parent_sets`` the structured form (``base_by_node`` /
    ``outside_by_node``: every subset of base, each optionally extended by
    one outside node) is carried instead and enables the vectorized scoring
    path; the tuple lists are then only materialized on access.
    """

    def __init__(self, sets_by_node=None, base_by_node=None, outside_by_node=None):
        if sets_by_node is None and (base_by_node is None or outside_by_node is None):
            raise ValueError("need either sets_by_node or the structured form")
        self._sets = sets_by_node
        self.base_by_node = base_by_node
        self.outside_by_node = outside_by_node

    @property
    def sets_by_node(self) -> list:
        if self._sets is None:
            self._sets = [
                _materialize(base, outside)
                for base, outside in zip(self.base_by_node, self.outside_by_node)
            ]
        return self._sets


def _materialize(base, outside):
    sets = []
    for r in range(len(base) + 1):
        for m in combinations(base, r):
            sets.append(tuple(m))
            for o in outside:
                sets.append(tuple(sorted(m + (o,))))
    return sets


@dataclass
class WarmStart:
    pi_u: np.ndarray
    pi_tilde: np.ndarray


def full_skeleton(n: int) -> Skeleton:
    if n < 1:
        raise ValueError("n must be at least 1")
    H = np.ones((n, n), dtype=np.int8) - np.eye(n, dtype=np.int8)
    return Skeleton(H=H, source="full")


def correlation_skeleton(ds: ScoredDataset, threshold: float) -> Skeleton:
    """Symmetric skeleton connecting pairs with |sample correlation| >= threshold.

    A 1e-12 slack absorbs Gram-matrix rounding so that perfectly collinear
    pairs stay connected at threshold 1.
    """
    corr = ds.gram / (ds.N - 1)
    H = (np.abs(corr) >= threshold - 1e-12).astype(np.int8)
    np.fill_diagonal(H, 0)
    return Skeleton(H=H, source="correlation-threshold")


def extend_parent_sets(sk: Skeleton, cap: int, ds: ScoredDataset | None = None) -> ExtendedParentCollection:
    """Enumerate each node's permissible parent subsets plus one-outside extensions.

    A permissible set larger than ``cap`` is first truncated to the cap
    parents with the highest absolute correlation to the child (requires the
    dataset).  With m = min(|permissible set|, cap) the per-node collection
    has 2^m * (n - m) sets.
    """
    if cap < 1:
        raise ValueError("parent cap must be at least 1")
    n = sk.n
    base_by_node = []
    outside_by_node = []
    for j in range(n):
        base = [int(i) for i in np.nonzero(sk.H[:, j])[0] if i != j]
        if len(base) > cap:
            if ds is None:
                raise ValueError(
                    f"node {j}: permissible parent set of size {len(base)} exceeds cap {cap}; "
                    "a dataset is required to rank parents for truncation"
                )
            strength = np.abs(ds.gram[base, j])
            order = np.argsort(-strength, kind="stable")
            base = sorted(base[k] for k in order[:cap])
        base_by_node.append(base)
        outside_by_node.append([o for o in range(n) if o != j and o not in set(base)])
    return ExtendedParentCollection(base_by_node=base_by_node, outside_by_node=outside_by_node)


def _column_log_odds_generic(ds, prior, j, sets, cache, la_col) -> None:
    logw = np.array(
        [cache.score(ds, prior, j, m) + len(m) * prior.log_edge_odds for m in sets]
    )
    member = np.zeros((ds.n, len(sets)), dtype=bool)
    for k, m in enumerate(sets):
        for i in m:
            member[i, k] = True
    for i in range(ds.n):
        if i == j or not member[i].any():
            continue
        inc = logsumexp(logw[member[i]])
        exc = logsumexp(logw[~member[i]])  # the empty set always excludes i
        la_col[i] = inc - exc


def _column_log_odds_structured(ds, prior, j, base, outside, cache, la_col) -> None:
    """Vectorized include/exclude mass accumulation for one node.

    Every subset of ``base`` is scored once (through the shared cache); its
    one-outside extensions reuse the subset's Cholesky factor via a bordered
    update and are scored in bulk across all outside nodes.
    """
    from .scores import score_parts

    gram = ds.gram
    N = ds.N
    g = prior.g
    lo = prior.log_edge_odds
    const = -0.5 * N * np.log(2 * np.pi) + float(gammaln(0.5 * N))
    m = len(base)
    K = len(outside)
    base_arr = np.asarray(base, dtype=np.intp)
    base_bits = np.array([1 << b for b in base], dtype=object) if m else np.empty(0, dtype=object)
    O = np.asarray(outside, dtype=np.intp)
    if K:
        d_out = gram[O, O] + 1.0 / g
        b_out = gram[O, j]
        out_bits = [1 << int(o) for o in outside]
    include = np.full(ds.n, -np.inf)
    exclude = np.full(ds.n, -np.inf)
    for mask in range(1 << m):
        sel = [k for k in range(m) if (mask >> k) & 1]
        idx = base_arr[sel]
        q = len(sel)
        node_mask = int(sum(base_bits[sel])) if sel else 0
        score, L, z, logdet, resid = score_parts(ds, prior, j, idx)
        cache.store(j, node_mask, score)
        w_sub = score + q * lo
        if K:
            if q:
                C = gram[np.ix_(idx, O)]
                W = solve_triangular(L, C, lower=True, check_finite=False)
                s2 = d_out - np.einsum("ij,ij->j", W, W)
                num = b_out - W.T @ z
            else:
                s2 = d_out.copy()
                num = b_out.copy()
            with np.errstate(invalid="ignore", divide="ignore"):
                y2sq = np.where(s2 > 0, num * num / np.where(s2 > 0, s2, 1.0), np.nan)
                resid_o = resid - y2sq
                good = (s2 > 0) & (resid_o > 0)
                w_ext = np.where(
                    good,
                    const
                    - 0.5 * (q + 1) * np.log(g)
                    - 0.5 * (logdet + np.log(np.where(good, s2, 1.0)))
                    - 0.5 * N * np.log(0.5 * np.where(good, resid_o, 1.0))
                    + (q + 1) * lo,
                    -np.inf,
                )
            if not good.all():
                # near-singular extension: fall back to the jittered direct path
                for k in np.nonzero(~good)[0]:
                    w_ext[k] = (
                        cache.score_mask(ds, prior, j, node_mask | out_bits[k])
                        + (q + 1) * lo
                    )
            fam = np.logaddexp(w_sub, np.logaddexp.reduce(w_ext))
            include[O] = np.logaddexp(include[O], w_ext)
            pre = np.concatenate(([-np.inf], np.logaddexp.accumulate(w_ext)[:-1]))
            suf = np.concatenate(
                (np.logaddexp.accumulate(w_ext[::-1])[:-1][::-1], [-np.inf])
            )
            exclude[O] = np.logaddexp(exclude[O], np.logaddexp(w_sub, np.logaddexp(pre, suf)))
        else:
            fam = w_sub
        if m:
            in_sub = np.zeros(m, dtype=bool)
            in_sub[sel] = True
            include[base_arr[in_sub]] = np.logaddexp(include[base_arr[in_sub]], fam)
            include_not = base_arr[~in_sub]
            exclude[include_not] = np.logaddexp(exclude[include_not], fam)
    for i in range(ds.n):
        if i != j and include[i] > -np.inf:
            la_col[i] = include[i] - exclude[i]


def unconstrained_log_odds(
    ds: ScoredDataset, prior: ModelPrior, col: ExtendedParentCollection, cache: ScoreCache
) -> np.ndarray:
    """Log odds of each edge under the acyclicity-free per-node posterior.

    Entry (i, j) is log of (mass of node j's candidate sets containing i)
    over (mass of those excluding i).  Working in log-odds keeps strong edges
    comparable where the probabilities themselves would round to 1.  The
    diagonal and never-included parents get -inf.
    """
    n = ds.n
    la = np.full((n, n), -np.inf)
    structured = col.base_by_node is not None and col.outside_by_node is not None
    for j in range(n):
        if structured:
            # structured collections always contain at least the empty set
            _column_log_odds_structured(
                ds, prior, j, col.base_by_node[j], col.outside_by_node[j], cache, la[:, j]
            )
        else:
            if not col.sets_by_node[j]:
                raise ValueError(f"node {j}: empty parent-set collection")
            _column_log_odds_generic(ds, prior, j, col.sets_by_node[j], cache, la[:, j])
    return la


def unconstrained_marginals(
    ds: ScoredDataset, prior: ModelPrior, col: ExtendedParentCollection, cache: ScoreCache
) -> np.ndarray:
    """Edge marginals of the acyclicity-free posterior, one normalization per node.

    Entry (i, j) is the total normalized mass of node j's candidate parent
    sets that contain i.
    """
    pi_u = expit(unconstrained_log_odds(ds, prior, col, cache))
    np.fill_diagonal(pi_u, 0.0)
    return pi_u


def acyclicity_correct(pi_u: np.ndarray) -> np.ndarray:
    """Remove opposed-pair mass from factorized edge marginals.

    Treating (e_ij, e_ji) as independent Bernoulli draws and conditioning on
    "not both present" gives

        out_ij = u_ij (1 - u_ji) / (u_ij (1 - u_ji) + (1 - u_ij) u_ji
                                    + (1 - u_ij)(1 - u_ji))

    The degenerate u_ij = u_ji = 1 case (zero denominator) is assigned 0.5 to
    each direction.
    """
    u = np.asarray(pi_u, dtype=float)
    if np.any(u < 0) or np.any(u > 1):
        raise ValueError("edge marginals must lie in [0, 1]")
    # Odds form of the same expression: dividing through by
    # (1 - u_ij)(1 - u_ji) gives a / (a + a' + 1) with a the edge odds.  This
    # stays well conditioned when both marginals approach 1, where the plain
    # ratio collapses to 0/0; both exactly 1 lands on the 0.5 tie rule.
    uc = np.minimum(u, 1.0 - 1e-15)
    a = uc / (1.0 - uc)
    out = a / (a + a.T + 1.0)
    out = np.where((u == 1.0) & (u.T == 1.0), 0.5, out)
    np.fill_diagonal(out, 0.0)
    return out


def _corrected_from_log_odds(la: np.ndarray) -> np.ndarray:
    """acyclicity_correct evaluated from log odds, exact for saturated edges."""
    n = la.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j or la[i, j] == -np.inf:
                continue
            out[i, j] = np.exp(la[i, j] - logsumexp([la[i, j], la[j, i], 0.0]))
    return out


def compute_warmstart(
    ds: ScoredDataset,
    prior: ModelPrior,
    sk: Skeleton,
    cap: int,
    cache: ScoreCache,
) -> WarmStart:
    """Full warm-start pipeline: parent-set enumeration, marginals, pair correction."""
    if sk.n != ds.n:
        raise ValueError(f"skeleton is {sk.n}-by-{sk.n} but data has {ds.n} columns")
    col = extend_parent_sets(sk, cap, ds=ds)
    la = unconstrained_log_odds(ds, prior, col, cache)
    pi_u = expit(la)
    np.fill_diagonal(pi_u, 0.0)
    return WarmStart(pi_u=pi_u, pi_tilde=_corrected_from_log_odds(la))
