"""Add-delete-reverse random-walk proposal over DAG indicators.

The baseline sampler: pick one of the three move kinds uniformly, pick a flip
uniformly inside that kind's neighborhood, and correct the acceptance ratio
by the neighborhood sizes of the forward and reverse moves.  Cyclic draws are
resolved by keeping the current state, without evaluating any posterior.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .graphs import DagState, FlipSet, incremental_acyclicity
from .scores import ModelPrior, ScoreCache, ScoredDataset, delta_log_posterior, flip_state

__all__ = ["AdrMove", "adr_neighborhood", "adr_propose"]


class AdrMove(Enum):
    ADDITION = "addition"
    DELETION = "deletion"
    REVERSAL = "reversal"

    @property
    def reverse(self) -> "AdrMove":
        if self is AdrMove.ADDITION:
            return AdrMove.DELETION
        if self is AdrMove.DELETION:
            return AdrMove.ADDITION
        return AdrMove.REVERSAL


_KINDS = (AdrMove.ADDITION, AdrMove.DELETION, AdrMove.REVERSAL)


def adr_neighborhood(state: DagState, move: AdrMove):
    """Flip sets of one move kind, before any acyclicity filtering.

    Additions exclude positions whose opposite edge is present (no double
    edges at proposal time); deletions and reversals run over present edges.
    Returns (list of FlipSet, size).
    """
    gamma = state.gamma
    if move is AdrMove.ADDITION:
        free = (gamma == 0) & (gamma.T == 0)
        np.fill_diagonal(free, False)
        sets = [FlipSet(((int(i), int(j)),)) for i, j in np.argwhere(free)]
    elif move is AdrMove.DELETION:
        sets = [FlipSet(((int(i), int(j)),)) for i, j in np.argwhere(gamma == 1)]
    else:
        sets = [
            FlipSet(((int(i), int(j)), (int(j), int(i))))
            for i, j in np.argwhere(gamma == 1)
        ]
    return sets, len(sets)


def _neighborhood_size(n: int, edge_count: int, move: AdrMove) -> int:
    if move is AdrMove.ADDITION:
        return n * (n - 1) - 2 * edge_count
    return edge_count


def adr_propose(
    state: DagState,
    ds: ScoredDataset,
    prior: ModelPrior,
    cache: ScoreCache,
    rng: np.random.Generator,
):
    """One random-walk proposal; returns (candidate state, log acceptance ratio).

    Empty neighborhoods and cyclic draws return the current state with ratio
    0 (a self-move).  For a valid candidate the ratio is the posterior change
    plus log |N(current)| - log |N(candidate, reverse kind)|.
    """
    gamma = state.gamma
    move = _KINDS[rng.integers(3)]
    if move is AdrMove.ADDITION:
        free = (gamma == 0) & (gamma.T == 0)
        np.fill_diagonal(free, False)
        positions = np.argwhere(free)
    else:
        positions = np.argwhere(gamma == 1)
    size = len(positions)
    if size == 0:
        return state, 0.0
    i, j = (int(v) for v in positions[rng.integers(size)])
    fs = FlipSet(((i, j), (j, i))) if move is AdrMove.REVERSAL else FlipSet(((i, j),))
    if not incremental_acyclicity(state, fs):
        return state, 0.0
    delta = delta_log_posterior(ds, prior, state, fs, cache)
    new_edges = state.edge_count + (1 if move is AdrMove.ADDITION else -1 if move is AdrMove.DELETION else 0)
    rev_size = _neighborhood_size(state.n, new_edges, move.reverse)
    log_ratio = delta + np.log(size) - np.log(rev_size)
    return flip_state(ds, prior, state, fs, cache), float(log_ratio)
