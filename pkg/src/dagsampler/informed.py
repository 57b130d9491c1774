"""Adaptive random-neighborhood informed proposal with reversal blocks.

Each iteration draws a binary indicator over edge positions, pointing every
position toward its estimated edge marginal: an absent edge with marginal
``eta`` enters the neighborhood with probability min{1, eta / (1 - eta)}, a
present one with min{1, (1 - eta) / eta}.  Mirrored included positions are
merged into reversal blocks; blocks are visited in uniform random order and
each runs a small informed sub-proposal that weights its 2 or 4 candidates by
min{1, ratio} of posterior times indicator probability, assigning zero weight
to cyclic candidates.  The Metropolis-Hastings ratio of the whole move is the
product over blocks of forward over re-based normalizing constants; a
thinning coin skips a block entirely with probability 1 - omega, contributing
a unit factor on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import DagState, FlipSet, acyclic_after_toggles, flip
from .scores import ModelPrior, ScoreCache, ScoredDataset, flip_state

__all__ = [
    "TuningState",
    "NeighborhoodPlan",
    "ProposalOutcome",
    "sample_indicator",
    "sub_neighborhood",
    "informed_sub_step",
    "propose",
]

NEG_INF = float("-inf")


@dataclass
class TuningState:
    """Per-chain adaptive parameters of the informed proposal.

    ``eta`` holds the working edge-marginal estimates (clipped to
    (epsilon, 1 - epsilon), diagonal pinned at epsilon and never sampled),
    ``omega`` the block-thinning probability, ``ergodic_sum`` the running
    count of edge occurrences over accepted states.
    """

    eta: np.ndarray
    omega: float
    epsilon: float
    pi_tilde: np.ndarray
    burn_in: int
    target_evals: float
    ergodic_sum: np.ndarray = None
    t: int = 0
    # arrays derived from eta; refreshed on every eta update
    _p_incl0: np.ndarray = field(default=None, repr=False)
    _p_incl1: np.ndarray = field(default=None, repr=False)
    _lpk0: np.ndarray = field(default=None, repr=False)
    _lpk1: np.ndarray = field(default=None, repr=False)

    @classmethod
    def init(cls, pi_tilde: np.ndarray, epsilon: float, omega: float, burn_in: int, target_evals: float):
        if not 0 < epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5), got {epsilon}")
        n = pi_tilde.shape[0]
        ts = cls(
            eta=np.empty((n, n)),
            omega=float(omega),
            epsilon=float(epsilon),
            pi_tilde=np.asarray(pi_tilde, dtype=float),
            burn_in=int(burn_in),
            target_evals=float(target_evals),
            ergodic_sum=np.zeros((n, n)),
        )
        ts.set_eta(pi_tilde)
        return ts

    def set_eta(self, eta: np.ndarray) -> None:
        """Clip and install new marginal estimates; refresh derived tables."""
        eps = self.epsilon
        eta = np.clip(np.asarray(eta, dtype=float), eps, 1.0 - eps)
        np.fill_diagonal(eta, eps)
        self.eta = eta
        odds = eta / (1.0 - eta)
        log_odds = np.log(odds)
        # Inclusion points toward the marginal: flip-in when absent, flip-out
        # when present.
        self._p_incl0 = np.minimum(1.0, odds)
        self._p_incl1 = np.minimum(1.0, 1.0 / odds)
        self._lpk0 = np.minimum(0.0, log_odds)
        self._lpk1 = np.minimum(0.0, -log_odds)


@dataclass
class NeighborhoodPlan:
    """Shuffled disjoint blocks: singles as 1-position flips, mirrored pairs as reversals."""

    blocks: list

    @property
    def R(self) -> int:
        return len(self.blocks)


@dataclass
class ProposalOutcome:
    candidate: DagState
    log_accept_ratio: float
    evals: int
    z_log_ratios: list


def sample_indicator(ts: TuningState, state: DagState, rng: np.random.Generator) -> NeighborhoodPlan:
    """Draw the neighborhood indicator and assemble shuffled blocks."""
    gamma = state.gamma
    p = np.where(gamma == 0, ts._p_incl0, ts._p_incl1)
    np.fill_diagonal(p, 0.0)
    k = rng.random(p.shape) < p
    both = k & k.T
    blocks = [
        FlipSet(((int(i), int(j)), (int(j), int(i))))
        for i, j in np.argwhere(np.triu(both, 1))
    ]
    blocks += [FlipSet(((int(i), int(j)),)) for i, j in np.argwhere(k & ~both)]
    rng.shuffle(blocks)
    return NeighborhoodPlan(blocks=blocks)


def _toggle_options(block: FlipSet) -> list:
    """Non-identity toggle sets reachable inside one block."""
    if len(block.positions) == 1:
        return [block.positions]
    (i, j), (j2, i2) = block.positions
    return [((i, j),), ((j2, i2),), block.positions]


def sub_neighborhood(state: DagState, block: FlipSet) -> list:
    """Materialize the candidate adjacency matrices of one block (current first).

    2 candidates for a single position, 4 for a reversal pair.  No acyclicity
    filtering happens here; invalid members receive zero weight downstream.
    """
    out = [state.gamma.copy()]
    for toggles in _toggle_options(block):
        out.append(flip(state, FlipSet(toggles)))
    return out


def _candidate_value(
    state: DagState,
    toggles,
    ts: TuningState,
    ds: ScoredDataset,
    prior: ModelPrior,
    cache: ScoreCache,
) -> float:
    """Log of posterior-times-indicator ratio of a toggled candidate vs the state.

    Cyclic candidates (including double edges) get -inf.  Only toggled
    positions contribute indicator factors; everything else cancels.
    """
    gamma = state.gamma
    if not acyclic_after_toggles(gamma, toggles, children=state.children or None):
        return NEG_INF
    v = 0.0
    d_delta = 0
    col_xor = {}
    for a, b in toggles:
        col_xor[b] = col_xor.get(b, 0) ^ (1 << a)
        if gamma[a, b]:
            d_delta -= 1
            v += ts._lpk0[a, b] - ts._lpk1[a, b]
        else:
            d_delta += 1
            v += ts._lpk1[a, b] - ts._lpk0[a, b]
    for b, x in col_xor.items():
        v += cache.score_mask(ds, prior, b, state.col_masks[b] ^ x) - state.node_scores[b]
    return v + d_delta * prior.log_edge_odds


def informed_sub_step(
    state: DagState,
    block: FlipSet,
    ts: TuningState,
    ds: ScoredDataset,
    prior: ModelPrior,
    cache: ScoreCache,
    rng: np.random.Generator,
):
    """Run one informed sub-proposal; returns (next state, log Z, log Z').

    Z sums the Hastings weights min{1, ratio} of all candidates relative to
    the incoming state; Z' re-bases the same candidates at the selected one,
    reusing the already computed values.  The incoming state always carries
    weight 1, so the step is well defined even when every other candidate is
    invalid.
    """
    options = _toggle_options(block)
    vs = [0.0]
    for toggles in options:
        vs.append(_candidate_value(state, toggles, ts, ds, prior, cache))
    weights = [math.exp(min(0.0, v)) for v in vs]
    total = math.fsum(weights)
    u = rng.random() * total
    acc = 0.0
    sel = None
    for idx, w in enumerate(weights):
        acc += w
        if u < acc:
            sel = idx
            break
    if sel is None:  # cumulative rounding fell short; take the last live candidate
        sel = max(idx for idx, w in enumerate(weights) if w > 0.0)
    log_z = math.log(total)
    v_sel = vs[sel]
    log_zp = math.log(math.fsum(math.exp(min(0.0, v - v_sel)) for v in vs))
    if sel == 0:
        return state, log_z, log_zp
    new_state = flip_state(ds, prior, state, FlipSet(options[sel - 1]), cache)
    return new_state, log_z, log_zp


def propose(
    state: DagState,
    plan: NeighborhoodPlan,
    ts: TuningState,
    ds: ScoredDataset,
    prior: ModelPrior,
    cache: ScoreCache,
    rng: np.random.Generator,
) -> ProposalOutcome:
    """Walk the plan's blocks with thinning; accumulate the log acceptance ratio."""
    cur = state
    log_ratio = 0.0
    evals = 0
    z_log_ratios = []
    for block in plan.blocks:
        if rng.random() < ts.omega:
            cur, log_z, log_zp = informed_sub_step(cur, block, ts, ds, prior, cache, rng)
            log_ratio += log_z - log_zp
            evals += 1
            z_log_ratios.append((log_z, log_zp))
        else:
            z_log_ratios.append((0.0, 0.0))
    return ProposalOutcome(
        candidate=cur, log_accept_ratio=log_ratio, evals=evals, z_log_ratios=z_log_ratios
    )
