"""Metropolis-Hastings chain driver with warm-started adaptive tuning.

Runs either the informed sampler (with eta blending toward the running edge
frequencies on a decaying schedule, and Robbins-Monro control of the thinning
probability toward a target number of sub-neighborhood evaluations) or the
add-delete-reverse random walk, which needs no adaptation.  Edge-probability
estimates are averaged over post-burn-in states only; the eta adaptation uses
the full history.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .adr import adr_propose
from .evaluate import pep_mse
from .graphs import DagState, is_acyclic
from .informed import TuningState, propose, sample_indicator
from .scores import ModelPrior, ScoreCache, ScoredDataset, make_state
from .warmstart import Skeleton, WarmStart, compute_warmstart, full_skeleton

__all__ = [
    "RunConfig",
    "ChainOutput",
    "phi_schedule",
    "logit_eps",
    "inv_logit_eps",
    "update_eta",
    "update_omega",
    "run_chain",
    "run_replicated",
]

log = logging.getLogger("dagsampler")

TRACE_DTYPE = np.dtype(
    [
        ("iteration", "i8"),
        ("log_posterior", "f8"),
        ("edge_count", "i8"),
        ("evals", "i8"),
        ("accepted", "i1"),
    ]
)


@dataclass
class RunConfig:
    iterations: int
    burn_in: int
    sampler: str = "parni"
    g: float = 10.0
    h: float = 0.1
    epsilon: float = 0.001
    target_evals: float = 10.0
    seed: int = 0
    thin: int = 1
    omega_init: float = 0.5
    initial_dag: np.ndarray | None = None
    parent_cap: int = 14
    adaptation: str = "on"  # on | freeze-after-burnin | off
    cache_scores: bool = True
    track_states: bool = False

    def __post_init__(self):
        if self.sampler not in ("parni", "adr"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if not self.burn_in < self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.burn_in < 1:
            raise ValueError("burn_in must be at least 1")
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if self.target_evals < 1:
            raise ValueError("target_evals must be at least 1")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.adaptation not in ("on", "freeze-after-burnin", "off"):
            raise ValueError(f"unknown adaptation mode {self.adaptation!r}")
        ModelPrior(self.g, self.h)  # validates g and h ranges

    @property
    def prior(self) -> ModelPrior:
        return ModelPrior(self.g, self.h)


@dataclass
class ChainOutput:
    trace: np.ndarray
    pep: np.ndarray
    map_dag: np.ndarray
    map_log_posterior: float
    acceptance_rate: float
    state_counts: dict | None = None
    warm: WarmStart | None = None


def phi_schedule(t: int, burn_in: int) -> float:
    """Blend weight for the warm-start estimates: 1/2 exactly at the end of burn-in."""
    if t < 1 or burn_in < 1:
        raise ValueError("t and burn_in must be at least 1")
    if t <= burn_in:
        return 1.0 - 0.5 * (1.0 / (burn_in - t + 1)) ** 0.2
    return 0.5 * (1.0 / (t - burn_in)) ** 0.5


def logit_eps(x: float, eps: float) -> float:
    """Range-preserving logit on (eps, 1 - eps)."""
    s = (x - eps) / (1.0 - 2.0 * eps)
    s = min(max(s, 1e-12), 1.0 - 1e-12)  # stay strictly inside even at saturation
    return math.log(s / (1.0 - s))


def inv_logit_eps(y: float, eps: float) -> float:
    return eps + (1.0 - 2.0 * eps) * float(expit(y))


def update_eta(ts: TuningState, accepted_state: DagState, t: int, burn_in: int) -> TuningState:
    """Fold the iteration-t chain state into the running edge frequencies and reblend eta."""
    ts.ergodic_sum += accepted_state.gamma
    ts.t = t
    phi = phi_schedule(t, burn_in)
    ts.set_eta(phi * ts.pi_tilde + (1.0 - phi) * (ts.ergodic_sum / t))
    return ts


def update_omega(ts: TuningState, evals_this_iter: int, t: int) -> TuningState:
    """Robbins-Monro step moving omega toward the target evaluation count."""
    psi = t ** -0.7
    y = logit_eps(ts.omega, ts.epsilon) - psi * (evals_this_iter - ts.target_evals)
    ts.omega = inv_logit_eps(y, ts.epsilon)
    return ts


def run_chain(
    cfg: RunConfig,
    ds: ScoredDataset,
    sk: Skeleton | None = None,
    warm: WarmStart | None = None,
) -> ChainOutput:
    """Run one chain; fixed seed gives bit-identical output."""
    n = ds.n
    if sk is not None and sk.n != n:
        raise ValueError(f"skeleton has {sk.n} nodes but data has {n} columns")
    rng = np.random.default_rng(cfg.seed)
    prior = cfg.prior
    cache = ScoreCache(enabled=cfg.cache_scores)

    if cfg.initial_dag is not None:
        gamma0 = np.asarray(cfg.initial_dag, dtype=np.int8)
        if gamma0.shape != (n, n):
            raise ValueError(f"initial DAG shape {gamma0.shape} does not match n={n}")
        if not is_acyclic(gamma0):
            raise ValueError("initial DAG is cyclic")
    else:
        gamma0 = np.zeros((n, n), dtype=np.int8)
    state = make_state(ds, prior, gamma0, cache)

    ts = None
    if cfg.sampler == "parni":
        if warm is None:
            warm = compute_warmstart(ds, prior, sk or full_skeleton(n), cfg.parent_cap, cache)
        ts = TuningState.init(
            warm.pi_tilde, cfg.epsilon, cfg.omega_init, cfg.burn_in, cfg.target_evals
        )
        log.debug("warm-start done: %d cached scores", len(cache))

    rows = []
    pep_sum = np.zeros((n, n))
    pep_count = 0
    state_counts: dict | None = {} if cfg.track_states else None
    map_gamma = state.gamma.copy()
    map_lp = state.log_posterior
    accepted_total = 0

    for t in range(1, cfg.iterations + 1):
        if cfg.sampler == "parni":
            plan = sample_indicator(ts, state, rng)
            out = propose(state, plan, ts, ds, prior, cache, rng)
            candidate, log_ratio, evals_t = out.candidate, out.log_accept_ratio, out.evals
        else:
            candidate, log_ratio = adr_propose(state, ds, prior, cache, rng)
            evals_t = 0 if candidate is state else 1
        accept = rng.random() < math.exp(min(0.0, log_ratio))
        if accept:
            state = candidate
        accepted_total += accept

        if not math.isfinite(state.log_posterior):
            bad = np.nonzero(~np.isfinite(state.node_scores))[0]
            raise RuntimeError(
                f"non-finite score at iteration {t}"
                + (f" (node {bad[0]})" if bad.size else "")
            )

        if t > cfg.burn_in:
            pep_sum += state.gamma
            pep_count += 1
            if state_counts is not None:
                key = state.gamma.tobytes()
                state_counts[key] = state_counts.get(key, 0) + 1
        if state.log_posterior > map_lp:
            map_lp = state.log_posterior
            map_gamma = state.gamma.copy()
        if t % cfg.thin == 0:
            rows.append((t, state.log_posterior, state.edge_count, evals_t, accept))

        if cfg.sampler == "parni" and (
            cfg.adaptation == "on"
            or (cfg.adaptation == "freeze-after-burnin" and t <= cfg.burn_in)
        ):
            update_eta(ts, state, t, cfg.burn_in)
            update_omega(ts, evals_t, t)

    trace = np.array(rows, dtype=TRACE_DTYPE)
    pep = pep_sum / pep_count if pep_count else pep_sum
    return ChainOutput(
        trace=trace,
        pep=pep,
        map_dag=map_gamma,
        map_log_posterior=map_lp,
        acceptance_rate=accepted_total / cfg.iterations,
        state_counts=state_counts,
        warm=warm,
    )


def run_replicated(
    cfg: RunConfig,
    ds: ScoredDataset,
    sk: Skeleton | None = None,
    chains: int = 1,
    reference_pep: np.ndarray | None = None,
):
    """Run independent chains with seeds seed, seed+1, ... and summarize.

    Returns (list of ChainOutput, summary dict).  The summary holds per-edge
    mean and standard deviation of the chain PEP estimates, per-chain
    acceptance rates, and (given a reference PEP matrix) the median of the
    per-chain mean squared errors.
    """
    if chains < 1:
        raise ValueError("chains must be at least 1")
    outputs = []
    for c in range(chains):
        out = run_chain(replace(cfg, seed=cfg.seed + c), ds, sk)
        log.info("chain %d/%d done: acceptance %.3f", c + 1, chains, out.acceptance_rate)
        outputs.append(out)
    peps = np.stack([o.pep for o in outputs])
    summary = {
        "chains": chains,
        "pep_mean": peps.mean(axis=0),
        "pep_std": peps.std(axis=0),
        "acceptance_rates": [o.acceptance_rate for o in outputs],
        "mse_median": (
            float(np.median([pep_mse(o.pep, reference_pep) for o in outputs]))
            if reference_pep is not None
            else None
        ),
    }
    return outputs, summary
