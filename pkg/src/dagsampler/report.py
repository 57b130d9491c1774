"""Figure rendering for run reports: trace plots and PEP heatmaps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_trace_figure", "save_pep_figure"]


def save_trace_figure(traces, path) -> None:
    """Plot log posterior against iteration for one or more chains."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for c, trace in enumerate(traces):
        ax.plot(trace["iteration"], trace["log_posterior"], lw=0.8, label=f"chain {c}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("log posterior")
    if len(traces) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pep_figure(pep: np.ndarray, path) -> None:
    """Heatmap of the posterior edge-probability matrix."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(pep, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xlabel("child node")
    ax.set_ylabel("parent node")
    fig.colorbar(im, ax=ax, label="edge probability")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
