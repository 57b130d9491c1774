"""DAG indicator matrices: acyclicity checks, flips, Hamming distance, serialization.

The sampler state is a dense binary adjacency matrix ``gamma`` with
``gamma[i, j] == 1`` meaning an edge from node i to node j.  Diagonal
entries are structurally excluded: no operation here ever addresses
``(j, j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DagState",
    "FlipSet",
    "is_acyclic",
    "flip",
    "incremental_acyclicity",
    "acyclic_after_toggles",
    "hamming",
    "column_masks",
    "read_edge_list",
    "write_edge_list",
    "read_adjacency_csv",
    "write_adjacency_csv",
]


@dataclass
class FlipSet:
    """One or two off-diagonal positions to toggle; two positions must be mirrored."""

    positions: tuple

    def __post_init__(self):
        pos = tuple((int(i), int(j)) for i, j in self.positions)
        if len(pos) not in (1, 2):
            raise ValueError("flip set must contain one or two positions")
        for i, j in pos:
            if i == j:
                raise ValueError(f"flip set addresses diagonal entry ({i}, {i})")
        if len(pos) == 2:
            (i, j), (k, l) = pos
            if (k, l) != (j, i):
                raise ValueError("a two-position flip set must be a mirrored pair")
        self.positions = pos


@dataclass
class DagState:
    """A DAG indicator with cached per-node scores.

    ``node_scores[j]`` holds the log marginal likelihood of column j given its
    parent set, and ``log_posterior`` equals ``node_scores.sum() +
    edge_count * log(h / (1 - h))``.  ``col_masks`` (parent bitmasks) and
    ``children`` (adjacency lists) are redundant views of ``gamma`` kept for
    fast scoring keys and reachability queries.  States are value types: one
    chain owns one state and proposals never mutate their input.
    """

    gamma: np.ndarray
    edge_count: int
    node_scores: np.ndarray
    log_posterior: float
    col_masks: list = field(default_factory=list)
    children: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    def copy(self) -> "DagState":
        return DagState(
            gamma=self.gamma.copy(),
            edge_count=self.edge_count,
            node_scores=self.node_scores.copy(),
            log_posterior=self.log_posterior,
            col_masks=list(self.col_masks),
            children=[list(c) for c in self.children],
        )


def column_masks(gamma: np.ndarray) -> list:
    """Per-column parent bitmasks: bit i of masks[j] is set iff gamma[i, j] == 1."""
    n = gamma.shape[0]
    masks = []
    for j in range(n):
        m = 0
        for i in np.nonzero(gamma[:, j])[0]:
            m |= 1 << int(i)
        masks.append(m)
    return masks


def children_lists(gamma: np.ndarray) -> list:
    """Adjacency lists: children_lists(g)[i] holds the heads of i's out-edges."""
    return [[int(v) for v in np.nonzero(row)[0]] for row in gamma]


def _check_square(gamma: np.ndarray) -> np.ndarray:
    gamma = np.asarray(gamma)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ValueError(f"adjacency matrix must be square, got shape {gamma.shape}")
    return gamma


def is_acyclic(gamma: np.ndarray) -> bool:
    """Reference acyclicity check (Kahn's algorithm); the correctness oracle.

    Raises ValueError on nonzero diagonal entries.
    """
    gamma = _check_square(gamma)
    if np.any(np.diagonal(gamma) != 0):
        raise ValueError("adjacency matrix has nonzero diagonal entries (self-loops)")
    n = gamma.shape[0]
    indegree = np.asarray(gamma, dtype=np.int64).sum(axis=0)
    stack = [j for j in range(n) if indegree[j] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in np.nonzero(gamma[u])[0]:
            indegree[v] -= 1
            if indegree[v] == 0:
                stack.append(int(v))
    return seen == n


def flip(state, fs: FlipSet) -> np.ndarray:
    """Return a copy of the adjacency with the flip-set positions toggled.

    Accepts a DagState or a bare matrix; the input is never modified.  The
    result may be cyclic; callers must validate.
    """
    gamma = state.gamma if isinstance(state, DagState) else np.asarray(state)
    out = gamma.copy()
    for i, j in fs.positions:
        out[i, j] = 1 - out[i, j]
    return out


def _reachable(gamma: np.ndarray, src: int, dst: int, skip_edge=None, children=None) -> bool:
    """Depth-first search for a directed path src -> dst, optionally ignoring one edge."""
    if src == dst:
        return True
    if children is None:
        children = [np.nonzero(row)[0] for row in gamma]
    visited = [False] * gamma.shape[0]
    visited[src] = True
    stack = [src]
    while stack:
        u = stack.pop()
        for v in children[u]:
            v = int(v)
            if skip_edge is not None and (u, v) == skip_edge:
                continue
            if v == dst:
                return True
            if not visited[v]:
                visited[v] = True
                stack.append(v)
    return False


def acyclic_after_toggles(gamma: np.ndarray, positions, children=None) -> bool:
    """Whether toggling the given off-diagonal positions of a DAG stays acyclic.

    Positions must be a single entry or a mirrored pair (the only shapes the
    proposals generate).  Deletions alone keep a DAG acyclic; a single
    addition needs one reachability query from the new edge's head back to
    its tail; a mirrored pair that adds both directions is a 2-cycle.
    ``children`` may pass precomputed adjacency lists of ``gamma``.
    """
    adds = []
    dels = []
    for i, j in positions:
        (dels if gamma[i, j] else adds).append((i, j))
    if not adds:
        return True
    if len(adds) == 2:
        return False
    (a, b) = adds[0]
    if gamma[b, a] == 1 and (b, a) not in dels:
        return False
    skip = dels[0] if dels else None
    return not _reachable(gamma, b, a, skip_edge=skip, children=children)


def incremental_acyclicity(state: DagState, fs: FlipSet) -> bool:
    """Fast equivalent of ``is_acyclic(flip(state, fs))`` for a valid DagState."""
    return acyclic_after_toggles(state.gamma, fs.positions, children=state.children or None)


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    """Number of differing entries between two equally shaped binary matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return int(np.sum(a != b))


def write_edge_list(gamma: np.ndarray, path) -> None:
    """Write a DAG as one "i j" pair per line (0-based)."""
    with open(path, "w") as fh:
        for i, j in np.argwhere(np.asarray(gamma) != 0):
            fh.write(f"{i} {j}\n")


def read_edge_list(path, n: int) -> np.ndarray:
    """Read an "i j" edge-list file into an n-by-n binary adjacency matrix."""
    gamma = np.zeros((n, n), dtype=np.int8)
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'i j', got {line!r}")
            i, j = int(parts[0]), int(parts[1])
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"{path}:{lineno}: invalid edge ({i}, {j}) for n={n}")
            gamma[i, j] = 1
    return gamma


def write_adjacency_csv(matrix: np.ndarray, path) -> None:
    """Write a matrix as plain CSV, one row per line (full float precision)."""
    matrix = np.asarray(matrix)
    with open(path, "w") as fh:
        for row in matrix:
            fh.write(",".join(repr(float(v)) if matrix.dtype.kind == "f" else str(int(v)) for v in row))
            fh.write("\n")


def read_adjacency_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from exc
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    return np.asarray(rows, dtype=float)
