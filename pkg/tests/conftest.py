import numpy as np
import pytest

from dagsampler import ModelPrior, ScoreCache, ScoredDataset


def random_dag(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Random DAG: random topological order, order-consistent edges with prob p."""
    order = rng.permutation(n)
    gamma = np.zeros((n, n), dtype=np.int8)
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                gamma[order[a], order[b]] = 1
    return gamma


@pytest.fixture(scope="session")
def ds3():
    """n=3 dataset with one strong dependency (x1 driven by x0)."""
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 3))
    X[:, 1] += 2.0 * X[:, 0]
    return ScoredDataset.from_raw(X)


@pytest.fixture(scope="session")
def ds2_strong():
    """n=2 dataset generated from a strong 0 -> 1 effect."""
    rng = np.random.default_rng(5)
    x0 = rng.standard_normal(200)
    x1 = 2.0 * x0 + rng.standard_normal(200)
    return ScoredDataset.from_raw(np.column_stack([x0, x1]))


@pytest.fixture(scope="session")
def prior():
    return ModelPrior(10.0, 0.1)


@pytest.fixture()
def cache():
    return ScoreCache()
