import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagsampler import FlipSet, flip, hamming, incremental_acyclicity, is_acyclic
from dagsampler.graphs import (
    column_masks,
    read_adjacency_csv,
    read_edge_list,
    write_adjacency_csv,
    write_edge_list,
)
from dagsampler.scores import make_state
from conftest import random_dag


def dag_state(gamma, ds3, prior):
    from dagsampler import ScoreCache

    return make_state(ds3, prior, gamma, ScoreCache())


class TestIsAcyclic:
    def test_empty_graph(self):
        assert is_acyclic(np.zeros((2, 2), dtype=int))

    def test_two_cycle(self):
        g = np.zeros((2, 2), dtype=int)
        g[0, 1] = g[1, 0] = 1
        assert not is_acyclic(g)

    def test_three_cycle(self):
        g = np.zeros((3, 3), dtype=int)
        g[0, 1] = g[1, 2] = g[2, 0] = 1
        assert not is_acyclic(g)

    def test_chain_is_acyclic(self):
        g = np.zeros((3, 3), dtype=int)
        g[0, 1] = g[1, 2] = 1
        assert is_acyclic(g)

    def test_nonzero_diagonal_rejected(self):
        g = np.eye(3, dtype=int)
        with pytest.raises(ValueError, match="diagonal"):
            is_acyclic(g)

    @pytest.mark.parametrize("n,count", [(1, 1), (2, 3), (3, 25), (4, 543)])
    def test_dag_counts(self, n, count):
        positions = [(i, j) for i in range(n) for j in range(n) if i != j]
        total = 0
        for bits in itertools.product((0, 1), repeat=len(positions)):
            g = np.zeros((n, n), dtype=np.int8)
            for (i, j), b in zip(positions, bits):
                g[i, j] = b
            total += is_acyclic(g)
        assert total == count


class TestFlip:
    def test_single_addition(self):
        g = np.zeros((2, 2), dtype=np.int8)
        out = flip(g, FlipSet(((0, 1),)))
        assert out[0, 1] == 1 and out.sum() == 1
        assert g.sum() == 0  # input untouched

    def test_reversal_pair(self):
        g = np.zeros((2, 2), dtype=np.int8)
        g[0, 1] = 1
        out = flip(g, FlipSet(((0, 1), (1, 0))))
        assert out[0, 1] == 0 and out[1, 0] == 1

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_involution(self, data):
        n = data.draw(st.integers(2, 6))
        bits = data.draw(st.lists(st.integers(0, 1), min_size=n * n, max_size=n * n))
        g = np.array(bits, dtype=np.int8).reshape(n, n)
        np.fill_diagonal(g, 0)
        i = data.draw(st.integers(0, n - 1))
        j = data.draw(st.integers(0, n - 1).filter(lambda x: x != i))
        fs = data.draw(st.sampled_from([FlipSet(((i, j),)), FlipSet(((i, j), (j, i)))]))
        assert np.array_equal(flip(flip(g, fs), fs), g)

    def test_flipset_validation(self):
        with pytest.raises(ValueError, match="diagonal"):
            FlipSet(((1, 1),))
        with pytest.raises(ValueError, match="mirrored"):
            FlipSet(((0, 1), (0, 2)))
        with pytest.raises(ValueError):
            FlipSet(())


class TestIncrementalAcyclicity:
    def test_deletion_always_acyclic(self, ds3, prior):
        g = np.zeros((3, 3), dtype=np.int8)
        g[0, 1] = g[1, 2] = 1
        st_ = dag_state(g, ds3, prior)
        assert incremental_acyclicity(st_, FlipSet(((0, 1),)))

    def test_cycle_closing_addition(self, ds3, prior):
        g = np.zeros((3, 3), dtype=np.int8)
        g[0, 1] = g[1, 2] = 1
        st_ = dag_state(g, ds3, prior)
        assert not incremental_acyclicity(st_, FlipSet(((2, 0),)))

    def test_agrees_with_oracle_on_random_pairs(self, ds3, prior):
        # 10,000 random (state, flip set) pairs at n=8 against is_acyclic(flip(...))
        rng = np.random.default_rng(42)
        n = 8
        from dagsampler import ScoreCache
        from dagsampler.graphs import DagState

        for _ in range(10_000):
            g = random_dag(n, rng.uniform(0.1, 0.5), rng)
            # a bare state is enough: the check only reads gamma
            state = DagState(
                gamma=g, edge_count=int(g.sum()), node_scores=np.zeros(n), log_posterior=0.0,
                col_masks=column_masks(g),
            )
            i, j = rng.integers(0, n, size=2)
            while i == j:
                i, j = rng.integers(0, n, size=2)
            fs = FlipSet(((int(i), int(j)),)) if rng.random() < 0.5 else FlipSet(
                ((int(i), int(j)), (int(j), int(i)))
            )
            assert incremental_acyclicity(state, fs) == is_acyclic(flip(state, fs))


class TestHamming:
    def test_identical(self):
        g = np.eye(3, dtype=int) * 0
        assert hamming(g, g) == 0

    def test_one_entry(self):
        a = np.zeros((3, 3), dtype=int)
        b = a.copy()
        b[0, 1] = 1
        assert hamming(a, b) == 1

    def test_reversal_is_two(self):
        a = np.zeros((2, 2), dtype=int)
        a[0, 1] = 1
        b = np.zeros((2, 2), dtype=int)
        b[1, 0] = 1
        assert hamming(a, b) == 2

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            hamming(np.zeros((2, 2)), np.zeros((3, 3)))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2**20))
    def test_symmetry(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.integers(0, 2, size=(n, n))
        b = rng.integers(0, 2, size=(n, n))
        assert hamming(a, b) == hamming(b, a)


class TestSerialization:
    def test_edge_list_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        g = random_dag(5, 0.4, rng)
        path = tmp_path / "dag.edges"
        write_edge_list(g, path)
        assert np.array_equal(read_edge_list(path, 5), g)

    def test_edge_list_rejects_bad_lines(self, tmp_path):
        path = tmp_path / "bad.edges"
        path.write_text("0 1 2\n")
        with pytest.raises(ValueError, match="expected"):
            read_edge_list(path, 3)

    def test_adjacency_csv_round_trip(self, tmp_path):
        m = np.random.default_rng(0).random((4, 4))
        path = tmp_path / "m.csv"
        write_adjacency_csv(m, path)
        assert np.allclose(read_adjacency_csv(path), m, atol=0)

    def test_column_masks(self):
        g = np.zeros((3, 3), dtype=np.int8)
        g[0, 2] = g[1, 2] = 1
        assert column_masks(g) == [0, 0, 0b011]
