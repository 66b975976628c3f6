"""
Tests for NMI, ARI and the contingency table.
"""
from itertools import combinations
from math import comb, log, sqrt

import numpy as np
import pytest

from app.core.exceptions import ShapeError
from app.core.rng import make_rng
from app.services.metrics import ari, contingency, nmi, pair_counts


def same_up_to_relabelling(truth, pred):
    forward, backward = {}, {}
    for a, b in zip(truth, pred):
        if forward.setdefault(a, b) != b or backward.setdefault(b, a) != a:
            return False
    return True


def ari_by_pair_counting(truth, pred):
    """Hubert-Arabie ARI from explicit unordered pair counts."""
    n = len(truth)
    index = sum(1 for i, j in combinations(range(n), 2) if truth[i] == truth[j] and pred[i] == pred[j])
    sum_a = sum(comb(list(truth).count(c), 2) for c in set(truth))
    sum_b = sum(comb(list(pred).count(c), 2) for c in set(pred))
    expected = sum_a * sum_b / comb(n, 2)
    maximum = (sum_a + sum_b) / 2
    if maximum == expected:
        return 1.0 if same_up_to_relabelling(truth, pred) else 0.0
    return (index - expected) / (maximum - expected)


def nmi_by_probability_tables(truth, pred):
    n = len(truth)
    p_u = {u: list(truth).count(u) / n for u in set(truth)}
    p_v = {v: list(pred).count(v) / n for v in set(pred)}
    h_u = -sum(p * log(p) for p in p_u.values())
    h_v = -sum(p * log(p) for p in p_v.values())
    if h_u == 0 or h_v == 0:
        return 1.0 if same_up_to_relabelling(truth, pred) else 0.0
    mi = 0.0
    for u in p_u:
        for v in p_v:
            p_uv = sum(1 for a, b in zip(truth, pred) if a == u and b == v) / n
            if p_uv > 0:
                mi += p_uv * log(p_uv / (p_u[u] * p_v[v]))
    return mi / sqrt(h_u * h_v)


class TestContingency:
    """Test the contingency table."""

    def test_counts(self):
        table = contingency([0, 0, 1, 1, 1], [1, 0, 0, 0, 2])

        assert table.counts.tolist() == [[1, 1, 0], [2, 0, 1]]
        assert table.n == 5
        assert table.row_sums.tolist() == [2, 3]
        assert table.col_sums.tolist() == [3, 1, 1]

    def test_arbitrary_label_values(self):
        table = contingency([7, 7, -3], ["b", "a", "a"])

        assert table.counts.sum() == 3
        assert table.counts.shape == (2, 2)

    def test_bijection(self):
        assert contingency([0, 0, 1], [5, 5, 2]).is_bijection()
        assert not contingency([0, 0, 1], [5, 2, 2]).is_bijection()

    def test_pair_counts_total(self):
        pairs = pair_counts([0, 0, 1, 1, 2], [0, 1, 1, 1, 1])

        assert int(pairs.sum()) == 5 * 4

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            contingency([0, 1], [0])


class TestNmi:
    """Test normalized mutual information."""

    def test_identical(self):
        assert nmi([0, 0, 1, 1, 2], [0, 0, 1, 1, 2]) == pytest.approx(1.0)

    def test_independent(self):
        assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_relabelled(self):
        assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)

    def test_single_cluster_both(self):
        assert nmi([0, 0, 0], [3, 3, 3]) == 1.0

    def test_single_cluster_one_side(self):
        assert nmi([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            nmi([0, 1, 1], [0, 1])

    def test_empty(self):
        with pytest.raises(ShapeError):
            nmi([], [])


class TestAri:
    """Test the adjusted Rand index."""

    def test_relabelled(self):
        assert ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0

    def test_hand_computed_zero(self):
        assert ari([0, 0, 1, 1], [0, 1, 1, 1]) == 0.0

    def test_identical(self):
        assert ari([0, 1, 2, 0, 1], [0, 1, 2, 0, 1]) == 1.0

    def test_all_singletons(self):
        assert ari([0, 1, 2], [2, 1, 0]) == 1.0

    def test_needs_two_points(self):
        with pytest.raises(ShapeError):
            ari([0], [0])

    def test_random_permutations_average_zero(self):
        rng = make_rng(0)
        truth = rng.integers(0, 4, size=200)

        scores = [ari(truth, rng.permutation(truth)) for _ in range(1000)]

        assert abs(float(np.mean(scores))) < 0.05
        assert max(scores) <= 1.0


class TestAgainstDefinitions:
    """Compare with direct from-definition computations on random labelings."""

    def test_random_instances(self):
        rng = make_rng(2024)
        for _ in range(200):
            n = int(rng.integers(2, 11))
            truth = rng.integers(0, int(rng.integers(1, 5)), size=n).tolist()
            pred = rng.integers(0, int(rng.integers(1, 5)), size=n).tolist()

            assert ari(truth, pred) == pytest.approx(ari_by_pair_counting(truth, pred), abs=1e-12)
            assert nmi(truth, pred) == pytest.approx(
                min(max(nmi_by_probability_tables(truth, pred), 0.0), 1.0), abs=1e-12
            )

    def test_symmetry_and_relabelling(self):
        rng = make_rng(7)
        for _ in range(50):
            truth = rng.integers(0, 3, size=12)
            pred = rng.integers(0, 4, size=12)
            shuffled = rng.permutation(4)[pred]

            assert nmi(truth, pred) == pytest.approx(nmi(pred, truth), abs=1e-12)
            assert ari(truth, pred) == pytest.approx(ari(pred, truth), abs=1e-12)
            assert nmi(truth, pred) == pytest.approx(nmi(truth, shuffled), abs=1e-12)
            assert ari(truth, pred) == pytest.approx(ari(truth, shuffled), abs=1e-12)
