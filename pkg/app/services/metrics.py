"""
External clustering metrics: contingency tables, NMI and ARI.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score

from app.core.exceptions import ShapeError


@dataclass(frozen=True, eq=False)
class Contingency:
    """Counts n_ij of points with truth class i and predicted cluster j."""

    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def is_bijection(self) -> bool:
        """True when the two labelings are identical up to relabelling."""
        nonzero = np.count_nonzero(self.counts)
        return nonzero == self.counts.shape[0] == self.counts.shape[1]


def _check_labelings(truth, pred, min_length: int = 1):
    truth = np.asarray(truth).reshape(-1)
    pred = np.asarray(pred).reshape(-1)
    if truth.shape[0] != pred.shape[0]:
        raise ShapeError(f"Label vectors differ in length: {truth.shape[0]} vs {pred.shape[0]}")
    if truth.shape[0] < min_length:
        raise ShapeError(f"Need at least {min_length} labels, got {truth.shape[0]}")
    return truth, pred


def contingency(truth, pred) -> Contingency:
    """
    Build the contingency table of two labelings.

    Raises:
        ShapeError: If the labelings differ in length
    """
    truth, pred = _check_labelings(truth, pred)
    classes, class_idx = np.unique(truth, return_inverse=True)
    clusters, cluster_idx = np.unique(pred, return_inverse=True)
    # coo_matrix sums duplicate (row, col) entries, giving the histogram
    table = sp.coo_matrix(
        (np.ones(class_idx.shape[0], dtype=np.int64), (class_idx.ravel(), cluster_idx.ravel())),
        shape=(classes.shape[0], clusters.shape[0]),
        dtype=np.int64,
    ).toarray()
    return Contingency(counts=table)


def pair_counts(truth, pred) -> np.ndarray:
    """
    2x2 pair confusion matrix over ordered pairs of distinct points.

    Entry [1, 1] counts pairs together in both labelings, [1, 0] pairs together
    only in truth, [0, 1] together only in pred and [0, 0] apart in both.
    """
    table = contingency(truth, pred).counts
    n = int(table.sum())
    sum_squares = int(np.sum(table.astype(np.int64) ** 2))
    a = table.sum(axis=1).astype(np.int64)
    b = table.sum(axis=0).astype(np.int64)

    pairs = np.empty((2, 2), dtype=np.int64)
    pairs[1, 1] = sum_squares - n
    pairs[0, 1] = int(np.sum(b ** 2)) - sum_squares
    pairs[1, 0] = int(np.sum(a ** 2)) - sum_squares
    pairs[0, 0] = n * n - pairs[0, 1] - pairs[1, 0] - sum_squares
    return pairs


def _entropy(sizes: np.ndarray, n: int) -> float:
    p = sizes[sizes > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred) -> float:
    """
    Normalized Mutual Information, I(U;V) / sqrt(H(U) * H(V)) with natural logs.

    When either entropy is zero the score is 1 for labelings identical up to
    relabelling and 0 otherwise.

    Raises:
        ShapeError: If the labelings differ in length or are empty
    """
    truth, pred = _check_labelings(truth, pred)
    table = contingency(truth, pred)
    n = table.n
    if _entropy(table.row_sums, n) == 0.0 or _entropy(table.col_sums, n) == 0.0:
        return 1.0 if table.is_bijection() else 0.0

    value = normalized_mutual_info_score(truth, pred, average_method="geometric")
    return float(min(max(value, 0.0), 1.0))


def ari(truth, pred) -> float:
    """
    Adjusted Rand Index.

    A zero denominator scores 1 for labelings identical up to relabelling and 0
    otherwise.

    Raises:
        ShapeError: If the labelings differ in length or have fewer than 2 points
    """
    truth, pred = _check_labelings(truth, pred, min_length=2)
    (tn, fp), (fn, tp) = pair_counts(truth, pred).tolist()

    denominator = (tp + fn) * (fn + tn) + (tp + fp) * (fp + tn)
    if denominator == 0:
        return 1.0 if contingency(truth, pred).is_bijection() else 0.0
    return float(adjusted_rand_score(truth, pred))
