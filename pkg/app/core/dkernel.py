"""
Distributional kernel built on the Isolation Kernel.

A cluster is summarised by its kernel mean map, the average of its members' feature
vectors. Every quantity here (distribution similarity, point-to-distribution score,
the clustering objective, graph weights) is computed from integer cell counts per
partition and divided once at the end, so the results match brute-force sums over
pairwise similarities up to a single rounding.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from config import settings, logger
from app.core.dataset import Dataset
from app.core.exceptions import EmptyClusterError, InvalidSpecError, ShapeError
from app.core.ikernel import IsolationModel

OBJECTIVE_CHECK_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class MeanMap:
    """
    Kernel mean map of a point set.

    ``counts[p, c]`` is the number of members falling in cell c of partition p, so
    every row sums to ``member_count``.
    """

    counts: np.ndarray
    member_count: int

    def __post_init__(self):
        if self.member_count < 1:
            raise EmptyClusterError("A mean map needs at least one member")

    @property
    def t(self) -> int:
        return int(self.counts.shape[0])

    @property
    def psi(self) -> int:
        return int(self.counts.shape[1])

    @property
    def weights(self) -> np.ndarray:
        """Dense vector of length t*psi: (1/|C|) times the sum of member feature vectors."""
        return self.counts.ravel() / (self.member_count * np.sqrt(self.t))

    def self_similarity(self) -> float:
        return k_dist(self, self)


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of n points to k non-empty clusters."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] < 1:
            raise ShapeError(f"Partition labels must be a non-empty vector, got shape {labels.shape}")
        if self.k < 1:
            raise InvalidSpecError(f"Partition needs k >= 1, got {self.k}")
        if labels.min() < 0 or labels.max() >= self.k:
            raise InvalidSpecError(f"Partition labels must lie in [0, {self.k})")
        sizes = np.bincount(labels, minlength=self.k)
        if np.any(sizes == 0):
            raise EmptyClusterError(f"Cluster {int(np.flatnonzero(sizes == 0)[0])} has no members")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] < 1:
            raise ShapeError(f"Partition labels must be a non-empty vector, got shape {labels.shape}")
        return cls(labels=labels, k=int(labels.max()) + 1)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def members(self, j: int) -> np.ndarray:
        """Point indices of cluster j, ascending."""
        return np.flatnonzero(self.labels == j)

    def same_as(self, other: "Partition") -> bool:
        return self.k == other.k and np.array_equal(self.labels, other.labels)


# ---------------------------------------------------------------------------
# Cell-count helpers shared with the clustering services
# ---------------------------------------------------------------------------

def cell_counts(cells: np.ndarray, psi: int) -> np.ndarray:
    """(t, psi) histogram of an (m, t) cell matrix."""
    t = cells.shape[1]
    flat = (np.arange(t) * psi + cells).ravel()
    return np.bincount(flat, minlength=t * psi).reshape(t, psi)


def cluster_counts(cells: np.ndarray, labels: np.ndarray, k: int, psi: int) -> np.ndarray:
    """(k, t, psi) histograms, one per cluster id."""
    n, t = cells.shape
    flat = (labels[:, None] * (t * psi) + np.arange(t)[None, :] * psi + cells).ravel()
    return np.bincount(flat, minlength=k * t * psi).reshape(k, t, psi)


def match_totals(cells: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """
    For every point and every cluster, the number of (member, partition) pairs
    sharing the point's cell.

    Args:
        cells: (n, t) cell matrix
        counts: (k, t, psi) cluster histograms

    Returns:
        (n, k) integer matrix
    """
    t = cells.shape[1]
    partitions = np.arange(t)[None, :]
    return np.stack([counts[j][partitions, cells].sum(axis=1) for j in range(counts.shape[0])], axis=1)


def point_scores(cells: np.ndarray, counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """(n, k) matrix of point-to-cluster similarities."""
    t = cells.shape[1]
    return match_totals(cells, counts) / (sizes[None, :].astype(np.float64) * t)


def mean_map_from_cells(cells: np.ndarray, psi: int) -> MeanMap:
    if cells.shape[0] < 1:
        raise EmptyClusterError("Cannot build a mean map of an empty point set")
    return MeanMap(counts=cell_counts(cells, psi), member_count=int(cells.shape[0]))


def _data_points(data: Union[Dataset, np.ndarray]) -> np.ndarray:
    return data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)


def _check_compatible(mm_x: MeanMap, mm_y: MeanMap) -> None:
    if mm_x.counts.shape != mm_y.counts.shape:
        raise ShapeError(
            f"Mean maps come from different models: {mm_x.counts.shape} vs {mm_y.counts.shape}"
        )


def _check_partition(data_points: np.ndarray, part: Partition) -> None:
    if part.n != data_points.shape[0]:
        raise ShapeError(f"Partition covers {part.n} points but the data has {data_points.shape[0]}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def mean_map(model: IsolationModel, points: np.ndarray) -> MeanMap:
    """
    Kernel mean map of a point set; a singleton maps to its own feature vector.

    Raises:
        EmptyClusterError: If the set is empty
        ShapeError: On dimension mismatch
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 2 and points.shape[0] == 0:
        raise EmptyClusterError("Cannot build a mean map of an empty point set")
    return mean_map_from_cells(model.transform_many(points), model.psi)


def k_dist(mm_x: MeanMap, mm_y: MeanMap) -> float:
    """Similarity of two distributions: the inner product of their mean maps."""
    _check_compatible(mm_x, mm_y)
    matches = int(np.sum(mm_x.counts * mm_y.counts))
    return matches / (mm_x.member_count * mm_y.member_count * mm_x.t)


def point_to_dist(model: IsolationModel, x: np.ndarray, mm: MeanMap) -> float:
    """Similarity of a point to a distribution: the average kappa to its members."""
    if mm.counts.shape != (model.t, model.psi):
        raise ShapeError(f"Mean map shape {mm.counts.shape} does not match the model")
    cells = model.transform(x).cell_ids
    matches = int(mm.counts[np.arange(model.t), cells].sum())
    return matches / (mm.member_count * model.t)


def objective(
    model: IsolationModel,
    data: Union[Dataset, np.ndarray],
    part: Partition,
    check: Optional[bool] = None,
    cells: Optional[np.ndarray] = None
) -> float:
    """
    Clustering objective: the sum over points of their similarity to their own cluster.

    Args:
        model: Fitted Isolation Kernel
        data: Dataset or (n, d) array
        part: Partition of the data
        check: Also evaluate the cluster-size weighted self-similarity form and
            assert agreement; defaults to ``settings.debug``
        cells: Precomputed cell matrix of the data

    Returns:
        Objective value in [sum of 1/|C|, n]
    """
    points = _data_points(data)
    _check_partition(points, part)
    if cells is None:
        cells = model.transform_many(points)

    counts = cluster_counts(cells, part.labels, part.k, model.psi)
    own = match_totals(cells, counts)[np.arange(part.n), part.labels]
    sizes = part.sizes()
    value = float(np.sum(own / (sizes[part.labels].astype(np.float64) * model.t)))

    if settings.debug if check is None else check:
        dual = _objective_dual_from_counts(counts, sizes, model.t)
        if abs(value - dual) > OBJECTIVE_CHECK_TOLERANCE:
            raise AssertionError(f"Objective forms disagree: {value} vs {dual}")
    return value


def _objective_dual_from_counts(counts: np.ndarray, sizes: np.ndarray, t: int) -> float:
    self_matches = np.sum(counts.astype(np.int64) ** 2, axis=(1, 2))
    return float(np.sum(self_matches / (sizes.astype(np.float64) * t)))


def objective_dual(
    model: IsolationModel,
    data: Union[Dataset, np.ndarray],
    part: Partition,
    cells: Optional[np.ndarray] = None
) -> float:
    """Same objective written as the sum of |C| * K(P_C, P_C)."""
    points = _data_points(data)
    _check_partition(points, part)
    if cells is None:
        cells = model.transform_many(points)
    counts = cluster_counts(cells, part.labels, part.k, model.psi)
    return _objective_dual_from_counts(counts, part.sizes(), model.t)


def total_weight(model: IsolationModel, X: np.ndarray, Y: np.ndarray) -> float:
    """
    Graph weight between two point sets: |X| * |Y| * K(P_X, P_Y).

    Raises:
        EmptyClusterError: If either set is empty
    """
    mm_x = mean_map(model, X)
    mm_y = mean_map(model, Y)
    _check_compatible(mm_x, mm_y)
    return int(np.sum(mm_x.counts * mm_y.counts)) / model.t


def cut_association_decompose(
    model: IsolationModel,
    data: Union[Dataset, np.ndarray],
    part: Partition,
    cells: Optional[np.ndarray] = None
) -> Tuple[float, float, float]:
    """
    Split the total graph weight into within-cluster association and cut.

    Within sums include the i == j diagonal terms; cut sums only cross-cluster
    pairs, so within + cut == total.

    Returns:
        (within_sum, cut_sum, total)
    """
    points = _data_points(data)
    _check_partition(points, part)
    if cells is None:
        cells = model.transform_many(points)

    counts = cluster_counts(cells, part.labels, part.k, model.psi).astype(np.int64)
    counts_all = counts.sum(axis=0)

    within = int(np.sum(counts ** 2))
    cut = int(np.sum(counts * (counts_all[None, :, :] - counts)))
    total = int(np.sum(counts_all ** 2))
    return within / model.t, cut / model.t, total / model.t


def load_mean_maps(path: Union[str, Path]) -> List[MeanMap]:
    """Mean maps stored alongside a saved model (empty when none were stored)."""
    from app.core.models import IsolationModelDocument

    document = IsolationModelDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))
    if not document.mean_maps:
        return []
    maps = [
        MeanMap(counts=np.asarray(entry.counts, dtype=np.int64), member_count=entry.member_count)
        for entry in document.mean_maps
    ]
    logger.debug(f"Loaded {len(maps)} mean maps from {path}")
    return maps
