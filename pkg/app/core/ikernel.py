"""
Isolation Kernel.

A model holds t independent Voronoi partitions of the input space, each induced by
psi distinct anchor points sampled from the data. A point's feature vector records
the nearest anchor (its cell) in every partition, and the similarity of two points
is the fraction of partitions in which they share a cell. Dense regions receive
more anchors and therefore smaller cells, which makes the similarity data dependent.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist

from config import logger
from app.core.exceptions import (
    DegenerateDataError,
    InsufficientDataError,
    InvalidSpecError,
    ShapeError,
)
from app.core.rng import make_rng, spawn_seeds

if TYPE_CHECKING:
    from app.core.dataset import Dataset

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """
    Sparse feature map of one point.

    ``cell_ids[p]`` is the nearest anchor in partition p. The implied dense vector
    lives in R^(t*psi) and holds 1/sqrt(t) at positions p*psi + cell_ids[p].
    """

    cell_ids: np.ndarray
    psi: int

    @property
    def t(self) -> int:
        return int(self.cell_ids.shape[0])

    def active_positions(self) -> np.ndarray:
        """Flat indices of the t non-zero entries."""
        return np.arange(self.t) * self.psi + self.cell_ids

    def dot(self, other: "FeatureVector") -> float:
        """Inner product, computed exactly as the fraction of shared cells."""
        if other.t != self.t or other.psi != self.psi:
            raise ShapeError(
                f"Feature vectors from different models: (t={self.t}, psi={self.psi}) "
                f"vs (t={other.t}, psi={other.psi})"
            )
        return int(np.count_nonzero(self.cell_ids == other.cell_ids)) / self.t

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.t * self.psi)
        dense[self.active_positions()] = 1.0 / np.sqrt(self.t)
        return dense


@dataclass(frozen=True, eq=False)
class IsolationModel:
    """Fitted Isolation Kernel: anchors has shape (t, psi, d)."""

    anchors: np.ndarray
    psi: int
    t: int
    d: int
    seed: int

    def __post_init__(self):
        anchors = np.array(self.anchors, dtype=np.float64)
        if anchors.shape != (self.t, self.psi, self.d):
            raise ShapeError(
                f"Anchor array shape {anchors.shape} does not match "
                f"(t={self.t}, psi={self.psi}, d={self.d})"
            )
        anchors.flags.writeable = False
        object.__setattr__(self, "anchors", anchors)

    @property
    def dim(self) -> int:
        """Length of the dense feature vector."""
        return self.t * self.psi

    def _check_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points.reshape(1, -1)
        if points.ndim != 2 or points.shape[1] != self.d:
            raise ShapeError(f"Expected points of dimension {self.d}, got shape {points.shape}")
        return points

    def transform_many(self, points: np.ndarray) -> np.ndarray:
        """
        Map points to their cells in every partition.

        Args:
            points: (n, d) array

        Returns:
            (n, t) integer array; ties go to the lowest anchor index

        Raises:
            ShapeError: If the points do not have dimension d
        """
        points = self._check_points(points)
        cells = np.empty((points.shape[0], self.t), dtype=np.int64)
        for p in range(self.t):
            # argmin keeps the first minimum, i.e. the lowest anchor index
            cells[:, p] = cdist(points, self.anchors[p], "sqeuclidean").argmin(axis=1)
        return cells

    def transform(self, x: np.ndarray) -> FeatureVector:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ShapeError(f"transform expects a single d-vector, got shape {x.shape}")
        return FeatureVector(cell_ids=self.transform_many(x)[0], psi=self.psi)


def _sample_distinct_rows(
    rng: np.random.Generator,
    unique_ids: np.ndarray,
    psi: int
) -> np.ndarray:
    """Draw psi row indices whose coordinates are pairwise distinct."""
    n = unique_ids.shape[0]
    rows = rng.choice(n, size=psi, replace=False)
    if np.unique(unique_ids[rows]).shape[0] == psi:
        return rows

    # Duplicate coordinates were drawn: walk a full permutation instead
    perm = rng.permutation(n)
    _, first = np.unique(unique_ids[perm], return_index=True)
    return perm[np.sort(first)[:psi]]


def fit(
    points: Union[np.ndarray, "Dataset"],
    psi: int,
    t: int,
    seed: int,
    workers: int = 1
) -> IsolationModel:
    """
    Fit an Isolation Kernel on a dataset.

    Each partition draws its anchors uniformly without replacement from the data
    rows with its own sub-seed, so the result does not depend on ``workers``.

    Args:
        points: (n, d) array or Dataset
        psi: Anchors per partition
        t: Number of partitions
        seed: Master seed
        workers: Threads used to sample partitions

    Returns:
        Fitted IsolationModel

    Raises:
        InvalidSpecError: If psi or t is below 1
        InsufficientDataError: If psi > n
        DegenerateDataError: If psi exceeds the number of distinct points
    """
    data = np.asarray(getattr(points, "points", points), dtype=np.float64)
    if data.ndim != 2:
        raise ShapeError(f"Expected an (n, d) array, got shape {data.shape}")
    if psi < 1 or t < 1:
        raise InvalidSpecError(f"Isolation Kernel needs psi >= 1 and t >= 1, got psi={psi}, t={t}")

    n, d = data.shape
    if psi > n:
        raise InsufficientDataError(f"psi={psi} exceeds the number of points n={n}")

    _, unique_ids = np.unique(data, axis=0, return_inverse=True)
    unique_ids = unique_ids.reshape(-1)
    n_distinct = int(unique_ids.max()) + 1
    if psi > n_distinct:
        raise DegenerateDataError(
            f"psi={psi} exceeds the number of distinct points ({n_distinct})"
        )

    sub_seeds = spawn_seeds(seed, t)

    def draw(sub_seed: int) -> np.ndarray:
        return data[_sample_distinct_rows(make_rng(sub_seed), unique_ids, psi)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            anchor_sets = list(executor.map(draw, sub_seeds))
    else:
        anchor_sets = [draw(sub_seed) for sub_seed in sub_seeds]

    logger.debug(f"Fitted Isolation Kernel: n={n}, d={d}, psi={psi}, t={t}, seed={seed}")
    return IsolationModel(anchors=np.stack(anchor_sets), psi=psi, t=t, d=d, seed=int(seed))


def transform(model: IsolationModel, x: np.ndarray) -> FeatureVector:
    """Feature vector of one point."""
    return model.transform(x)


def kappa(model: IsolationModel, x: np.ndarray, y: np.ndarray) -> float:
    """
    Point-to-point similarity: the fraction of partitions where x and y share a cell.

    Always an integer multiple of 1/t in [0, 1].
    """
    return model.transform(x).dot(model.transform(y))


def kappa_matrix(model: IsolationModel, points: np.ndarray) -> np.ndarray:
    """Pairwise similarities of a small point set, used as a brute-force oracle."""
    cells = model.transform_many(points)
    matches = (cells[:, None, :] == cells[None, :, :]).sum(axis=2)
    return matches / model.t


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_model(
    model: IsolationModel,
    path: Union[str, Path],
    mean_maps: Optional[Sequence] = None
) -> None:
    """
    Write the model as a versioned JSON document.

    Args:
        model: Fitted model
        path: Target file
        mean_maps: Optional cluster mean maps stored alongside the anchors
    """
    from app.core.models import IsolationModelDocument, MeanMapDocument

    document = IsolationModelDocument(
        format_version=MODEL_FORMAT_VERSION,
        psi=model.psi,
        t=model.t,
        d=model.d,
        seed=model.seed,
        anchors=model.anchors.tolist(),
        mean_maps=[
            MeanMapDocument(counts=mm.counts.tolist(), member_count=mm.member_count)
            for mm in mean_maps
        ] if mean_maps is not None else None,
    )

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Saved Isolation Kernel (psi={model.psi}, t={model.t}) to {path}")


def load_model(path: Union[str, Path]) -> IsolationModel:
    """
    Read a model written by ``save_model``.

    Raises:
        InvalidSpecError: If the document has an unsupported format version
    """
    from app.core.models import IsolationModelDocument

    document = IsolationModelDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))
    if document.format_version != MODEL_FORMAT_VERSION:
        raise InvalidSpecError(
            f"Unsupported model format version {document.format_version} "
            f"(expected {MODEL_FORMAT_VERSION})"
        )

    anchors = np.asarray(document.anchors, dtype=np.float64).reshape(
        document.t, document.psi, document.d
    )
    return IsolationModel(
        anchors=anchors,
        psi=document.psi,
        t=document.t,
        d=document.d,
        seed=document.seed,
    )
