"""
k-means baseline: Lloyd iterations from k-means++ seeding with restarts.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from config import settings, logger
from app.core.dataset import Dataset
from app.core.dkernel import Partition
from app.core.exceptions import InvalidSpecError
from app.core.rng import make_rng, spawn_seeds
from app.services.kbc import ClusteringResult


@dataclass(frozen=True)
class KmeansParams:
    """k-means parameters; unset fields come from settings."""

    k: int
    n_init: int = field(default_factory=lambda: settings.kmeans_n_init)
    max_iters: int = field(default_factory=lambda: settings.kmeans_max_iters)
    tol: float = field(default_factory=lambda: settings.kmeans_tol)
    seed: int = 0

    def validate(self, n: int) -> None:
        if self.k < 1:
            raise InvalidSpecError(f"k-means needs k >= 1, got {self.k}")
        if self.k > n:
            raise InvalidSpecError(f"k={self.k} exceeds the number of points n={n}")
        if self.n_init < 1 or self.max_iters < 1:
            raise InvalidSpecError("k-means needs n_init >= 1 and max_iters >= 1")
        if self.tol < 0:
            raise InvalidSpecError(f"k-means needs tol >= 0, got {self.tol}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class _Restart:
    labels: np.ndarray
    centroids: np.ndarray
    sse: float
    trace: List[float]
    n_iters: int
    converged: bool


def kmeans_plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """
    k-means++ seeding: each new centroid is a data point drawn with probability
    proportional to its squared distance to the nearest centroid chosen so far.
    """
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(0, n)]
    closest = cdist(points, centroids[:1], "sqeuclidean")[:, 0]

    for i in range(1, k):
        total = closest.sum()
        if total > 0:
            index = rng.choice(n, p=closest / total)
        else:
            # Every point coincides with a centroid
            index = rng.integers(0, n)
        centroids[i] = points[index]
        closest = np.minimum(closest, cdist(points, centroids[i:i + 1], "sqeuclidean")[:, 0])

    return centroids


def _assign(points: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point (lowest index on ties) and the squared distance."""
    d2 = cdist(points, centroids, "sqeuclidean")
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(points.shape[0]), labels]


def _fill_empty(labels: np.ndarray, dist: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Farthest points paired with the empty cluster ids, both in ascending priority."""
    empty = np.flatnonzero(np.bincount(labels, minlength=k) == 0)
    order = np.argsort(-dist, kind="stable")
    return order[:empty.shape[0]], empty


def _final_assignment(points: np.ndarray, centroids: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Nearest-centroid labels with empty clusters filled by the farthest points.

    After such a move the centroids are the means of the repaired clusters and
    the SSE is measured against them.
    """
    labels, dist = _assign(points, centroids)
    far, empty = _fill_empty(labels, dist, k)
    if empty.shape[0] == 0:
        return labels, centroids, float(dist.sum())

    labels[far] = empty
    sizes = np.bincount(labels, minlength=k)
    updated = centroids.copy()
    sums = np.zeros_like(centroids)
    np.add.at(sums, labels, points)
    nonempty = sizes > 0
    updated[nonempty] = sums[nonempty] / sizes[nonempty, None]
    sse = float(((points - updated[labels]) ** 2).sum())
    return labels, updated, sse


def _lloyd(points: np.ndarray, params: KmeansParams, seed: int) -> _Restart:
    rng = make_rng(seed)
    k = params.k
    centroids = kmeans_plusplus_init(points, k, rng)
    trace: List[float] = []
    converged = False
    n_iters = 0

    for n_iters in range(1, params.max_iters + 1):
        labels, dist = _assign(points, centroids)
        trace.append(-float(dist.sum()))

        updated = np.zeros_like(centroids)
        np.add.at(updated, labels, points)
        sizes = np.bincount(labels, minlength=k)
        nonempty = sizes > 0
        updated[nonempty] /= sizes[nonempty, None]

        # Reseed empty clusters at the points farthest from their centroids
        far, empty = _fill_empty(labels, dist, k)
        updated[empty] = points[far]

        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if shift < params.tol:
            converged = True
            break

    labels, centroids, sse = _final_assignment(points, centroids, k)
    return _Restart(
        labels=labels,
        centroids=centroids,
        sse=sse,
        trace=trace,
        n_iters=n_iters,
        converged=converged,
    )


def kmeans_fit(
    data: Union[Dataset, np.ndarray],
    params: KmeansParams,
    workers: int = 1
) -> ClusteringResult:
    """
    Minimise the within-cluster sum of squared distances.

    Restarts use seeds derived from ``params.seed`` and are independent, so the
    chosen restart (lowest SSE, then lowest restart index) does not depend on
    ``workers``.

    Args:
        data: Dataset or (n, d) array
        params: k-means parameters
        workers: Threads used for restarts

    Returns:
        ClusteringResult whose objective is the negative SSE

    Raises:
        InvalidSpecError: If k > n or a parameter is out of range
    """
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    params.validate(points.shape[0])

    seeds = spawn_seeds(params.seed, params.n_init)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            restarts = list(executor.map(lambda s: _lloyd(points, params, s), seeds))
    else:
        restarts = [_lloyd(points, params, s) for s in seeds]

    best_index = 0
    for i, restart in enumerate(restarts):
        if restart.sse < restarts[best_index].sse:
            best_index = i
    best = restarts[best_index]

    logger.debug(
        f"k-means: k={params.k}, best restart {best_index}/{params.n_init}, "
        f"SSE={best.sse:.6f}, iterations={best.n_iters}"
    )
    return ClusteringResult(
        partition=Partition(labels=best.labels, k=params.k),
        objective=-best.sse,
        params=params,
        seed=params.seed,
        n_refine_iters=best.n_iters,
        method="kmeans",
        objective_trace=best.trace,
        stop_reason="converged" if best.converged else "max_iters",
        centroids=best.centroids,
    )
