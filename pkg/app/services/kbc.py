"""
Kernel Bounded Clustering.

Clusters are treated as distributions and compared with the Isolation distributional
kernel. A run has three steps:

1. Seeding: on a random sample, points are chained whenever their similarity exceeds
   tau; the k largest chained groups seed the clusters.
2. Assignment: every point joins the seed group it is most similar to.
3. Refinement: cluster mean maps are recomputed and points reassigned for as long as
   the objective (sum of each point's similarity to its own cluster) strictly improves.
"""
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from config import settings, logger
from app.core import ikernel
from app.core.dataset import Dataset
from app.core.dkernel import (
    MeanMap,
    Partition,
    cluster_counts,
    objective,
    point_scores,
)
from app.core.exceptions import (
    AllCombinationsFailedError,
    ClusteringError,
    DegenerateAssignmentError,
    InsufficientDataError,
    InvalidSpecError,
    TauTooSmallError,
)
from app.core.ikernel import IsolationModel
from app.core.rng import make_rng, stable_hash

# Minimum gain for a refinement pass to be accepted
IMPROVEMENT_EPS = 1e-12


@dataclass(frozen=True)
class KbcParams:
    """Parameters of one KBC run. ``s=None`` means min(n, settings.kbc_sample_size)."""

    k: int
    tau: float
    psi: int
    t: int = field(default_factory=lambda: settings.ik_t)
    s: Optional[int] = None
    max_refine_iters: int = field(default_factory=lambda: settings.kbc_max_refine_iters)
    seed: int = 0

    def resolve(self, n: int) -> "KbcParams":
        """
        Validate against a dataset of n points and fill in the sample size.

        Raises:
            InvalidSpecError: If a parameter is out of range
            InsufficientDataError: If the sample size exceeds n
        """
        if self.k < 2:
            raise InvalidSpecError(f"KBC needs k >= 2, got {self.k}")
        if not -1.0 <= self.tau < 1.0:
            raise InvalidSpecError(f"tau must lie in [-1, 1), got {self.tau}")
        if self.psi < 1 or self.t < 1:
            raise InvalidSpecError(f"psi and t must be >= 1, got psi={self.psi}, t={self.t}")
        if self.max_refine_iters < 0:
            raise InvalidSpecError(f"max_refine_iters must be >= 0, got {self.max_refine_iters}")
        if self.k > n:
            raise InsufficientDataError(f"k={self.k} exceeds the number of points n={n}")

        s = self.s if self.s is not None else min(n, settings.kbc_sample_size)
        if s > n:
            raise InsufficientDataError(f"Sample size s={s} exceeds the number of points n={n}")
        if s < self.k:
            raise InvalidSpecError(f"Sample size s={s} is smaller than k={self.k}")
        return replace(self, s=s)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(eq=False)
class ClusteringResult:
    """Outcome of one clustering run (KBC or a baseline)."""

    partition: Partition
    objective: float
    params: Any
    seed: int
    n_refine_iters: int
    method: str = "kbc"
    seed_groups: Optional[List[np.ndarray]] = None
    objective_trace: List[float] = field(default_factory=list)
    stop_reason: Optional[str] = None
    model: Optional[IsolationModel] = field(default=None, repr=False)
    centroids: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def labels(self) -> np.ndarray:
        return self.partition.labels

    @property
    def k(self) -> int:
        return self.partition.k

    def to_document(self):
        """Serializable form for ``bench fit``."""
        from app.core.models import ClusteringResultDocument

        return ClusteringResultDocument(
            method=self.method,
            labels=self.labels.tolist(),
            k=self.k,
            objective=self.objective,
            params=self.params.to_dict(),
            seed=self.seed,
            n_refine_iters=self.n_refine_iters,
            seed_groups=[group.tolist() for group in self.seed_groups] if self.seed_groups else None,
            objective_trace=list(self.objective_trace),
            stop_reason=self.stop_reason,
        )


@dataclass
class RefineOutcome:
    """
    Result of the refinement step.

    ``objective_trace`` starts with the input objective and gains one entry per
    accepted pass. ``stop_reason`` is one of converged, no_improvement, max_iters
    or empty_cluster.
    """

    partition: Partition
    objective_trace: List[float]
    n_iters: int
    stop_reason: str

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


@dataclass
class TuningEntry:
    psi: int
    tau: float
    score: Optional[float] = None
    error: Optional[str] = None


@dataclass
class TuningReport:
    """Every (psi, tau) combination tried by ``tune`` with its objective/n or failure cause."""

    entries: List[TuningEntry] = field(default_factory=list)
    best_psi: Optional[int] = None
    best_tau: Optional[float] = None

    def failures(self) -> Dict[Tuple[int, float], str]:
        return {(e.psi, e.tau): e.error for e in self.entries if e.error is not None}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "best": {"psi": self.best_psi, "tau": self.best_tau},
            "entries": [asdict(entry) for entry in self.entries],
        }


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------

def _points(data: Union[Dataset, np.ndarray]) -> np.ndarray:
    return data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)


def init_clusters(
    model: IsolationModel,
    data: Union[Dataset, np.ndarray],
    sample: Sequence[int],
    k: int,
    tau: float,
    cells: Optional[np.ndarray] = None
) -> List[np.ndarray]:
    """
    Find k seed groups by tau-chaining a sample.

    Two sample points are linked when their similarity exceeds tau; a chain of
    links is a path, so the chained groups are the connected components.

    Args:
        model: Fitted Isolation Kernel
        data: Dataset or (n, d) array
        sample: Data indices of the sample
        k: Number of groups
        tau: Similarity threshold
        cells: Precomputed cell matrix of the whole data

    Returns:
        k arrays of data indices, largest component first; equal sizes are ordered
        by their smallest member index

    Raises:
        TauTooSmallError: If fewer than k components exist
    """
    sample = np.asarray(sample, dtype=np.int64)
    if sample.shape[0] < k:
        raise InvalidSpecError(f"Sample of {sample.shape[0]} points cannot seed k={k} groups")

    if cells is None:
        sample_cells = model.transform_many(_points(data)[sample])
    else:
        sample_cells = cells[sample]
    m, t = sample_cells.shape

    if tau < 0:
        # kappa >= 0 > tau links every pair
        n_components, component = 1, np.zeros(m, dtype=np.int64)
    else:
        # One-hot feature matrix: its Gram matrix counts shared cells
        columns = (np.arange(t)[None, :] * model.psi + sample_cells).ravel()
        rows = np.repeat(np.arange(m), t)
        phi = csr_matrix((np.ones(m * t, dtype=np.int64), (rows, columns)), shape=(m, t * model.psi))
        matches = (phi @ phi.T).tocoo()
        linked = matches.data / t > tau
        adjacency = csr_matrix(
            (np.ones(int(linked.sum()), dtype=np.int8), (matches.row[linked], matches.col[linked])),
            shape=(m, m)
        )
        n_components, component = connected_components(adjacency, directed=False)

    if n_components < k:
        raise TauTooSmallError(n_components, k, tau)

    groups = [np.sort(sample[component == c]) for c in range(n_components)]
    groups.sort(key=lambda g: (-g.shape[0], int(g[0])))
    logger.debug(
        f"tau={tau}: {n_components} chained groups, kept sizes {[g.shape[0] for g in groups[:k]]}"
    )
    return groups[:k]


def assign(
    model: IsolationModel,
    data: Union[Dataset, np.ndarray],
    groups: Sequence[Union[np.ndarray, MeanMap]],
    cells: Optional[np.ndarray] = None
) -> Partition:
    """
    Assign every point to the group it is most similar to.

    Args:
        model: Fitted Isolation Kernel
        data: Dataset or (n, d) array
        groups: Seed groups as data-index arrays, or cluster mean maps
        cells: Precomputed cell matrix of the data

    Returns:
        Partition with k = len(groups); ties go to the lowest group index

    Raises:
        DegenerateAssignmentError: If a group attracts no point
    """
    if len(groups) < 2:
        raise InvalidSpecError(f"Assignment needs at least 2 groups, got {len(groups)}")
    if cells is None:
        cells = model.transform_many(_points(data))

    counts, sizes = _group_counts(model, cells, groups)
    labels = np.argmax(point_scores(cells, counts, sizes), axis=1)

    assigned = np.bincount(labels, minlength=len(groups))
    if np.any(assigned == 0):
        raise DegenerateAssignmentError(int(np.flatnonzero(assigned == 0)[0]))
    return Partition(labels=labels, k=len(groups))


def _group_counts(
    model: IsolationModel,
    cells: np.ndarray,
    groups: Sequence[Union[np.ndarray, MeanMap]]
) -> Tuple[np.ndarray, np.ndarray]:
    if all(isinstance(group, MeanMap) for group in groups):
        counts = np.stack([group.counts for group in groups])
        sizes = np.array([group.member_count for group in groups])
        return counts, sizes

    indices = [np.asarray(group, dtype=np.int64) for group in groups]
    if any(idx.shape[0] == 0 for idx in indices):
        raise InvalidSpecError("Seed groups must be non-empty")
    members = np.concatenate(indices)
    group_ids = np.repeat(np.arange(len(indices)), [idx.shape[0] for idx in indices])
    counts = cluster_counts(cells[members], group_ids, len(indices), model.psi)
    sizes = np.array([idx.shape[0] for idx in indices])
    return counts, sizes


def refine(
    model: IsolationModel,
    data: Union[Dataset, np.ndarray],
    part: Partition,
    max_iters: int,
    cells: Optional[np.ndarray] = None
) -> RefineOutcome:
    """
    Greedy ascent on the objective.

    Each pass recomputes the cluster mean maps and reassigns every point by the
    argmax rule. A pass is accepted only when the objective grows by more than
    IMPROVEMENT_EPS; a pass that would empty a cluster is discarded.

    Args:
        model: Fitted Isolation Kernel
        data: Dataset or (n, d) array
        part: Starting partition
        max_iters: Maximum number of passes
        cells: Precomputed cell matrix of the data

    Returns:
        RefineOutcome whose final objective is never below the input objective
    """
    if cells is None:
        cells = model.transform_many(_points(data))

    current = part
    trace = [objective(model, data, current, cells=cells)]
    n_iters = 0
    stop_reason = "max_iters"

    for _ in range(max_iters):
        counts = cluster_counts(cells, current.labels, current.k, model.psi)
        labels = np.argmax(point_scores(cells, counts, current.sizes()), axis=1)

        if np.array_equal(labels, current.labels):
            stop_reason = "converged"
            break
        if np.any(np.bincount(labels, minlength=current.k) == 0):
            stop_reason = "empty_cluster"
            logger.debug(f"Refine pass {n_iters + 1} would empty a cluster; keeping previous partition")
            break

        candidate = Partition(labels=labels, k=current.k)
        value = objective(model, data, candidate, cells=cells)
        if value <= trace[-1] + IMPROVEMENT_EPS:
            stop_reason = "no_improvement"
            break

        current = candidate
        trace.append(value)
        n_iters += 1
        logger.debug(f"Refine pass {n_iters}: objective {value:.6f}")

    return RefineOutcome(partition=current, objective_trace=trace, n_iters=n_iters, stop_reason=stop_reason)


def _draw_sample(n: int, s: int, seed: int) -> np.ndarray:
    rng = make_rng(stable_hash(seed, "sample"))
    return np.sort(rng.choice(n, size=s, replace=False))


def _fit_with_model(
    data: Union[Dataset, np.ndarray],
    params: KbcParams,
    model: IsolationModel,
    cells: np.ndarray
) -> ClusteringResult:
    n = cells.shape[0]
    sample = _draw_sample(n, params.s, params.seed)
    groups = init_clusters(model, data, sample, params.k, params.tau, cells=cells)
    start = assign(model, data, groups, cells=cells)
    outcome = refine(model, data, start, params.max_refine_iters, cells=cells)

    return ClusteringResult(
        partition=outcome.partition,
        objective=outcome.objective,
        params=params,
        seed=params.seed,
        n_refine_iters=outcome.n_iters,
        method="kbc",
        seed_groups=groups,
        objective_trace=outcome.objective_trace,
        stop_reason=outcome.stop_reason,
        model=model,
    )


def fit(data: Union[Dataset, np.ndarray], params: KbcParams, workers: int = 1) -> ClusteringResult:
    """
    Run KBC end to end.

    The kernel is fitted with ``params.seed``; the seeding sample uses a seed derived
    from it, so the result is a pure function of (data, params).

    Args:
        data: Dataset or (n, d) array
        params: KBC parameters
        workers: Threads used to fit the kernel

    Returns:
        ClusteringResult with resolved parameters

    Raises:
        TauTooSmallError: If seeding finds fewer than k groups
        InsufficientDataError: If s > n or psi > n
    """
    points = _points(data)
    params = params.resolve(points.shape[0])
    model = ikernel.fit(points, params.psi, params.t, params.seed, workers=workers)
    cells = model.transform_many(points)

    result = _fit_with_model(data, params, model, cells)
    logger.debug(
        f"KBC fit: k={params.k}, psi={params.psi}, tau={params.tau}, "
        f"objective={result.objective:.6f}, passes={result.n_refine_iters}"
    )
    return result


def tune(
    data: Union[Dataset, np.ndarray],
    psi_grid: Sequence[int],
    tau_grid: Sequence[float],
    k: int,
    s: Optional[int] = None,
    t: Optional[int] = None,
    seed: int = 0,
    max_refine_iters: Optional[int] = None,
    workers: int = 1
) -> Tuple[KbcParams, ClusteringResult, TuningReport]:
    """
    Pick (psi, tau) by the objective normalised by n; ground truth is never used.

    Combinations that fail (tau too small, degenerate assignment, psi too large)
    are skipped and recorded. Ties go to the smaller psi, then the smaller tau.

    Raises:
        InvalidSpecError: If a grid is empty
        AllCombinationsFailedError: If every combination failed
    """
    if not psi_grid or not tau_grid:
        raise InvalidSpecError("tune needs non-empty psi and tau grids")

    points = _points(data)
    n = points.shape[0]
    base = KbcParams(
        k=k,
        tau=float(tau_grid[0]),
        psi=int(psi_grid[0]),
        t=t if t is not None else settings.ik_t,
        s=s,
        max_refine_iters=max_refine_iters if max_refine_iters is not None else settings.kbc_max_refine_iters,
        seed=seed,
    )

    report = TuningReport()
    best: Optional[Tuple[float, KbcParams, ClusteringResult]] = None

    for psi in sorted(set(int(p) for p in psi_grid)):
        try:
            model = ikernel.fit(points, psi, base.t, seed, workers=workers)
        except ClusteringError as e:
            for tau in sorted(set(float(x) for x in tau_grid)):
                report.entries.append(TuningEntry(psi=psi, tau=tau, error=str(e)))
            logger.warning(f"Skipping psi={psi}: {e}")
            continue
        cells = model.transform_many(points)

        for tau in sorted(set(float(x) for x in tau_grid)):
            params = replace(base, psi=psi, tau=tau)
            try:
                params = params.resolve(n)
                result = _fit_with_model(data, params, model, cells)
            except (TauTooSmallError, DegenerateAssignmentError, InsufficientDataError) as e:
                report.entries.append(TuningEntry(psi=psi, tau=tau, error=str(e)))
                logger.debug(f"Tuning psi={psi}, tau={tau} skipped: {e}")
                continue

            score = result.objective / n
            report.entries.append(TuningEntry(psi=psi, tau=tau, score=score))
            logger.debug(f"Tuning psi={psi}, tau={tau}: objective/n={score:.6f}")
            if best is None or score > best[0]:
                best = (score, params, result)

    if best is None:
        raise AllCombinationsFailedError(report.failures())

    _, best_params, best_result = best
    report.best_psi = best_params.psi
    report.best_tau = best_params.tau
    logger.info(
        f"Tuned KBC: psi={best_params.psi}, tau={best_params.tau}, "
        f"objective/n={best[0]:.6f} ({len(report.failures())} combination(s) failed)"
    )
    return best_params, best_result, report
