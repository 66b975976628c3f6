"""
Datasets: the in-memory point matrix, synthetic benchmark generators and CSV I/O.
"""
import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from config import logger
from app.core.exceptions import DatasetParseError, InvalidSpecError
from app.core.rng import make_rng


@dataclass(eq=False)
class Dataset:
    """An n x d matrix of finite reals with optional ground-truth cluster ids."""

    name: str
    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 1 or self.points.shape[1] < 1:
            raise InvalidSpecError(
                f"Dataset '{self.name}' needs an n x d matrix with n, d >= 1, "
                f"got shape {self.points.shape}"
            )
        if not np.all(np.isfinite(self.points)):
            raise InvalidSpecError(f"Dataset '{self.name}' contains NaN or infinite coordinates")

        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.points.shape[0],):
                raise InvalidSpecError(
                    f"Dataset '{self.name}' has {self.points.shape[0]} points "
                    f"but {self.labels.shape[0]} labels"
                )
            if self.labels.min() < 0:
                raise InvalidSpecError(f"Dataset '{self.name}' has negative label ids")
            present = np.bincount(self.labels)
            if np.any(present == 0):
                missing = int(np.flatnonzero(present == 0)[0])
                raise InvalidSpecError(
                    f"Dataset '{self.name}' label ids are not dense: id {missing} has no points"
                )

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def n_clusters(self) -> Optional[int]:
        """Number of ground-truth clusters, or None when unlabelled."""
        if self.labels is None:
            return None
        return int(self.labels.max()) + 1

    def label_counts(self) -> List[int]:
        if self.labels is None:
            return []
        return np.bincount(self.labels).tolist()

    def summary(self) -> Dict[str, Any]:
        """Short description used by the CLI and the bench logs."""
        return {
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "clusters": self.n_clusters,
        }


# ---------------------------------------------------------------------------
# Generator specifications
# ---------------------------------------------------------------------------

class GeneratorFamily(str, Enum):
    """Synthetic families that can be rebuilt from parameters."""
    TWO_CRESCENTS = "two_crescents"
    BLOBS = "blobs"
    SPIRAL = "spiral"
    RINGS_GAUSSIANS = "rings_gaussians"
    SUBSPACE_GAUSSIANS = "subspace_gaussians"


class BlobSpec(BaseModel):
    """Isotropic Gaussian component."""
    center: List[float] = Field(..., min_length=1)
    stddev: float = Field(..., ge=0)
    count: int = Field(..., ge=1)


class RingSpec(BaseModel):
    """Annulus: uniform angle, Gaussian radial jitter around ``radius``."""
    center: List[float] = Field(default_factory=lambda: [0.0, 0.0], min_length=2, max_length=2)
    radius: float = Field(..., ge=0)
    radial_std: float = Field(0.0, ge=0)
    count: int = Field(..., ge=1)


class GenSpec(BaseModel):
    """
    Parameters of one synthetic dataset.

    Only the fields of the selected family are read; defaults reproduce the
    benchmark sizes (2Crescents 1,200; spiral 312; RingG 1,536; w100Gaussians 1,000).
    """
    family: GeneratorFamily
    seed: int = Field(0, ge=0)
    name: Optional[str] = None

    # two_crescents
    n_total: int = Field(1200, ge=2)
    noise: float = Field(0.08, ge=0)
    gap: float = Field(0.0, ge=0)

    # blobs (also the blob part of rings_gaussians)
    blobs: List[BlobSpec] = Field(default_factory=list)

    # spiral
    n_per_arm: int = Field(104, ge=1)
    arms: int = Field(3, ge=1)
    turns: float = Field(1.0, gt=0)
    start_radius: float = Field(0.3, ge=0)
    arm_gap: float = Field(0.5, gt=0)

    # rings_gaussians
    rings: List[RingSpec] = Field(default_factory=list)

    # subspace_gaussians
    dim_total: int = Field(200, ge=2)
    dim_sub: int = Field(100, ge=1)
    n_per_cluster: int = Field(500, ge=1)
    stddev: float = Field(1.0, ge=0)


BlobLike = Union[BlobSpec, Tuple[Sequence[float], float, int]]
RingLike = Union[RingSpec, Tuple[Sequence[float], float, float, int]]


def _as_blob_spec(spec: BlobLike) -> BlobSpec:
    if isinstance(spec, BlobSpec):
        return spec
    center, stddev, count = spec
    if stddev < 0 or count < 1:
        raise InvalidSpecError(f"Blob spec needs stddev >= 0 and count >= 1, got {spec}")
    return BlobSpec(center=list(center), stddev=stddev, count=count)


def _as_ring_spec(spec: RingLike) -> RingSpec:
    if isinstance(spec, RingSpec):
        return spec
    center, radius, radial_std, count = spec
    if radius < 0 or radial_std < 0 or count < 1:
        raise InvalidSpecError(f"Ring spec needs radius, jitter >= 0 and count >= 1, got {spec}")
    return RingSpec(center=list(center), radius=radius, radial_std=radial_std, count=count)


def _jitter(rng: np.random.Generator, scale: float, shape: Tuple[int, ...]) -> np.ndarray:
    """Gaussian noise; exactly zero when scale is zero."""
    if scale == 0:
        return np.zeros(shape)
    return rng.normal(0.0, scale, size=shape)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def gen_two_crescents(
    n_total: int,
    noise: float,
    seed: int,
    gap: float = 0.0,
    name: str = "2Crescents"
) -> Dataset:
    """
    Two interleaved half circles.

    The upper arc is the unit semicircle at the origin; the lower arc is the
    reflected unit semicircle centred at (1, 0.5), pushed down by ``gap``.
    Arc parameters are the midpoints pi * (i + 0.5) / m, so a single point per
    arm sits on the centre of its arc.

    Args:
        n_total: Total point count, split evenly between the arms
        noise: Standard deviation of the isotropic Gaussian jitter
        seed: RNG seed
        gap: Extra vertical margin between the arms
        name: Dataset name

    Returns:
        Dataset with labels 0 (upper arc) and 1 (lower arc)

    Raises:
        InvalidSpecError: If n_total < 2, n_total is odd or noise/gap < 0
    """
    if n_total < 2 or n_total % 2 != 0:
        raise InvalidSpecError(f"two_crescents needs an even n_total >= 2, got {n_total}")
    if noise < 0 or gap < 0:
        raise InvalidSpecError("two_crescents needs noise >= 0 and gap >= 0")

    rng = make_rng(seed)
    per_arm = n_total // 2
    theta = np.pi * (np.arange(per_arm) + 0.5) / per_arm

    upper = np.column_stack([np.cos(theta), np.sin(theta)])
    lower = np.column_stack([1.0 - np.cos(theta), 0.5 - np.sin(theta) - gap])

    points = np.vstack([upper, lower]) + _jitter(rng, noise, (n_total, 2))
    labels = np.repeat([0, 1], per_arm)
    return Dataset(name=name, points=points, labels=labels)


def gen_blobs(specs: Sequence[BlobLike], seed: int, name: str = "blobs") -> Dataset:
    """
    Isotropic Gaussian clusters, one per spec, labelled in spec order.

    Args:
        specs: (center, stddev, count) tuples or BlobSpec models
        seed: RNG seed
        name: Dataset name

    Returns:
        Dataset with one label per spec
    """
    if not specs:
        raise InvalidSpecError("gen_blobs needs at least one blob spec")

    blobs = [_as_blob_spec(spec) for spec in specs]
    dims = {len(blob.center) for blob in blobs}
    if len(dims) != 1:
        raise InvalidSpecError(f"Blob centers have mixed dimensionality: {sorted(dims)}")
    d = dims.pop()

    rng = make_rng(seed)
    chunks = []
    labels = []
    for label, blob in enumerate(blobs):
        center = np.asarray(blob.center, dtype=np.float64)
        chunks.append(center + _jitter(rng, blob.stddev, (blob.count, d)))
        labels.append(np.full(blob.count, label))

    return Dataset(name=name, points=np.vstack(chunks), labels=np.concatenate(labels))


def gen_spiral(
    n_per_arm: int,
    arms: int,
    noise: float,
    seed: int,
    turns: float = 1.0,
    start_radius: float = 0.3,
    arm_gap: float = 0.5,
    name: str = "spiral"
) -> Dataset:
    """
    Archimedean spiral arms, arm j rotated by 2*pi*j/arms.

    An arm has radius start_radius + b*phi for phi in [0, 2*pi*turns], with
    b = arm_gap*arms/(2*pi) so neighbouring arms sit arm_gap apart radially.
    Points are spaced evenly along the arm using the arc length
    start_radius*phi + b*phi**2/2.
    """
    if n_per_arm < 1 or arms < 1:
        raise InvalidSpecError(f"gen_spiral needs n_per_arm >= 1 and arms >= 1")
    if noise < 0 or turns <= 0 or start_radius < 0 or arm_gap <= 0:
        raise InvalidSpecError(
            "gen_spiral needs noise >= 0, turns > 0, start_radius >= 0 and arm_gap > 0"
        )

    rng = make_rng(seed)
    if n_per_arm == 1:
        u = np.zeros(1)
    else:
        u = np.arange(n_per_arm) / (n_per_arm - 1)

    b = arm_gap * arms / (2.0 * np.pi)
    phi_end = 2.0 * np.pi * turns
    arc = u * (start_radius * phi_end + 0.5 * b * phi_end ** 2)
    phi = (np.sqrt(start_radius ** 2 + 2.0 * b * arc) - start_radius) / b
    radius = start_radius + b * phi

    chunks = []
    for arm in range(arms):
        angle = phi + 2.0 * np.pi * arm / arms
        chunks.append(np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]))

    n_total = n_per_arm * arms
    points = np.vstack(chunks) + _jitter(rng, noise, (n_total, 2))
    labels = np.repeat(np.arange(arms), n_per_arm)
    return Dataset(name=name, points=points, labels=labels)


def gen_rings_gaussians(
    ring_specs: Sequence[RingLike],
    blob_specs: Sequence[BlobLike],
    seed: int,
    name: str = "RingG"
) -> Dataset:
    """
    Concentric annuli plus optional Gaussian blobs in the plane.

    Labels follow the rings in order, then the blobs.
    """
    if not ring_specs and not blob_specs:
        raise InvalidSpecError("gen_rings_gaussians needs at least one ring or blob spec")

    rings = [_as_ring_spec(spec) for spec in ring_specs]
    blobs = [_as_blob_spec(spec) for spec in blob_specs]
    for blob in blobs:
        if len(blob.center) != 2:
            raise InvalidSpecError("Blobs mixed with rings must be two-dimensional")

    rng = make_rng(seed)
    chunks = []
    labels = []
    label = 0
    for ring in rings:
        angle = rng.uniform(0.0, 2.0 * np.pi, size=ring.count)
        radius = ring.radius + _jitter(rng, ring.radial_std, (ring.count,))
        center = np.asarray(ring.center, dtype=np.float64)
        chunks.append(center + np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]))
        labels.append(np.full(ring.count, label))
        label += 1
    for blob in blobs:
        center = np.asarray(blob.center, dtype=np.float64)
        chunks.append(center + _jitter(rng, blob.stddev, (blob.count, 2)))
        labels.append(np.full(blob.count, label))
        label += 1

    return Dataset(name=name, points=np.vstack(chunks), labels=np.concatenate(labels))


def gen_subspace_gaussians(
    dim_total: int,
    dim_sub: int,
    n_per_cluster: int,
    stddev: float,
    seed: int,
    name: str = "w100Gaussians"
) -> Dataset:
    """
    Two Gaussian clusters living in disjoint coordinate blocks.

    Cluster 0 varies in [0, dim_sub) and cluster 1 in [dim_sub, dim_total); every
    other coordinate is exactly zero, so the clusters only meet at the origin.
    """
    if 2 * dim_sub != dim_total:
        raise InvalidSpecError(
            f"gen_subspace_gaussians needs dim_total == 2 * dim_sub, got {dim_total} and {dim_sub}"
        )
    if n_per_cluster < 1 or stddev < 0:
        raise InvalidSpecError("gen_subspace_gaussians needs n_per_cluster >= 1 and stddev >= 0")

    rng = make_rng(seed)
    points = np.zeros((2 * n_per_cluster, dim_total))
    points[:n_per_cluster, :dim_sub] = _jitter(rng, stddev, (n_per_cluster, dim_sub))
    points[n_per_cluster:, dim_sub:] = _jitter(rng, stddev, (n_per_cluster, dim_sub))
    labels = np.repeat([0, 1], n_per_cluster)
    return Dataset(name=name, points=points, labels=labels)


def generate(spec: GenSpec) -> Dataset:
    """Build the dataset described by a GenSpec."""
    family = GeneratorFamily(spec.family)
    name = spec.name

    if family == GeneratorFamily.TWO_CRESCENTS:
        return gen_two_crescents(spec.n_total, spec.noise, spec.seed, gap=spec.gap,
                                 name=name or "2Crescents")
    elif family == GeneratorFamily.BLOBS:
        return gen_blobs(spec.blobs, spec.seed, name=name or "blobs")
    elif family == GeneratorFamily.SPIRAL:
        return gen_spiral(spec.n_per_arm, spec.arms, spec.noise, spec.seed,
                          turns=spec.turns, start_radius=spec.start_radius, arm_gap=spec.arm_gap,
                          name=name or "spiral")
    elif family == GeneratorFamily.RINGS_GAUSSIANS:
        return gen_rings_gaussians(spec.rings, spec.blobs, spec.seed, name=name or "RingG")
    elif family == GeneratorFamily.SUBSPACE_GAUSSIANS:
        return gen_subspace_gaussians(spec.dim_total, spec.dim_sub, spec.n_per_cluster,
                                      spec.stddev, spec.seed, name=name or "w100Gaussians")
    raise InvalidSpecError(f"Unknown generator family: {spec.family}")


# Named benchmark datasets. Geometry beyond the point and cluster counts is a choice.
BENCHMARK_FAMILIES: Dict[str, GenSpec] = {
    "2Crescents": GenSpec(family=GeneratorFamily.TWO_CRESCENTS, name="2Crescents",
                          n_total=1200, noise=0.08),
    "2Crescents-gap0.3": GenSpec(family=GeneratorFamily.TWO_CRESCENTS, name="2Crescents-gap0.3",
                                 n_total=1200, noise=0.08, gap=0.3),
    "2Crescents-gap0.5": GenSpec(family=GeneratorFamily.TWO_CRESCENTS, name="2Crescents-gap0.5",
                                 n_total=1200, noise=0.08, gap=0.5),
    "Diff-Sizes": GenSpec(family=GeneratorFamily.BLOBS, name="Diff-Sizes", blobs=[
        BlobSpec(center=[0.0, 0.0], stddev=1.0, count=800),
        BlobSpec(center=[6.0, 1.0], stddev=0.2, count=50),
        BlobSpec(center=[6.0, -1.0], stddev=0.2, count=50),
    ]),
    "spiral": GenSpec(family=GeneratorFamily.SPIRAL, name="spiral",
                      n_per_arm=104, arms=3, noise=0.02, turns=1.0, start_radius=0.3, arm_gap=0.5),
    "RingG": GenSpec(family=GeneratorFamily.RINGS_GAUSSIANS, name="RingG", rings=[
        RingSpec(center=[0.0, 0.0], radius=1.0, radial_std=0.1, count=384),
        RingSpec(center=[0.0, 0.0], radius=3.0, radial_std=0.1, count=384),
    ], blobs=[
        BlobSpec(center=[6.5, 0.0], stddev=0.4, count=384),
        BlobSpec(center=[6.5, 4.5], stddev=0.4, count=384),
    ]),
    "w100Gaussians": GenSpec(family=GeneratorFamily.SUBSPACE_GAUSSIANS, name="w100Gaussians",
                             dim_total=200, dim_sub=100, n_per_cluster=500, stddev=1.0),
}


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def _parse_cell(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DatasetParseError(
            f"row {row}, column {column}: could not parse '{text}' as a number",
            row=row, column=column
        )
    if not np.isfinite(value):
        raise DatasetParseError(
            f"row {row}, column {column}: non-finite value '{text}'",
            row=row, column=column
        )
    return value


def load_csv(
    path: Union[str, Path],
    has_header: bool = True,
    label_column: Optional[str] = None,
    require_label: bool = True
) -> Dataset:
    """
    Read a dataset from a comma separated file.

    Rows are numbered by their 1-based line in the file, header included. Label
    values are mapped to dense ids in order of first appearance.

    Args:
        path: CSV file path
        has_header: Whether the first row holds column names
        label_column: Column holding ground-truth labels (a header name, or
            f<i> when there is no header)
        require_label: When False, a missing label column means unlabelled data

    Returns:
        Dataset named after the file stem

    Raises:
        DatasetParseError: Missing or unreadable file, invalid encoding, ragged
            row, non-numeric cell or unknown label column
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetParseError(f"{path}: file not found")

    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = [(line_no, row) for line_no, row in enumerate(csv.reader(f), 1) if row]
    except UnicodeDecodeError as e:
        raise DatasetParseError(f"{path}: not valid UTF-8 (byte offset {e.start})")
    except csv.Error as e:
        raise DatasetParseError(f"{path}: malformed CSV ({e})")
    except OSError as e:
        raise DatasetParseError(f"{path}: cannot read file ({e.strerror or e})")

    if not rows:
        raise DatasetParseError(f"{path}: file is empty")

    if has_header:
        _, header = rows[0]
        header = [name.strip() for name in header]
        body = rows[1:]
    else:
        header = [f"f{i}" for i in range(len(rows[0][1]))]
        body = rows

    if not body:
        raise DatasetParseError(f"{path}: no data rows")

    label_index = None
    if label_column is not None and (require_label or label_column in header):
        if label_column not in header:
            raise DatasetParseError(f"{path}: label column '{label_column}' not found in {header}")
        label_index = header.index(label_column)

    width = len(header)
    feature_columns = [i for i in range(width) if i != label_index]
    if not feature_columns:
        raise DatasetParseError(f"{path}: no feature columns")

    points = np.empty((len(body), len(feature_columns)))
    label_ids: Dict[str, int] = {}
    labels = []
    for out_row, (line_no, row) in enumerate(body):
        if len(row) != width:
            raise DatasetParseError(
                f"row {line_no}: expected {width} fields, found {len(row)}", row=line_no
            )
        for out_col, col in enumerate(feature_columns):
            points[out_row, out_col] = _parse_cell(row[col].strip(), line_no, header[col])
        if label_index is not None:
            key = row[label_index].strip()
            labels.append(label_ids.setdefault(key, len(label_ids)))

    logger.debug(f"Loaded {len(body)} rows x {len(feature_columns)} features from {path}")
    return Dataset(
        name=path.stem,
        points=points,
        labels=np.asarray(labels) if label_index is not None else None,
    )


def save_csv(dataset: Dataset, path: Union[str, Path]) -> None:
    """
    Write a dataset as CSV with header ``f0,...,f{d-1}[,label]``.

    Values use Python's shortest round-trip repr, so loading reproduces every
    coordinate bit for bit.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    header = [f"f{i}" for i in range(dataset.d)]
    if dataset.labels is not None:
        header.append("label")

    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(value)) for value in dataset.points[i]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            writer.writerow(row)

    logger.debug(f"Wrote {dataset.n} rows to {path}")
