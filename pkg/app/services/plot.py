"""
Deterministic SVG scatter plots of clustered datasets.
"""
from html import escape
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from config import logger
from app.core.dataset import Dataset
from app.core.dkernel import Partition
from app.core.exceptions import ShapeError

WIDTH = 640
HEIGHT = 480
MARGIN = 24
RADIUS = 2.5

# Cycled by label id
PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
    "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
]


def pca_project(points: np.ndarray, components: int = 2) -> np.ndarray:
    """
    Project points onto their leading principal components.

    Eigenvectors of the covariance are ordered by decreasing eigenvalue and
    oriented so that their first non-zero entry is positive.
    """
    points = np.asarray(points, dtype=np.float64)
    centered = points - points.mean(axis=0)
    n = points.shape[0]
    cov = centered.T @ centered / max(n - 1, 1)

    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(-eigenvalues, kind="stable")[:components]
    basis = eigenvectors[:, order]

    for j in range(basis.shape[1]):
        nonzero = np.flatnonzero(np.abs(basis[:, j]) > 1e-12)
        if nonzero.shape[0] and basis[nonzero[0], j] < 0:
            basis[:, j] = -basis[:, j]
    return centered @ basis


def _plane_coordinates(points: np.ndarray) -> np.ndarray:
    d = points.shape[1]
    if d == 1:
        return np.column_stack([points[:, 0], np.zeros(points.shape[0])])
    if d == 2:
        return points
    return pca_project(points, 2)


def _scale(values: np.ndarray, low: float, high: float) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.full(values.shape[0], (low + high) / 2.0)
    return low + (values - lo) / (hi - lo) * (high - low)


def render_svg(
    data: Union[Dataset, np.ndarray],
    labels: Union[Partition, np.ndarray, List[int]],
    title: Optional[str] = None
) -> str:
    """
    Render a scatter plot with one circle per point, coloured by label.

    Args:
        data: Dataset or (n, d) array; d > 2 is projected with PCA
        labels: Partition or label vector of length n
        title: Optional caption

    Returns:
        SVG document as a string
    """
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    label_ids = labels.labels if isinstance(labels, Partition) else np.asarray(labels, dtype=np.int64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ShapeError(f"Cannot plot points of shape {points.shape}")
    if label_ids.shape != (points.shape[0],):
        raise ShapeError(f"Got {label_ids.shape[0]} labels for {points.shape[0]} points")

    if title is None and isinstance(data, Dataset):
        title = data.name

    plane = _plane_coordinates(points)
    xs = _scale(plane[:, 0], MARGIN, WIDTH - MARGIN)
    # SVG y grows downwards
    ys = _scale(plane[:, 1], HEIGHT - MARGIN, MARGIN)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    if title:
        lines.append(f"<title>{escape(title)}</title>")
        lines.append(
            f'<text x="{MARGIN}" y="{MARGIN - 8}" font-family="sans-serif" '
            f'font-size="12">{escape(title)}</text>'
        )
    for x, y, label in zip(xs, ys, label_ids):
        color = PALETTE[int(label) % len(PALETTE)]
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{RADIUS}" fill="{color}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def plot(
    data: Union[Dataset, np.ndarray],
    labels: Union[Partition, np.ndarray, List[int]],
    out_path: Union[str, Path],
    title: Optional[str] = None
) -> Path:
    """
    Write the scatter plot to ``out_path``.

    Raises:
        OSError: If the file cannot be written
    """
    out_path = Path(out_path)
    svg = render_svg(data, labels, title=title)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(svg, encoding="utf-8")
    logger.info(f"Wrote plot to {out_path}")
    return out_path
