"""
Shared fixtures: hand-built kernels with known cell assignments and small datasets.
"""
import numpy as np
import pytest

from app.core.dataset import gen_blobs
from app.core.ikernel import IsolationModel


@pytest.fixture
def two_partition_model():
    """
    t=2, psi=2 model in the plane.

    Partition 0 anchors {(0,0), (10,10)}, partition 1 anchors {(0,10), (10,0)}:
    x=(1,2) lands in cells [0, 0] and y=(2,1) in cells [0, 1], so kappa(x, y) = 0.5.
    """
    anchors = np.array([
        [[0.0, 0.0], [10.0, 10.0]],
        [[0.0, 10.0], [10.0, 0.0]],
    ])
    return IsolationModel(anchors=anchors, psi=2, t=2, d=2, seed=0)


@pytest.fixture
def axis_model():
    """
    t=2, psi=2 model splitting the plane on x in partition 0 and on y in partition 1.

    (0,0) -> [0,0], (10,0) -> [1,0], (0,10) -> [0,1], (10,10) -> [1,1].
    """
    anchors = np.array([
        [[0.0, 0.0], [10.0, 0.0]],
        [[0.0, 0.0], [0.0, 10.0]],
    ])
    return IsolationModel(anchors=anchors, psi=2, t=2, d=2, seed=0)


@pytest.fixture
def chained_line_model():
    """
    t=10, psi=3 model on the points 0, 1, 10, 11 of the real line.

    Shared cells give kappa(0,1)=0.8, kappa(10,11)=0.9 and 0.1 for every cross pair.
    """
    partitions = (
        [[5.0, -100.0, 200.0]]          # everything in one cell
        + [[0.5, 10.5, 100.0]] * 6      # {0,1} and {10,11}
        + [[0.5, 10.0, 11.0]]           # {0,1} only
        + [[0.0, 1.0, 10.5]] * 2        # {10,11} only
    )
    anchors = np.array(partitions)[:, :, None]
    return IsolationModel(anchors=anchors, psi=3, t=10, d=1, seed=0)


@pytest.fixture
def line_points():
    return np.array([[0.0], [1.0], [10.0], [11.0]])


@pytest.fixture
def separated_blobs():
    """Two unit-variance blobs 100 apart, 50 points each."""
    return gen_blobs([((0.0, 0.0), 1.0, 50), ((100.0, 100.0), 1.0, 50)], 21, name="separated")


@pytest.fixture
def small_blobs():
    """30 points in two blobs 6 apart."""
    return gen_blobs([((0.0, 0.0), 1.0, 15), ((6.0, 0.0), 1.0, 15)], 8, name="small")
