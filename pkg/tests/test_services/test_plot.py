"""
Tests for SVG scatter plots.
"""
import numpy as np
import pytest

from app.core.dataset import Dataset, gen_subspace_gaussians, gen_two_crescents
from app.core.dkernel import Partition
from app.core.exceptions import ShapeError
from app.services.plot import PALETTE, pca_project, plot, render_svg


class TestRenderSvg:
    """Test SVG rendering."""

    def test_one_circle_per_point(self):
        dataset = gen_two_crescents(40, 0.05, 1)

        svg = render_svg(dataset, dataset.labels)

        assert svg.count("<circle") == 40
        assert svg.startswith("<svg")
        assert "<title>2Crescents</title>" in svg

    def test_palette_cycles_by_label(self):
        points = np.arange(44.0).reshape(22, 2)
        labels = np.arange(22)

        svg = render_svg(points, labels)

        assert svg.count(f'fill="{PALETTE[0]}"') == 2
        assert svg.count(f'fill="{PALETTE[1]}"') == 2

    def test_accepts_partition(self):
        points = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])

        svg = render_svg(points, Partition.from_labels([0, 1, 1]))

        assert svg.count("<circle") == 3

    def test_title_escaped(self):
        svg = render_svg(np.zeros((2, 2)), [0, 1], title="a < b & c")

        assert "a &lt; b &amp; c" in svg

    def test_high_dimensional_data_projected(self):
        dataset = gen_subspace_gaussians(200, 100, 30, 1.0, 2)

        svg = render_svg(dataset, dataset.labels)

        assert svg.count("<circle") == 60

    def test_one_dimensional_data(self):
        svg = render_svg(np.array([[0.0], [1.0], [2.0]]), [0, 0, 1])

        assert svg.count("<circle") == 3

    def test_label_length_mismatch(self):
        with pytest.raises(ShapeError):
            render_svg(np.zeros((3, 2)), [0, 1])


class TestPca:
    """Test the projection used for d > 2."""

    def test_leading_axis_first(self):
        points = np.column_stack([np.linspace(-10, 10, 50), np.zeros(50), np.linspace(-1, 1, 50) ** 2])

        projected = pca_project(points, 2)

        assert projected.shape == (50, 2)
        assert projected[:, 0].var() > projected[:, 1].var()

    def test_sign_convention_is_deterministic(self):
        points = gen_subspace_gaussians(6, 3, 20, 1.0, 5).points

        assert np.array_equal(pca_project(points), pca_project(points.copy()))


class TestPlot:
    """Test writing plots to disk."""

    def test_writes_file(self, tmp_path):
        dataset = gen_two_crescents(20, 0.05, 3)
        out = tmp_path / "plots" / "crescents.svg"

        path = plot(dataset, dataset.labels, out)

        assert path == out
        assert out.read_text().count("<circle") == 20

    def test_byte_identical(self, tmp_path):
        dataset = Dataset(name="d", points=gen_two_crescents(30, 0.05, 3).points)
        labels = np.arange(30) % 3

        first = plot(dataset, labels, tmp_path / "a.svg").read_bytes()
        second = plot(dataset, labels, tmp_path / "b.svg").read_bytes()

        assert first == second

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")

        with pytest.raises(OSError):
            plot(np.zeros((2, 2)), [0, 1], blocker / "out.svg")
