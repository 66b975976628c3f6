"""
Tests for the clustering method factory and bench method wrappers.
"""
import numpy as np
import pytest

from app.core.dataset import Dataset, gen_blobs
from app.core.exceptions import InvalidSpecError
from app.core.methods import ClusteringMethod, KbcMethod, KmeansMethod, MethodFactory
from app.services import kbc


@pytest.fixture
def blobs():
    return gen_blobs([((0.0, 0.0), 1.0, 50), ((100.0, 100.0), 1.0, 50)], 2, name="blobs")


class TestMethodFactory:
    """Test method creation."""

    def test_available(self):
        assert MethodFactory.available_methods() == ["kbc", "kmeans"]

    def test_create_kbc(self):
        method = MethodFactory.create_method("KBC", k=2, psi_grid=[8], tau_grid=[0.3], t=50, n_init=5)

        assert isinstance(method, KbcMethod)
        assert isinstance(method, ClusteringMethod)
        assert method.psi_grid == [8]
        assert method.t == 50

    def test_create_kmeans(self):
        method = MethodFactory.create_method("k-means", n_init=3, psi_grid=[8])

        assert isinstance(method, KmeansMethod)
        assert method.n_init == 3

    def test_none_values_use_defaults(self):
        method = MethodFactory.create_method("kbc", k=None, sample_size=None)

        assert method.k is None
        assert method.sample_size is None

    def test_unknown(self):
        with pytest.raises(InvalidSpecError, match="Unsupported method type"):
            MethodFactory.create_method("dbscan")


class TestKbcMethod:
    """Test the KBC bench wrapper."""

    def test_singleton_grid_skips_tuning(self, blobs):
        method = KbcMethod(psi_grid=[8], tau_grid=[0.3], t=50)

        params = method.prepare(blobs, seed=1)
        method.run(blobs, seed=3)

        assert method.tuning_reports == {}
        assert params["k"] == 2
        assert params["psi"] == 8
        assert "seed" not in params

    def test_grid_prepare_records_grids(self, blobs):
        method = KbcMethod(psi_grid=[4, 8], tau_grid=[0.2, 0.3], t=50)

        params = method.prepare(blobs, seed=1)

        assert params["psi_grid"] == [4, 8]
        assert params["tau_grid"] == [0.2, 0.3]
        assert "psi" not in params and "tau" not in params
        assert method.tuning_reports == {}

    def test_grid_is_tuned_per_run(self, blobs):
        method = KbcMethod(psi_grid=[4, 8], tau_grid=[0.2, 0.3], t=50)
        method.prepare(blobs, seed=1)

        result = method.run(blobs, seed=7)
        best, direct, _ = kbc.tune(blobs, [4, 8], [0.2, 0.3], k=2, t=50, seed=7)

        assert len(method.tuning_reports[7].entries) == 4
        assert (result.params.psi, result.params.tau) == (best.psi, best.tau)
        assert result.objective == direct.objective
        assert result.partition.same_as(direct.partition)

    def test_failing_tau_only_drops_a_grid_entry(self, blobs):
        """tau = -1 links every sample point, yet each run still succeeds on the other tau."""
        method = KbcMethod(psi_grid=[8], tau_grid=[-1.0, 0.3], t=50)
        method.prepare(blobs, seed=0)

        for seed in range(4):
            result = method.run(blobs, seed=seed)

            assert result.params.tau == 0.3
            assert method.tuning_reports[seed].failures()

    def test_run_uses_seed(self, blobs):
        method = KbcMethod(psi_grid=[8], tau_grid=[0.3], t=50)
        method.prepare(blobs, seed=0)

        result = method.run(blobs, seed=11)
        direct = kbc.fit(blobs, kbc.KbcParams(k=2, tau=0.3, psi=8, t=50, seed=11))

        assert result.seed == 11
        assert result.partition.same_as(direct.partition)

    def test_run_before_prepare(self, blobs):
        with pytest.raises(InvalidSpecError):
            KbcMethod().run(blobs, seed=0)

    def test_unlabelled_needs_k(self):
        dataset = Dataset(name="plain", points=np.random.default_rng(0).normal(size=(20, 2)))

        with pytest.raises(InvalidSpecError, match="k is required"):
            KbcMethod(psi_grid=[4], tau_grid=[0.3]).prepare(dataset, seed=0)


class TestKmeansMethod:
    """Test the k-means bench wrapper."""

    def test_prepare_and_run(self, blobs):
        method = KmeansMethod(n_init=2)

        params = method.prepare(blobs, seed=0)
        result = method.run(blobs, seed=3)

        assert params == {"k": 2, "n_init": 2, "max_iters": method.max_iters, "tol": method.tol}
        assert result.method == "kmeans"
        assert result.seed == 3

    def test_explicit_k(self, blobs):
        method = KmeansMethod(k=3, n_init=1)

        assert method.prepare(blobs, seed=0)["k"] == 3

    def test_run_before_prepare(self, blobs):
        with pytest.raises(InvalidSpecError):
            KmeansMethod().run(blobs, seed=0)
