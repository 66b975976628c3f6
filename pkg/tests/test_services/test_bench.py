"""
Tests for the benchmark harness.
"""
import csv
import json

import pytest

from app.core.dataset import save_csv, gen_blobs
from app.core.exceptions import ConfigError
from app.core.models import BenchConfig, DatasetSource, MethodSpec, RunRecord
from app.services import bench


def small_config(**overrides):
    config = {
        "datasets": [{
            "name": "two-blobs",
            "generator": {
                "family": "blobs",
                "seed": 1,
                "blobs": [
                    {"center": [0.0, 0.0], "stddev": 1.0, "count": 40},
                    {"center": [50.0, 50.0], "stddev": 1.0, "count": 40},
                ],
            },
        }],
        "methods": [
            {"name": "kbc", "psi_grid": [8], "tau_grid": [0.3], "t": 40},
            {"name": "kmeans", "n_init": 2},
        ],
        "runs": 3,
        "master_seed": 7,
    }
    config.update(overrides)
    return config


def write_config(tmp_path, payload):
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(payload))
    return path


def strip_wall_times(results):
    for record in results["records"]:
        record.pop("wall_time_ms")
    return results


class TestLoadConfig:
    """Test config parsing and validation."""

    def test_valid(self, tmp_path):
        config = bench.load_bench_config(write_config(tmp_path, small_config()))

        assert isinstance(config, BenchConfig)
        assert [m.resolved_label() for m in config.methods] == ["kbc", "kmeans"]
        assert config.datasets[0].resolved_name() == "two-blobs"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            bench.load_bench_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bench.json"
        path.write_text("{not json")

        with pytest.raises(ConfigError, match="invalid JSON"):
            bench.load_bench_config(path)

    def test_field_path_reported(self, tmp_path):
        payload = small_config(methods=[{"name": "kbc", "psi_grid": [4, 8, 0]}])

        with pytest.raises(ConfigError) as excinfo:
            bench.load_bench_config(write_config(tmp_path, payload))
        assert excinfo.value.field_path == "methods.0.psi_grid.2"

    def test_tau_out_of_range(self, tmp_path):
        payload = small_config(methods=[{"name": "kbc", "tau_grid": [0.5, 1.0]}])

        with pytest.raises(ConfigError) as excinfo:
            bench.load_bench_config(write_config(tmp_path, payload))
        assert excinfo.value.field_path == "methods.0.tau_grid.1"

    def test_unknown_method(self, tmp_path):
        payload = small_config(methods=[{"name": "dbscan"}])

        with pytest.raises(ConfigError) as excinfo:
            bench.load_bench_config(write_config(tmp_path, payload))
        assert excinfo.value.field_path == "methods.0.name"

    def test_zero_runs(self, tmp_path):
        with pytest.raises(ConfigError) as excinfo:
            bench.load_bench_config(write_config(tmp_path, small_config(runs=0)))
        assert excinfo.value.field_path == "runs"

    def test_unknown_family(self, tmp_path):
        payload = small_config(datasets=[{"family": "moons"}])

        with pytest.raises(ConfigError) as excinfo:
            bench.load_bench_config(write_config(tmp_path, payload))
        assert excinfo.value.field_path.startswith("datasets.0")

    def test_two_sources(self, tmp_path):
        payload = small_config(datasets=[{"family": "2Crescents", "csv": "x.csv"}])

        with pytest.raises(ConfigError, match="exactly one"):
            bench.load_bench_config(write_config(tmp_path, payload))

    def test_duplicate_method_labels(self, tmp_path):
        payload = small_config(methods=[{"name": "kbc"}, {"name": "kbc"}])

        with pytest.raises(ConfigError, match="unique"):
            bench.load_bench_config(write_config(tmp_path, payload))

    def test_override_for_unknown_method(self, tmp_path):
        payload = small_config()
        payload["datasets"][0]["overrides"] = {"dbscan": {"k": 3}}

        with pytest.raises(ConfigError) as excinfo:
            bench.load_bench_config(write_config(tmp_path, payload))
        assert excinfo.value.field_path == "datasets.0.overrides.dbscan"

    def test_invalid_override_value(self, tmp_path):
        payload = small_config()
        payload["datasets"][0]["overrides"] = {"kbc": {"psi_grid": [0]}}

        with pytest.raises(ConfigError) as excinfo:
            bench.load_bench_config(write_config(tmp_path, payload))
        assert excinfo.value.field_path == "datasets.0.overrides.kbc.psi_grid.0"


class TestSeeds:
    """Test run seed derivation."""

    def test_pure_function(self):
        assert bench.run_seed(0, "2Crescents", "kbc", 3) == bench.run_seed(0, "2Crescents", "kbc", 3)

    def test_distinct_within_block(self):
        seeds = {bench.run_seed(0, "2Crescents", "kbc", r) for r in range(100)}

        assert len(seeds) == 100

    def test_tune_seed_differs_from_run_seeds(self):
        tune = bench.tune_seed(0, "2Crescents", "kbc")

        assert all(tune != bench.run_seed(0, "2Crescents", "kbc", r) for r in range(10))


class TestOverrides:
    """Test per-dataset method overrides."""

    def test_override_applied(self):
        source = DatasetSource(family="2Crescents", overrides={"kbc": {"psi_grid": [32], "k": 2}})
        spec = MethodSpec(name="kbc", tau_grid=[0.2, 0.4])

        effective = bench.effective_method_spec(source, spec)

        assert effective.psi_grid == [32]
        assert effective.tau_grid == [0.2, 0.4]
        assert effective.k == 2
        assert spec.psi_grid != [32]

    def test_no_override(self):
        spec = MethodSpec(name="kmeans")

        assert bench.effective_method_spec(DatasetSource(family="spiral"), spec) is spec


class TestSummaries:
    """Test aggregation and plotted-run selection."""

    @staticmethod
    def record(run, nmi, objective=1.0):
        return RunRecord(dataset="d", method="m", params={}, run=run, seed=run, nmi=nmi,
                         ari=nmi, objective=objective, wall_time_ms=1.0)

    def test_mean_and_population_std(self):
        rows = bench.summarize([self.record(0, 0.5), self.record(1, 1.0)])

        assert len(rows) == 1
        assert rows[0]["nmi_mean"] == pytest.approx(0.75, abs=1e-12)
        assert rows[0]["nmi_std"] == pytest.approx(0.25, abs=1e-12)

    def test_single_run_has_zero_std(self):
        rows = bench.summarize([self.record(0, 0.8)])

        assert rows[0]["nmi_std"] == 0.0

    def test_unlabelled_metrics_blank(self, tmp_path):
        record = RunRecord(dataset="d", method="m", params={}, run=0, seed=0,
                           objective=2.0, wall_time_ms=1.0)
        rows = bench.summarize([record])
        path = tmp_path / "summary.csv"

        bench.write_summary(rows, path)

        with open(path, newline="") as f:
            row = list(csv.DictReader(f))[0]
        assert row["nmi_mean"] == ""
        assert row["objective_mean"] == "2.0"

    def test_plotted_run_highest_nmi(self):
        records = [self.record(0, 0.7), self.record(1, 0.9), self.record(2, 0.9)]

        assert bench.select_plotted_run(records).run == 1

    def test_plotted_run_falls_back_to_objective(self):
        records = [self.record(0, None, objective=3.0), self.record(1, None, objective=5.0)]

        assert bench.select_plotted_run(records).run == 1


class TestRun:
    """Test a full sweep."""

    def test_bundle_written(self, tmp_path):
        config = BenchConfig.model_validate(small_config())

        outcome = bench.run(config, output_dir=tmp_path / "out", threads=1)

        assert outcome.exit_code == 0
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        assert len(results["records"]) == 6
        assert results["failures"] == []
        assert results["config_digest"] == bench.config_digest(config)

        with open(tmp_path / "out" / "summary.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert [(r["dataset"], r["method"]) for r in rows] == [("two-blobs", "kbc"), ("two-blobs", "kmeans")]
        assert sorted(p.name for p in outcome.plots) == ["two-blobs__kbc.svg", "two-blobs__kmeans.svg"]

    def test_records_ordered_and_seeded(self, tmp_path):
        config = BenchConfig.model_validate(small_config())

        outcome = bench.run(config, output_dir=tmp_path, threads=2)

        records = outcome.results.records
        assert [(r.method, r.run) for r in records] == [
            ("kbc", 0), ("kbc", 1), ("kbc", 2), ("kmeans", 0), ("kmeans", 1), ("kmeans", 2),
        ]
        for record in records:
            assert record.seed == bench.run_seed(7, "two-blobs", record.method, record.run)
            assert 0.0 <= record.nmi <= 1.0

    def test_summary_means_match_records(self, tmp_path):
        config = BenchConfig.model_validate(small_config())

        outcome = bench.run(config, output_dir=tmp_path, threads=1)

        for row in outcome.summary:
            values = [r.nmi for r in outcome.results.records if r.method == row["method"]]
            assert row["nmi_mean"] == pytest.approx(sum(values) / len(values), abs=1e-12)

    def test_thread_count_does_not_change_results(self, tmp_path):
        config = BenchConfig.model_validate(small_config())

        bench.run(config, output_dir=tmp_path / "one", threads=1)
        bench.run(config, output_dir=tmp_path / "four", threads=4)

        one = strip_wall_times(json.loads((tmp_path / "one" / "results.json").read_text()))
        four = strip_wall_times(json.loads((tmp_path / "four" / "results.json").read_text()))
        assert one == four
        assert (tmp_path / "one" / "plots" / "two-blobs__kbc.svg").read_bytes() == \
            (tmp_path / "four" / "plots" / "two-blobs__kbc.svg").read_bytes()

    def test_failed_dataset_isolated(self, tmp_path):
        payload = small_config(runs=1)
        payload["datasets"].append({"csv": str(tmp_path / "missing.csv")})
        config = BenchConfig.model_validate(payload)

        outcome = bench.run(config, output_dir=tmp_path / "out", threads=1)

        assert outcome.exit_code == 1
        assert len(outcome.results.records) == 2
        failure = outcome.results.failures[0]
        assert failure.stage == "load"
        assert failure.dataset == "missing"
        assert failure.error == "DatasetParseError"

    def test_failed_cell_isolated(self, tmp_path):
        """A tau grid that merges everything fails KBC but not k-means."""
        payload = small_config(runs=1)
        payload["methods"][0]["tau_grid"] = [-0.5]
        config = BenchConfig.model_validate(payload)

        outcome = bench.run(config, output_dir=tmp_path, threads=1)

        assert outcome.exit_code == 1
        assert [r.method for r in outcome.results.records] == ["kmeans"]
        assert outcome.results.failures[0].stage == "run"
        assert outcome.results.failures[0].error == "TauTooSmallError"

    def test_csv_source(self, tmp_path):
        dataset = gen_blobs([((0, 0), 1.0, 20), ((30, 0), 1.0, 20)], 3)
        save_csv(dataset, tmp_path / "blobs.csv")
        payload = small_config(runs=1, plots=False)
        payload["datasets"] = [{"csv": str(tmp_path / "blobs.csv")}]
        payload["methods"] = [{"name": "kmeans", "n_init": 2}]

        outcome = bench.run(BenchConfig.model_validate(payload), output_dir=tmp_path / "out")

        assert outcome.exit_code == 0
        assert outcome.results.records[0].dataset == "blobs"
        assert outcome.results.records[0].nmi == pytest.approx(1.0)
        assert outcome.plots == []

    def test_tuned_runs_skip_failing_tau(self, tmp_path):
        """Each run tunes on its own seed; the merging tau fails per run and is skipped."""
        payload = small_config()
        payload["methods"][0]["tau_grid"] = [-0.5, 0.3]
        config = BenchConfig.model_validate(payload)

        outcome = bench.run(config, output_dir=tmp_path, threads=1)

        assert outcome.exit_code == 0
        kbc_records = [r for r in outcome.results.records if r.method == "kbc"]
        assert len(kbc_records) == 3
        for record in kbc_records:
            assert record.params["tau_grid"] == [-0.5, 0.3]
            assert record.params["tau"] == 0.3
            assert record.params["psi"] == 8

    def test_undecodable_csv_isolated(self, tmp_path):
        bad = tmp_path / "latin1.csv"
        bad.write_bytes("x,y,label\n1.0,2.0,caf\xe9\n".encode("latin-1"))
        payload = small_config(runs=1)
        payload["datasets"].append({"csv": str(bad)})
        config = BenchConfig.model_validate(payload)

        outcome = bench.run(config, output_dir=tmp_path / "out", threads=1)

        assert outcome.exit_code == 1
        assert len(outcome.results.records) == 2
        failure = outcome.results.failures[0]
        assert (failure.stage, failure.dataset, failure.error) == ("load", "latin1", "DatasetParseError")
        results = json.loads((tmp_path / "out" / "results.json").read_text())
        assert results["failures"][0]["stage"] == "load"
