"""
Benchmark harness: datasets x methods x seeded runs, scored against ground truth.

Every run seed is a pure function of (master seed, dataset, method, run index) and
results are sorted before they are written, so the output does not depend on the
number of worker threads.
"""
import csv
import hashlib
import json
import re
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from config import settings, logger
from app.core.dataset import BENCHMARK_FAMILIES, Dataset, generate, load_csv
from app.core.exceptions import ClusteringError, ConfigError
from app.core.methods import ClusteringMethod, MethodFactory
from app.core.models import (
    BenchConfig,
    BenchResults,
    CellFailure,
    DatasetSource,
    MethodSpec,
    RunRecord,
)
from app.core.rng import stable_hash
from app.services.metrics import ari, nmi
from app.services.plot import plot

RESULTS_FILE = "results.json"
SUMMARY_FILE = "summary.csv"
PLOTS_DIR = "plots"
SUMMARY_COLUMNS = [
    "dataset", "method", "nmi_mean", "nmi_std", "ari_mean", "ari_std",
    "objective_mean", "wall_ms_mean",
]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _field_path(error: Dict[str, Any], prefix: Tuple = ()) -> str:
    return ".".join(str(part) for part in prefix + tuple(error["loc"]))


def effective_method_spec(source: DatasetSource, spec: MethodSpec) -> MethodSpec:
    """Method spec with the dataset's overrides for this method applied."""
    override = source.overrides.get(spec.resolved_label())
    if not override:
        return spec
    return MethodSpec.model_validate({**spec.model_dump(exclude_unset=True), **override})


def load_bench_config(path: Union[str, Path]) -> BenchConfig:
    """
    Read and validate a JSON bench configuration.

    Raises:
        ConfigError: If the file is missing, is not JSON or fails validation; the
            error names the offending field path (e.g. methods.0.psi_grid.2)
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")

    try:
        config = BenchConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(first["msg"], field_path=_field_path(first))

    labels = {spec.resolved_label(): spec for spec in config.methods}
    for i, source in enumerate(config.datasets):
        for label in source.overrides:
            if label not in labels:
                raise ConfigError(
                    f"override for unknown method '{label}'",
                    field_path=f"datasets.{i}.overrides.{label}"
                )
            try:
                effective_method_spec(source, labels[label])
            except ValidationError as e:
                first = e.errors()[0]
                raise ConfigError(
                    first["msg"],
                    field_path=_field_path(first, ("datasets", i, "overrides", label))
                )
    return config


def config_digest(config: BenchConfig) -> str:
    """SHA-256 of the canonical JSON form of a validated config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_seed(master_seed: int, dataset: str, method: str, run: int) -> int:
    return stable_hash(master_seed, dataset, method, run)


def tune_seed(master_seed: int, dataset: str, method: str) -> int:
    return stable_hash(master_seed, dataset, method, "tune")


def run_params(result) -> Dict[str, Any]:
    """Parameters a run actually used, without its seed."""
    if not hasattr(result.params, "to_dict"):
        return {}
    params = result.params.to_dict()
    params.pop("seed", None)
    return params


def load_source(source: DatasetSource) -> Dataset:
    """Materialise a configured dataset."""
    name = source.resolved_name()
    if source.family is not None:
        spec = BENCHMARK_FAMILIES[source.family].model_copy(update={"name": name})
        return generate(spec)
    if source.generator is not None:
        return generate(source.generator.model_copy(update={"name": name}))

    dataset = load_csv(source.csv, has_header=source.has_header, label_column=source.label_column)
    dataset.name = name
    return dataset


def safe_file_stem(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", name)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

@dataclass
class BenchOutcome:
    """What a bench run produced."""

    results: BenchResults
    output_dir: Path
    summary: List[Dict[str, Any]] = field(default_factory=list)
    plots: List[Path] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 1 if self.results.failures else 0


@dataclass
class _Cell:
    dataset_index: int
    method_index: int
    dataset: Dataset
    label: str
    method: ClusteringMethod
    params: Dict[str, Any] = field(default_factory=dict)


class BenchRunner:
    """Runs a validated BenchConfig and writes results.json, summary.csv and plots."""

    def __init__(
        self,
        config: BenchConfig,
        output_dir: Optional[Union[str, Path]] = None,
        threads: Optional[int] = None
    ):
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir or settings.output_dir)
        self.threads = max(1, threads if threads is not None else settings.bench_threads)
        self.failures: List[Tuple[Tuple[int, int, int], CellFailure]] = []

    def _fail(self, order: Tuple[int, int, int], **kwargs) -> None:
        failure = CellFailure(**kwargs)
        self.failures.append((order, failure))
        where = "/".join(str(part) for part in (failure.dataset, failure.method, failure.run) if part is not None)
        logger.warning(f"{failure.stage} failed for {where}: {failure.error}: {failure.message}")

    def _load_datasets(self) -> List[Tuple[int, Dataset]]:
        loaded = []
        for i, source in enumerate(self.config.datasets):
            name = source.resolved_name()
            try:
                dataset = load_source(source)
            except ClusteringError as e:
                self._fail((i, -1, -1), dataset=name, stage="load", error=type(e).__name__, message=str(e))
                continue
            logger.info(f"Loaded dataset {dataset.summary()}")
            loaded.append((i, dataset))
        return loaded

    def _prepare(self, cell: _Cell) -> _Cell:
        seed = tune_seed(self.config.master_seed, cell.dataset.name, cell.label)
        cell.params = cell.method.prepare(cell.dataset, seed)
        return cell

    def _run_once(self, cell: _Cell, run: int) -> Tuple[RunRecord, np.ndarray]:
        seed = run_seed(self.config.master_seed, cell.dataset.name, cell.label, run)
        start = time.perf_counter()
        result = cell.method.run(cell.dataset, seed)
        wall_ms = (time.perf_counter() - start) * 1000.0

        truth = cell.dataset.labels
        record = RunRecord(
            dataset=cell.dataset.name,
            method=cell.label,
            params={**cell.params, **run_params(result)},
            run=run,
            seed=seed,
            nmi=nmi(truth, result.labels) if truth is not None else None,
            ari=ari(truth, result.labels) if truth is not None and cell.dataset.n >= 2 else None,
            objective=result.objective,
            wall_time_ms=wall_ms,
        )
        return record, np.asarray(result.labels)

    def _build_cells(self, datasets: List[Tuple[int, Dataset]]) -> List[_Cell]:
        cells = []
        for i, dataset in datasets:
            source = self.config.datasets[i]
            for j, spec in enumerate(self.config.methods):
                effective = effective_method_spec(source, spec)
                params = effective.model_dump(exclude={"name", "label"})
                cells.append(_Cell(
                    dataset_index=i,
                    method_index=j,
                    dataset=dataset,
                    label=spec.resolved_label(),
                    method=MethodFactory.create_method(effective.name, **params),
                ))
        return cells

    def run(self) -> BenchOutcome:
        """Execute every cell and write the result bundle."""
        datasets = self._load_datasets()
        cells = self._build_cells(datasets)
        logger.info(
            f"Benchmark: {len(cells)} cell(s) x {self.config.runs} run(s) on {self.threads} thread(s)"
        )

        prepared: List[_Cell] = []
        records: List[RunRecord] = []
        labels: Dict[Tuple[int, int, int], np.ndarray] = {}

        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            future_to_cell = {executor.submit(self._prepare, cell): cell for cell in cells}
            for future in as_completed(future_to_cell):
                cell = future_to_cell[future]
                try:
                    prepared.append(future.result())
                except ClusteringError as e:
                    self._fail(
                        (cell.dataset_index, cell.method_index, -1),
                        dataset=cell.dataset.name, method=cell.label, stage="prepare",
                        error=type(e).__name__, message=str(e),
                    )

            future_to_run = {
                executor.submit(self._run_once, cell, run): (cell, run)
                for cell in prepared
                for run in range(self.config.runs)
            }
            for future in as_completed(future_to_run):
                cell, run = future_to_run[future]
                key = (cell.dataset_index, cell.method_index, run)
                try:
                    record, run_labels = future.result()
                except ClusteringError as e:
                    self._fail(
                        key, dataset=cell.dataset.name, method=cell.label, run=run,
                        stage="run", error=type(e).__name__, message=str(e),
                    )
                    continue
                records.append(record)
                labels[key] = run_labels

        order = {(c.dataset.name, c.label): (c.dataset_index, c.method_index) for c in cells}
        records.sort(key=lambda r: order[(r.dataset, r.method)] + (r.run,))
        self.failures.sort(key=lambda item: item[0])

        results = BenchResults(
            config_digest=config_digest(self.config),
            records=records,
            failures=[failure for _, failure in self.failures],
        )
        outcome = BenchOutcome(results=results, output_dir=self.output_dir)
        self._write(outcome, cells, labels)
        return outcome

    def _write(
        self,
        outcome: BenchOutcome,
        cells: List[_Cell],
        labels: Dict[Tuple[int, int, int], np.ndarray]
    ) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)

        results_path = self.output_dir / RESULTS_FILE
        payload = json.dumps(outcome.results.model_dump(mode="json"), indent=2, sort_keys=True)
        results_path.write_text(payload + "\n", encoding="utf-8")
        logger.info(f"Wrote {len(outcome.results.records)} record(s) to {results_path}")

        outcome.summary = summarize(outcome.results.records)
        summary_path = self.output_dir / SUMMARY_FILE
        write_summary(outcome.summary, summary_path)
        logger.info(f"Wrote summary to {summary_path}")

        if not self.config.plots:
            return
        for cell in cells:
            cell_records = [
                r for r in outcome.results.records
                if r.dataset == cell.dataset.name and r.method == cell.label
            ]
            if not cell_records:
                continue
            best = select_plotted_run(cell_records)
            name = f"{safe_file_stem(cell.dataset.name)}__{safe_file_stem(cell.label)}.svg"
            path = plot(
                cell.dataset,
                labels[(cell.dataset_index, cell.method_index, best.run)],
                self.output_dir / PLOTS_DIR / name,
                title=f"{cell.dataset.name} / {cell.label} (run {best.run})",
            )
            outcome.plots.append(path)


def select_plotted_run(records: List[RunRecord]) -> RunRecord:
    """Run with the highest NMI (highest objective when unlabelled); ties go to the lowest run."""
    def score(record: RunRecord) -> float:
        return record.nmi if record.nmi is not None else record.objective

    best = records[0]
    for record in records[1:]:
        if score(record) > score(best) or (score(record) == score(best) and record.run < best.run):
            best = record
    return best


def _mean_std(values: List[Optional[float]]) -> Tuple[Optional[float], Optional[float]]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    array = np.asarray(present, dtype=np.float64)
    return float(np.mean(array)), float(np.std(array))


def summarize(records: List[RunRecord]) -> List[Dict[str, Any]]:
    """Mean and population standard deviation per (dataset, method), in record order."""
    groups: Dict[Tuple[str, str], List[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.dataset, record.method), []).append(record)

    rows = []
    for (dataset, method), group in groups.items():
        nmi_mean, nmi_std = _mean_std([r.nmi for r in group])
        ari_mean, ari_std = _mean_std([r.ari for r in group])
        objective_mean, _ = _mean_std([r.objective for r in group])
        wall_mean, _ = _mean_std([r.wall_time_ms for r in group])
        rows.append({
            "dataset": dataset,
            "method": method,
            "nmi_mean": nmi_mean,
            "nmi_std": nmi_std,
            "ari_mean": ari_mean,
            "ari_std": ari_std,
            "objective_mean": objective_mean,
            "wall_ms_mean": wall_mean,
        })
    return rows


def write_summary(rows: List[Dict[str, Any]], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([
                "" if row[column] is None else (repr(row[column]) if isinstance(row[column], float) else row[column])
                for column in SUMMARY_COLUMNS
            ])


def run(
    config: BenchConfig,
    output_dir: Optional[Union[str, Path]] = None,
    threads: Optional[int] = None
) -> BenchOutcome:
    """
    Run a benchmark sweep and write its result bundle.

    Args:
        config: Validated configuration
        output_dir: Overrides config.output_dir and settings.output_dir
        threads: Worker threads (defaults to settings.bench_threads)

    Returns:
        BenchOutcome; ``exit_code`` is non-zero when any cell failed
    """
    return BenchRunner(config, output_dir=output_dir, threads=threads).run()
