"""
Document schemas: bench configuration, run records and persisted results.
"""
from typing import Annotated, Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import settings
from app.core.dataset import GenSpec

PositiveInt = Annotated[int, Field(ge=1)]
Threshold = Annotated[float, Field(ge=-1.0, lt=1.0)]


# ---------------------------------------------------------------------------
# Bench configuration
# ---------------------------------------------------------------------------

class DatasetSource(BaseModel):
    """One dataset of a sweep: a named benchmark family, a generator spec or a CSV file."""
    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = Field(default=None, description="Name used in records and plots")
    family: Optional[str] = Field(default=None, description="Key of BENCHMARK_FAMILIES")
    generator: Optional[GenSpec] = Field(default=None, description="Inline generator spec")
    csv: Optional[str] = Field(default=None, description="Path to a CSV file")
    label_column: Optional[str] = Field(default="label", description="Ground-truth column in the CSV")
    has_header: bool = True
    overrides: Dict[str, Dict[str, Any]] = Field(
        default_factory=dict,
        description="Per-method parameter overrides keyed by method label"
    )

    @model_validator(mode="after")
    def exactly_one_source(self) -> "DatasetSource":
        """Require exactly one of family, generator and csv."""
        given = [field for field in ("family", "generator", "csv") if getattr(self, field) is not None]
        if len(given) != 1:
            raise ValueError(f"exactly one of family, generator, csv must be set (got {given or 'none'})")
        return self

    @field_validator("family")
    @classmethod
    def validate_family(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return None
        from app.core.dataset import BENCHMARK_FAMILIES

        if v not in BENCHMARK_FAMILIES:
            raise ValueError(f"unknown family '{v}', expected one of {sorted(BENCHMARK_FAMILIES)}")
        return v

    def resolved_name(self) -> str:
        if self.name:
            return self.name
        if self.family:
            return self.family
        if self.generator is not None:
            return self.generator.name or self.generator.family.value
        from pathlib import Path

        return Path(self.csv).stem


class MethodSpec(BaseModel):
    """A clustering method and its parameter grid."""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., description="Registered method name (kbc or kmeans)")
    label: Optional[str] = Field(default=None, description="Display name; defaults to name")
    k: Optional[int] = Field(default=None, ge=2, description="Cluster count; defaults to the true count")

    # kbc
    psi_grid: List[PositiveInt] = Field(default_factory=lambda: list(settings.ik_psi_grid), min_length=1)
    tau_grid: List[Threshold] = Field(default_factory=lambda: list(settings.kbc_tau_grid), min_length=1)
    t: int = Field(default_factory=lambda: settings.ik_t, ge=1)
    sample_size: Optional[int] = Field(default=None, ge=2)
    max_refine_iters: int = Field(default_factory=lambda: settings.kbc_max_refine_iters, ge=0)

    # kmeans
    n_init: int = Field(default_factory=lambda: settings.kmeans_n_init, ge=1)
    max_iters: int = Field(default_factory=lambda: settings.kmeans_max_iters, ge=1)
    tol: float = Field(default_factory=lambda: settings.kmeans_tol, ge=0)

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        from app.core.methods.factory import MethodFactory

        name = v.strip().lower()
        if name not in MethodFactory.available_methods():
            raise ValueError(f"unknown method '{v}', expected one of {MethodFactory.available_methods()}")
        return name

    def resolved_label(self) -> str:
        return self.label or self.name


class BenchConfig(BaseModel):
    """A full sweep: datasets x methods x runs."""
    model_config = ConfigDict(extra="forbid")

    datasets: List[DatasetSource] = Field(..., min_length=1)
    methods: List[MethodSpec] = Field(..., min_length=1)
    runs: int = Field(default_factory=lambda: settings.bench_runs, ge=1)
    master_seed: int = Field(default_factory=lambda: settings.bench_master_seed, ge=0)
    output_dir: Optional[str] = None
    plots: bool = True

    @model_validator(mode="after")
    def unique_names(self) -> "BenchConfig":
        """Dataset names and method labels key the records, so they must be unique."""
        dataset_names = [source.resolved_name() for source in self.datasets]
        if len(set(dataset_names)) != len(dataset_names):
            raise ValueError(f"dataset names must be unique, got {dataset_names}")
        labels = [method.resolved_label() for method in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError(f"method labels must be unique, got {labels}")
        return self


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

class RunRecord(BaseModel):
    """Outcome of one seeded run of one method on one dataset."""
    dataset: str
    method: str
    params: Dict[str, Any]
    run: int = Field(..., ge=0)
    seed: int
    nmi: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    ari: Optional[float] = None
    objective: float
    wall_time_ms: float = Field(..., ge=0.0)


class CellFailure(BaseModel):
    """A dataset or (dataset, method) cell that could not be completed."""
    dataset: str
    method: Optional[str] = None
    run: Optional[int] = None
    stage: str = Field(..., description="load, prepare or run")
    error: str
    message: str


class BenchResults(BaseModel):
    """Contents of results.json."""
    config_digest: str
    records: List[RunRecord] = Field(default_factory=list)
    failures: List[CellFailure] = Field(default_factory=list)


class ClusteringResultDocument(BaseModel):
    """Serialized clustering result, written by ``bench fit``."""
    method: str
    labels: List[int]
    k: int
    objective: float
    params: Dict[str, Any]
    seed: int
    n_refine_iters: int
    seed_groups: Optional[List[List[int]]] = None
    objective_trace: List[float] = Field(default_factory=list)
    stop_reason: Optional[str] = None


class MeanMapDocument(BaseModel):
    counts: List[List[int]]
    member_count: int = Field(..., ge=1)


class IsolationModelDocument(BaseModel):
    """Versioned Isolation Kernel document."""
    format_version: int
    psi: int = Field(..., ge=1)
    t: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    seed: int
    anchors: List[List[List[float]]]
    mean_maps: Optional[List[MeanMapDocument]] = None
