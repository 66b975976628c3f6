"""
Toolkit settings, read once from the environment (and a .env file if present).
"""
import os
from pathlib import Path
from typing import Optional, Tuple
from dataclasses import dataclass, field
from dotenv import load_dotenv

load_dotenv()

DEFAULT_PSI_GRID: Tuple[int, ...] = (2, 4, 8, 16, 32)
DEFAULT_TAU_GRID: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def _env_bool(name: str, default: bool = False) -> bool:
    return os.getenv(name, str(default)).strip().lower() in ("1", "true", "yes")


def _env_path(name: str) -> Optional[Path]:
    raw = os.getenv(name)
    return Path(raw) if raw else None


def _parse_int_list(raw: Optional[str], default: Tuple[int, ...]) -> Tuple[int, ...]:
    """Parse a comma separated list of ints; empty or unset keeps the default."""
    if not raw or not raw.strip():
        return default
    return tuple(int(part) for part in raw.split(",") if part.strip())


def _parse_float_list(raw: Optional[str], default: Tuple[float, ...]) -> Tuple[float, ...]:
    """Parse a comma separated list of floats; empty or unset keeps the default."""
    if not raw or not raw.strip():
        return default
    return tuple(float(part) for part in raw.split(",") if part.strip())


@dataclass
class Settings:
    """Defaults for every tunable in the toolkit. Explicit arguments always win."""

    # Application
    app_name: str = "CaD Cluster"
    version: str = "1.0.0"
    debug: bool = False
    environment: str = "development"

    # Paths
    base_dir: Path = field(default_factory=lambda: Path(__file__).resolve().parent.parent)
    data_dir: Optional[Path] = None
    output_dir: Optional[Path] = None
    log_dir: Path = field(init=False)

    # Isolation Kernel
    ik_t: int = 200
    ik_psi_grid: Tuple[int, ...] = DEFAULT_PSI_GRID

    # KBC
    kbc_tau_grid: Tuple[float, ...] = DEFAULT_TAU_GRID
    kbc_sample_size: int = 512
    kbc_max_refine_iters: int = 100

    # k-means baseline
    kmeans_n_init: int = 10
    kmeans_max_iters: int = 300
    kmeans_tol: float = 1e-6

    # Benchmark harness
    bench_runs: int = 10
    bench_threads: int = 1
    bench_master_seed: int = 0

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    log_to_file: bool = False

    def __post_init__(self):
        # The log directory is created by setup_logger on first use
        self.data_dir = self.data_dir or self.base_dir / "data"
        self.output_dir = self.output_dir or self.base_dir / "bench_results"
        self.log_dir = self.base_dir / "logs"

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from environment variables, falling back to the dataclass defaults."""
        return cls(
            debug=_env_bool("DEBUG"),
            environment=os.getenv("ENVIRONMENT", "development"),
            data_dir=_env_path("DATA_DIR"),
            output_dir=_env_path("OUTPUT_DIR"),
            ik_t=int(os.getenv("IK_T", "200")),
            ik_psi_grid=_parse_int_list(os.getenv("IK_PSI_GRID"), DEFAULT_PSI_GRID),
            kbc_tau_grid=_parse_float_list(os.getenv("KBC_TAU_GRID"), DEFAULT_TAU_GRID),
            kbc_sample_size=int(os.getenv("KBC_SAMPLE_SIZE", "512")),
            kbc_max_refine_iters=int(os.getenv("KBC_MAX_REFINE_ITERS", "100")),
            kmeans_n_init=int(os.getenv("KMEANS_N_INIT", "10")),
            kmeans_max_iters=int(os.getenv("KMEANS_MAX_ITERS", "300")),
            kmeans_tol=float(os.getenv("KMEANS_TOL", "1e-6")),
            bench_runs=int(os.getenv("BENCH_RUNS", "10")),
            bench_threads=int(os.getenv("BENCH_THREADS", "1")),
            bench_master_seed=int(os.getenv("BENCH_MASTER_SEED", "0")),
            log_level=os.getenv("LOG_LEVEL", "INFO"),
            log_to_file=_env_bool("LOG_TO_FILE"),
        )


settings = Settings.from_env()
