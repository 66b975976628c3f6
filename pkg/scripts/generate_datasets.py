"""
Write every benchmark dataset to CSV.

Files whose content would not change are left untouched, so downstream tools that
watch the data directory only see real changes.
"""
import argparse
import hashlib
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import List, NamedTuple, Optional

# Allow running as a plain script from the repository root
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import settings, logger  # noqa: E402
from app.core.dataset import BENCHMARK_FAMILIES, generate, save_csv  # noqa: E402


class FamilyOutput(NamedTuple):
    name: str
    staged: Optional[Path]
    error: Optional[str] = None


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def stage_family(name: str, out_dir: Path, seed: Optional[int]) -> FamilyOutput:
    """Generate one family into a temporary file next to its target."""
    try:
        spec = BENCHMARK_FAMILIES[name]
        if seed is not None:
            spec = spec.model_copy(update={"seed": seed})
        dataset = generate(spec)
        with tempfile.NamedTemporaryFile(dir=out_dir, prefix=f".{name}.", suffix=".tmp", delete=False) as tmp:
            staged = Path(tmp.name)
        save_csv(dataset, staged)
        return FamilyOutput(name, staged)
    except Exception as e:
        return FamilyOutput(name, None, f"{type(e).__name__}: {e}")


def generate_datasets(
    out_dir: Path,
    families: List[str],
    seed: Optional[int] = None,
    max_workers: int = 4,
    skip_unchanged: bool = True
) -> List[Path]:
    """
    Generate the requested families in parallel.

    Returns:
        Sorted paths of the files that were (re)written
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    with ProcessPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(stage_family, name, out_dir, seed) for name in families]
        for future in as_completed(futures):
            output = future.result()
            if output.error:
                logger.error(f"Could not generate {output.name}: {output.error}")
                continue

            target = out_dir / f"{output.name}.csv"
            if skip_unchanged and target.exists() and file_digest(target) == file_digest(output.staged):
                output.staged.unlink()
                logger.info(f"Unchanged: {target.name}")
                continue
            output.staged.replace(target)
            written.append(target)
            logger.info(f"Wrote {target}")

    return sorted(written)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Write the benchmark datasets as CSV")
    parser.add_argument("--out", type=Path, default=None, help="Output directory (defaults to DATA_DIR)")
    parser.add_argument(
        "--families",
        nargs="+",
        choices=sorted(BENCHMARK_FAMILIES) + ["all"],
        default=["all"],
        help="Families to generate"
    )
    parser.add_argument("--seed", type=int, default=None, help="Override every family's generator seed")
    parser.add_argument("--workers", type=int, default=4, help="Worker processes")
    parser.add_argument("--force", action="store_true", help="Rewrite files even when unchanged")

    args = parser.parse_args(argv)
    families = sorted(BENCHMARK_FAMILIES) if "all" in args.families else args.families
    out_dir = args.out or settings.data_dir

    written = generate_datasets(out_dir, families, args.seed, args.workers, not args.force)
    print(f"{len(written)} file(s) written to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
