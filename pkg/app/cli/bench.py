"""
Command line interface: ``bench run | gen | fit | plot``.

Exit codes: 0 on success, 1 when a clustering error (or I/O error) stops the
command or a benchmark cell failed, 2 on usage errors.
"""
import argparse
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from config import settings, logger
from config.logging_config import set_log_level
from app.core.dataset import (
    BlobSpec,
    GeneratorFamily,
    GenSpec,
    RingSpec,
    generate,
    load_csv,
    save_csv,
)
from app.core.exceptions import ClusteringError, InvalidSpecError
from app.core.ikernel import save_model
from app.core.dkernel import cell_counts, MeanMap
from app.services import bench, kbc
from app.services.baselines import KmeansParams, kmeans_fit
from app.services.metrics import ari, nmi
from app.services.plot import plot

DEFAULT_LABEL_COLUMN = "label"

FAMILY_FLAGS: Dict[str, GeneratorFamily] = {
    "two-crescents": GeneratorFamily.TWO_CRESCENTS,
    "blobs": GeneratorFamily.BLOBS,
    "spiral": GeneratorFamily.SPIRAL,
    "rings-gaussians": GeneratorFamily.RINGS_GAUSSIANS,
    "subspace-gaussians": GeneratorFamily.SUBSPACE_GAUSSIANS,
}


def _parse_groups(raw: str, flag: str) -> List[List[float]]:
    """Split "a,b,c;d,e,f" into lists of floats."""
    groups = []
    for chunk in raw.split(";"):
        if not chunk.strip():
            continue
        try:
            groups.append([float(part) for part in chunk.split(",")])
        except ValueError:
            raise InvalidSpecError(f"{flag}: '{chunk}' is not a comma separated list of numbers")
    return groups


def parse_blob_specs(raw: str) -> List[BlobSpec]:
    """``center..., stddev, count`` per blob, blobs separated by ';'."""
    blobs = []
    for values in _parse_groups(raw, "--spec"):
        if len(values) < 3 or values[-1] != int(values[-1]):
            raise InvalidSpecError(f"--spec: blob '{values}' needs center coordinates, stddev and an integer count")
        blobs.append(BlobSpec(center=values[:-2], stddev=values[-2], count=int(values[-1])))
    return blobs


def parse_ring_specs(raw: str) -> List[RingSpec]:
    """``cx, cy, radius, radial_std, count`` per ring, rings separated by ';'."""
    rings = []
    for values in _parse_groups(raw, "--rings"):
        if len(values) != 5 or values[-1] != int(values[-1]):
            raise InvalidSpecError(f"--rings: ring '{values}' needs cx, cy, radius, radial_std and an integer count")
        rings.append(RingSpec(center=values[:2], radius=values[2], radial_std=values[3], count=int(values[4])))
    return rings


def _int_list(raw: str) -> List[int]:
    return [int(part) for part in raw.split(",") if part.strip()]


def _float_list(raw: str) -> List[float]:
    return [float(part) for part in raw.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Cluster-as-distribution toolkit: KBC, k-means and the benchmark harness"
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Override LOG_LEVEL"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # run
    run_parser = subparsers.add_parser("run", help="Run a benchmark sweep from a JSON config")
    run_parser.add_argument("--config", type=Path, required=True, help="Bench config (JSON)")
    run_parser.add_argument("--out", type=Path, default=None, help="Output directory")
    run_parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads (falls back to BENCH_THREADS)"
    )

    # gen
    gen_parser = subparsers.add_parser("gen", help="Generate a synthetic dataset as CSV")
    gen_parser.add_argument("--family", choices=sorted(FAMILY_FLAGS), required=True)
    gen_parser.add_argument("--out", type=Path, required=True, help="CSV file to write")
    gen_parser.add_argument("--seed", type=int, default=0)
    gen_parser.add_argument("--name", default=None, help="Dataset name")
    gen_parser.add_argument("--n", type=int, default=1200, help="two-crescents: total points")
    gen_parser.add_argument("--noise", type=float, default=None, help="two-crescents/spiral: jitter")
    gen_parser.add_argument("--gap", type=float, default=0.0, help="two-crescents: extra arm separation")
    gen_parser.add_argument(
        "--spec",
        default=None,
        help='blobs/rings-gaussians: "cx,cy,...,stddev,count;..."'
    )
    gen_parser.add_argument("--rings", default=None, help='rings-gaussians: "cx,cy,radius,radial_std,count;..."')
    gen_parser.add_argument("--n-per-arm", type=int, default=104, help="spiral: points per arm")
    gen_parser.add_argument("--arms", type=int, default=3, help="spiral: arm count")
    gen_parser.add_argument("--turns", type=float, default=1.0, help="spiral: turns per arm")
    gen_parser.add_argument("--start-radius", type=float, default=0.3, help="spiral: inner radius")
    gen_parser.add_argument("--arm-gap", type=float, default=0.5, help="spiral: gap between neighbouring arms")
    gen_parser.add_argument("--dim-total", type=int, default=200, help="subspace-gaussians: dimensionality")
    gen_parser.add_argument("--dim-sub", type=int, default=100, help="subspace-gaussians: block size")
    gen_parser.add_argument("--n-per-cluster", type=int, default=500, help="subspace-gaussians: cluster size")
    gen_parser.add_argument("--stddev", type=float, default=1.0, help="subspace-gaussians: stddev")

    # fit
    fit_parser = subparsers.add_parser("fit", help="Cluster one CSV dataset")
    fit_parser.add_argument("--method", choices=["kbc", "kmeans"], required=True)
    fit_parser.add_argument("--data", type=Path, required=True, help="CSV dataset")
    fit_parser.add_argument("--out", type=Path, required=True, help="Result JSON to write")
    fit_parser.add_argument(
        "--label-column",
        default=None,
        help='Ground-truth column ("" for none); defaults to "label" when the header has it'
    )
    fit_parser.add_argument("--no-header", action="store_true", help="CSV has no header row")
    fit_parser.add_argument("--k", type=int, default=None, help="Cluster count (defaults to the true count)")
    fit_parser.add_argument("--seed", type=int, default=0)
    fit_parser.add_argument("--psi", type=_int_list, default=None, help="kbc: psi value or comma list to tune")
    fit_parser.add_argument("--tau", type=_float_list, default=None, help="kbc: tau value or comma list to tune")
    fit_parser.add_argument("--t", type=int, default=None, help="kbc: number of partitions")
    fit_parser.add_argument("--s", type=int, default=None, help="kbc: sample size")
    fit_parser.add_argument("--max-refine-iters", type=int, default=None, help="kbc: refinement cap")
    fit_parser.add_argument("--model-out", type=Path, default=None, help="kbc: also save the kernel model")
    fit_parser.add_argument("--n-init", type=int, default=None, help="kmeans: restarts")
    fit_parser.add_argument("--max-iters", type=int, default=None, help="kmeans: Lloyd iteration cap")
    fit_parser.add_argument("--tol", type=float, default=None, help="kmeans: centroid shift tolerance")

    # plot
    plot_parser = subparsers.add_parser("plot", help="Scatter plot a dataset coloured by labels")
    plot_parser.add_argument("--data", type=Path, required=True, help="CSV dataset")
    plot_parser.add_argument("--labels", type=Path, required=True, help="Result JSON or JSON label list")
    plot_parser.add_argument("--out", type=Path, required=True, help="SVG file to write")
    plot_parser.add_argument(
        "--label-column",
        default=None,
        help='Ground-truth column ("" for none); defaults to "label" when the header has it'
    )
    plot_parser.add_argument("--no-header", action="store_true")
    plot_parser.add_argument("--title", default=None)

    return parser


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _gen_spec(args: argparse.Namespace) -> GenSpec:
    family = FAMILY_FLAGS[args.family]
    fields = {"family": family, "seed": args.seed, "name": args.name}

    if family == GeneratorFamily.TWO_CRESCENTS:
        fields.update(n_total=args.n, gap=args.gap)
        if args.noise is not None:
            fields["noise"] = args.noise
    elif family == GeneratorFamily.BLOBS:
        if not args.spec:
            raise InvalidSpecError("--spec is required for --family blobs")
        fields["blobs"] = parse_blob_specs(args.spec)
    elif family == GeneratorFamily.SPIRAL:
        fields.update(n_per_arm=args.n_per_arm, arms=args.arms, turns=args.turns,
                      start_radius=args.start_radius, arm_gap=args.arm_gap)
        fields["noise"] = args.noise if args.noise is not None else 0.02
    elif family == GeneratorFamily.RINGS_GAUSSIANS:
        if not args.rings and not args.spec:
            raise InvalidSpecError("--rings and/or --spec is required for --family rings-gaussians")
        fields["rings"] = parse_ring_specs(args.rings) if args.rings else []
        fields["blobs"] = parse_blob_specs(args.spec) if args.spec else []
    elif family == GeneratorFamily.SUBSPACE_GAUSSIANS:
        fields.update(dim_total=args.dim_total, dim_sub=args.dim_sub,
                      n_per_cluster=args.n_per_cluster, stddev=args.stddev)

    return GenSpec(**fields)


def cmd_gen(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        dataset = generate(_gen_spec(args))
    except (InvalidSpecError, ValidationError) as e:
        parser.error(f"gen: {e}")

    save_csv(dataset, args.out)
    print(json.dumps(dataset.summary()))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = bench.load_bench_config(args.config)
    threads = args.threads
    if threads is None:
        threads = int(os.getenv("BENCH_THREADS", str(settings.bench_threads)))

    outcome = bench.run(config, output_dir=args.out, threads=threads)
    for row in outcome.summary:
        print(
            f"{row['dataset']:<20} {row['method']:<10} "
            f"NMI={_fmt(row['nmi_mean'])}±{_fmt(row['nmi_std'])} "
            f"ARI={_fmt(row['ari_mean'])}±{_fmt(row['ari_std'])}"
        )
    for failure in outcome.results.failures:
        where = "/".join(str(p) for p in (failure.dataset, failure.method, failure.run) if p is not None)
        print(f"FAILED {failure.stage} {where}: {failure.error}: {failure.message}", file=sys.stderr)
    return outcome.exit_code


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def _load(path: Path, label_column: Optional[str], no_header: bool):
    if label_column is None:
        return load_csv(path, has_header=not no_header, label_column=DEFAULT_LABEL_COLUMN, require_label=False)
    return load_csv(path, has_header=not no_header, label_column=label_column or None)


def cmd_fit(args: argparse.Namespace) -> int:
    dataset = _load(args.data, args.label_column, args.no_header)
    k = args.k if args.k is not None else dataset.n_clusters
    if k is None:
        raise InvalidSpecError("--k is required when the data has no label column")

    if args.method == "kbc":
        psi_values = args.psi or list(settings.ik_psi_grid)
        tau_values = args.tau or list(settings.kbc_tau_grid)
        if len(psi_values) == 1 and len(tau_values) == 1:
            params = kbc.KbcParams(
                k=k,
                tau=tau_values[0],
                psi=psi_values[0],
                t=args.t if args.t is not None else settings.ik_t,
                s=args.s,
                max_refine_iters=(args.max_refine_iters if args.max_refine_iters is not None
                                  else settings.kbc_max_refine_iters),
                seed=args.seed,
            )
            result = kbc.fit(dataset, params)
        else:
            _, result, _ = kbc.tune(
                dataset, psi_values, tau_values, k=k, s=args.s, t=args.t,
                seed=args.seed, max_refine_iters=args.max_refine_iters,
            )
        if args.model_out is not None and result.model is not None:
            cells = result.model.transform_many(dataset.points)
            mean_maps = [
                MeanMap(counts=cell_counts(cells[result.partition.members(j)], result.model.psi),
                        member_count=int(result.partition.sizes()[j]))
                for j in range(result.k)
            ]
            save_model(result.model, args.model_out, mean_maps=mean_maps)
    else:
        params = KmeansParams(
            k=k,
            n_init=args.n_init if args.n_init is not None else settings.kmeans_n_init,
            max_iters=args.max_iters if args.max_iters is not None else settings.kmeans_max_iters,
            tol=args.tol if args.tol is not None else settings.kmeans_tol,
            seed=args.seed,
        )
        result = kmeans_fit(dataset, params)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(result.to_document().model_dump_json(indent=2), encoding="utf-8")

    summary = {"method": args.method, "k": result.k, "objective": result.objective}
    if dataset.labels is not None:
        summary["nmi"] = nmi(dataset.labels, result.labels)
        summary["ari"] = ari(dataset.labels, result.labels) if dataset.n >= 2 else None
    print(json.dumps(summary))
    return 0


def read_labels(path: Path) -> np.ndarray:
    """Labels from a result document or a bare JSON list."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InvalidSpecError(f"{path}: invalid JSON ({e.msg})")
    if isinstance(payload, dict):
        payload = payload.get("labels")
    if not isinstance(payload, list) or not all(isinstance(v, int) for v in payload):
        raise InvalidSpecError(f"{path}: expected a list of integer labels or a document with 'labels'")
    return np.asarray(payload, dtype=np.int64)


def cmd_plot(args: argparse.Namespace) -> int:
    dataset = _load(args.data, args.label_column, args.no_header)
    labels = read_labels(args.labels)
    plot(dataset, labels, args.out, title=args.title)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        set_log_level(args.log_level)

    try:
        if args.command == "gen":
            return cmd_gen(args, parser)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "fit":
            return cmd_fit(args)
        if args.command == "plot":
            return cmd_plot(args)
    except ClusteringError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
