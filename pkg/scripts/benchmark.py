#!/usr/bin/env python3
"""
KBC scaling benchmark.

Times kbc.fit on three-blob datasets of growing size at fixed (psi, t, k) and reports
how much the runtime grows each time n doubles. Linear-time behaviour shows up as
ratios close to 2.

# Run the benchmark
python scripts/benchmark.py
"""

import argparse
import json
import os
import platform
import statistics
import sys
import time
from datetime import datetime
from pathlib import Path

import numpy as np
import scipy

# Allow running as a plain script from the repository root
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import settings, logger  # noqa: E402
from app.core.dataset import gen_blobs  # noqa: E402
from app.core.exceptions import ClusteringError  # noqa: E402
from app.services import kbc  # noqa: E402

DEFAULT_SIZES = (2500, 5000, 10000, 20000)
BLOB_CENTERS = ((0.0, 0.0), (10.0, 0.0), (5.0, 8.5))


class SystemProfiler:
    """Profile the machine running the benchmark"""

    @staticmethod
    def get_system_info():
        return {
            'cpu': platform.processor() or platform.machine(),
            'cpu_count_logical': os.cpu_count(),
            'python': platform.python_version(),
            'numpy': np.__version__,
            'scipy': scipy.__version__,
            'platform': platform.platform(),
        }


def three_blobs(n: int, seed: int):
    """n points split as evenly as possible over three unit-variance blobs."""
    sizes = [n // 3 + (1 if i < n % 3 else 0) for i in range(3)]
    return gen_blobs(
        [(center, 1.0, size) for center, size in zip(BLOB_CENTERS, sizes)],
        seed,
        name=f"blobs-{n}",
    )


class BenchmarkSuite:
    """Run the scaling measurement"""

    def __init__(self, output_dir='benchmark_results'):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.results = {
            'timestamp': datetime.now().isoformat(),
            'system_info': SystemProfiler.get_system_info(),
            'tests': []
        }

    def test_linear_scaling(self, sizes=DEFAULT_SIZES, psi=16, t=200, k=3, tau=0.3, repeats=3):
        """Median fit time per n and the growth factor per doubling"""
        print("\n=== KBC fit time vs n ===")
        print(f"psi={psi}, t={t}, k={k}, tau={tau}, repeats={repeats}")

        rows = []
        for n in sizes:
            dataset = three_blobs(n, seed=n)
            times = []
            error = None
            for r in range(repeats):
                params = kbc.KbcParams(k=k, tau=tau, psi=psi, t=t, seed=r)
                start = time.perf_counter()
                try:
                    kbc.fit(dataset, params)
                except ClusteringError as e:
                    error = str(e)
                    break
                times.append(time.perf_counter() - start)

            row = {'n': n, 'times_s': [round(x, 4) for x in times], 'error': error}
            if times:
                row['median_s'] = round(statistics.median(times), 4)
            rows.append(row)

            if error:
                print(f"n={n:6d} | failed: {error}")
            else:
                print(f"n={n:6d} | median {row['median_s']:8.3f}s")

        ratios = []
        for prev, cur in zip(rows, rows[1:]):
            if 'median_s' in prev and 'median_s' in cur and prev['median_s'] > 0:
                ratio = cur['median_s'] / prev['median_s']
                ratios.append({'from_n': prev['n'], 'to_n': cur['n'], 'ratio': round(ratio, 3)})
                print(f"  {prev['n']:6d} -> {cur['n']:6d}: x{ratio:.2f}")

        worst = max((r['ratio'] for r in ratios), default=None)
        self.results['tests'].append({
            'name': 'linear_scaling',
            'params': {'psi': psi, 't': t, 'k': k, 'tau': tau, 'repeats': repeats},
            'results': rows,
            'doubling_ratios': ratios,
            'max_ratio': worst,
            'within_3x': worst is not None and worst <= 3.0,
        })

    def run_all_tests(self, **kwargs):
        """Run the complete suite and save a timestamped report"""
        print("=" * 60)
        print(f"{settings.app_name.upper()} SCALING BENCHMARK")
        print("=" * 60)
        for key, value in self.results['system_info'].items():
            print(f"  {key}: {value}")

        self.test_linear_scaling(**kwargs)

        output_file = self.output_dir / f"benchmark_{datetime.now().strftime('%Y%m%d_%H%M%S')}.json"
        with open(output_file, 'w') as f:
            json.dump(self.results, f, indent=2)

        print("\n" + "=" * 60)
        print(f"Benchmark complete! Results saved to: {output_file}")
        print("=" * 60)
        logger.info(f"Scaling report written to {output_file}")
        return output_file


def main():
    """Main entry point"""
    parser = argparse.ArgumentParser(description="Measure how KBC fit time grows with n")
    parser.add_argument("--sizes", type=int, nargs="+", default=list(DEFAULT_SIZES))
    parser.add_argument("--psi", type=int, default=16)
    parser.add_argument("--t", type=int, default=settings.ik_t)
    parser.add_argument("--tau", type=float, default=0.3)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--out", type=Path, default=Path("benchmark_results"))
    args = parser.parse_args()

    benchmark = BenchmarkSuite(output_dir=args.out)
    benchmark.run_all_tests(sizes=args.sizes, psi=args.psi, t=args.t, tau=args.tau, repeats=args.repeats)


if __name__ == "__main__":
    main()
