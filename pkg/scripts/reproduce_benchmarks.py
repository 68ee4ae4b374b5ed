#!/usr/bin/env python3
"""Run the bundled benchmark configs and compare results to their thresholds.

Each config in configs/ pins a synthetic dataset (2000 pairs, 10 features,
fixed seeds) and a learner. This script reruns all of them, prints a
comparison table, and exits nonzero if any threshold is missed. Runtime is
a couple of minutes on one desktop core, most of it neuroevolution.

Usage:
    python3 scripts/reproduce_benchmarks.py [--configs-dir DIR] [--json OUT]
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from preflearn.experiment import ExperimentConfig, run_experiment

REPO_ROOT = Path(__file__).resolve().parents[1]


@dataclass(frozen=True)
class Benchmark:
    name: str
    config: str  # file name under the configs directory
    min_mean: float | None = None  # absolute accuracy floor
    min_gap_over: str | None = None  # name of the baseline benchmark…
    min_gap: float = 0.0  # …that this one must beat by at least min_gap
    max_seconds: float | None = None  # wall-clock budget for the whole run


BENCHMARKS = (
    Benchmark("linear-ranksvm", "linear_ranksvm.json", min_mean=0.92, max_seconds=120),
    Benchmark("linear-backprop", "linear_backprop.json", min_mean=0.92, max_seconds=120),
    Benchmark("quadratic-svm-linear", "quadratic_svm_linear.json"),
    Benchmark(
        "quadratic-svm-poly",
        "quadratic_svm_poly.json",
        min_gap_over="quadratic-svm-linear",
        min_gap=0.05,
    ),
    Benchmark("nonlinear-svm-rbf", "nonlinear_svm_rbf.json", min_mean=0.80),
    Benchmark("nonlinear-neuro", "nonlinear_neuro.json", min_mean=0.80),
)


def run_benchmarks(configs_dir: Path, quiet: bool = False) -> list[dict]:
    results = []
    for bench in BENCHMARKS:
        path = configs_dir / bench.config
        config = ExperimentConfig.from_json(json.loads(path.read_text()))
        if not quiet:
            print(f"running {bench.name} ...", file=sys.stderr)
        started = time.perf_counter()
        report = run_experiment(config)
        elapsed = time.perf_counter() - started
        results.append(
            {
                "name": bench.name,
                "config": str(path),
                "mean": report.mean,
                "folds": list(report.folds.values),
                "seconds": elapsed,
            }
        )
    return results


def check_thresholds(results: list[dict]) -> list[dict]:
    """Attach requirement/status fields to each result; returns the rows."""
    by_name = {r["name"]: r for r in results}
    for bench in BENCHMARKS:
        row = by_name[bench.name]
        requirements = []
        failures = []
        if bench.min_mean is not None:
            requirements.append(f"mean >= {bench.min_mean:.2f}")
            if row["mean"] < bench.min_mean:
                failures.append(f"mean {row['mean']:.4f} < {bench.min_mean:.2f}")
        if bench.min_gap_over is not None:
            baseline = by_name[bench.min_gap_over]["mean"]
            gap = row["mean"] - baseline
            requirements.append(
                f"mean >= {bench.min_gap_over} + {bench.min_gap:.2f}"
            )
            row["gap"] = gap
            if gap < bench.min_gap:
                failures.append(f"gap {gap:+.4f} < {bench.min_gap:.2f}")
        if bench.max_seconds is not None:
            requirements.append(f"time < {bench.max_seconds:.0f}s")
            if row["seconds"] >= bench.max_seconds:
                failures.append(f"{row['seconds']:.1f}s >= {bench.max_seconds:.0f}s")
        row["requirement"] = "; ".join(requirements) or "baseline only"
        row["status"] = "FAIL: " + "; ".join(failures) if failures else "ok"
    return results


def print_table(rows: list[dict]) -> None:
    header = f"{'benchmark':<22} {'mean':>7} {'gap':>8} {'time':>8}  requirement"
    print(header)
    print("-" * len(header))
    for row in rows:
        gap = f"{row['gap']:+.4f}" if "gap" in row else "-"
        print(
            f"{row['name']:<22} {row['mean']:>7.4f} {gap:>8} "
            f"{row['seconds']:>7.1f}s  {row['requirement']}"
        )
        if row["status"] != "ok":
            print(f"{'':<22} {row['status']}")
    misses = [r["name"] for r in rows if r["status"] != "ok"]
    if misses:
        print(f"\n{len(misses)} benchmark(s) missed thresholds: {', '.join(misses)}")
    else:
        print("\nall benchmarks within thresholds")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--configs-dir",
        type=Path,
        default=REPO_ROOT / "configs",
        help="directory holding the bundled benchmark configs",
    )
    parser.add_argument(
        "--json", type=Path, default=None, help="also write results as JSON"
    )
    parser.add_argument(
        "--quiet", action="store_true", help="suppress per-run progress on stderr"
    )
    args = parser.parse_args(argv)

    rows = check_thresholds(run_benchmarks(args.configs_dir, quiet=args.quiet))
    print_table(rows)
    if args.json is not None:
        args.json.write_text(json.dumps(rows, indent=2) + "\n")
    return 1 if any(r["status"] != "ok" for r in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
