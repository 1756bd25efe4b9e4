"""Run every loss variant over every task regime and print a summary table.

    python3 scripts/convergence_benchmark.py --tasks 100 --out runs/bench
"""

import argparse
import time
from pathlib import Path

from detmath.boxes import Variant
from detmath.experiments import REGIMES, TrainConfig, compare_convergence, curve_emit, gen_tasks, summary_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tasks", type=int, default=100)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, help="write per-regime CSVs here")
    args = parser.parse_args()

    config = TrainConfig(learning_rate=args.lr, steps=args.steps, seed=args.seed)
    print(f"{'regime':<12} {'loss':<5} {'success':>8} {'median':>8} {'iou_med':>8}")
    for regime in REGIMES:
        t0 = time.perf_counter()
        report = compare_convergence(gen_tasks(args.tasks, args.seed, regime), list(Variant), config)
        for s in report.summaries:
            print(f"{regime:<12} {s.variant.value:<5} {s.success_rate:>8.2f} "
                  f"{s.median_steps:>8} {s.final_iou_median:>8.4f}")
        print(f"{'':<12} ({time.perf_counter() - t0:.1f}s)")
        if args.out:
            d = args.out / regime
            d.mkdir(parents=True, exist_ok=True)
            (d / "curves.csv").write_text(curve_emit(report.records))
            (d / "summary.csv").write_text(summary_csv(report.summaries))


if __name__ == "__main__":
    main()
