"""Run the benchmark sweep and print the mean-gap table.

    python scripts/run_sweep.py --dims 2 --seeds 5 --out results/2d
"""
import argparse

from curvepolish.bench import BenchConfig, mean_gap_rows, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    cfg = BenchConfig(dimensions=args.dims, seeds=args.seeds, workers=args.workers, output_dir=args.out)
    records, _ = run_benchmark(cfg)
    print(f"{'strategy':<12} {'D':>3} {'unsolved':>9} {'mean gap %':>11}")
    for strategy, d, n, gap in mean_gap_rows(records):
        print(f"{strategy:<12} {d:>3} {n:>9} {gap:>11.1f}")
    failed = sum(r.error is not None for r in records)
    if failed:
        print(f"{failed} runs failed; see records.jsonl")


if __name__ == "__main__":
    main()
