"""Run every experiment recipe and collect the acceptance rows into one CSV."""
import argparse
import sys
from pathlib import Path

from maxagg import experiments
from maxagg.csvio import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--steps-scale", type=float, default=1.0)
    args = ap.parse_args()
    rows = []
    for name in experiments.EXPERIMENTS:
        rows += experiments.run_experiment(name, Path(args.out), args.workers, args.steps_scale)
    write_csv(Path(args.out) / "acceptance.csv", ("criterion_id", "value", "threshold", "pass"), rows)
    failed = [r[0] for r in rows if r[3] is False]
    print(f"{len(rows)} rows, {len(failed)} failed" + (": " + ", ".join(failed) if failed else ""))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
