"""Toy-problem estimator study over n in {1, 50} and sigma in {0.1, 0.4}.

Writes one directory per (n, sigma) with the per-repetition records, the
estimator comparison table and a manifest, then prints the headline numbers.

    python scripts/toy_convergence.py --out runs/toy --grid 100,1000,10000
"""
import argparse
from pathlib import Path

from dropout_mi.cli import main as cli_main
from dropout_mi.harness import read_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/toy"))
    ap.add_argument("--grid", default="100,1000,10000,100000")
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for n in (1, 50):
        for sigma in (0.1, 0.4):
            out = args.out / f"n{n}_sigma{sigma}"
            code = cli_main(["toy-convergence", "--n", str(n), "--sigma", str(sigma), "--grid", args.grid,
                             "--reps", str(args.reps), "--seed", str(args.seed), "--out", str(out)])
            if code:
                raise SystemExit(code)
            rows = read_csv(out / "toy_comparison.csv")
            for r in rows:
                if r["estimator"] in ("mi_gmm", "h_z_mc", "h_z_gaussian_bound"):
                    oracle = f" oracle={float(r['oracle']):.4f}" if r["oracle"] else ""
                    print(f"n={n} sigma={sigma} |S|={r['sample_count']:>6} {r['estimator']:<20}"
                          f" mean={float(r['mean']):9.4f} spread={float(r['spread']):.4f}{oracle}")


if __name__ == "__main__":
    main()
