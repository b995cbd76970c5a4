"""Train the information-dropout surrogate for several beta values and compare
the late-training KL estimate of I(X;Z).

    python scripts/beta_sweep.py --betas 0.5,3,20 --out runs/beta
"""
import argparse
from pathlib import Path

import numpy as np

from dropout_mi.cli import main as cli_main
from dropout_mi.harness import read_csv, write_csv

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--betas", default="3,20")
    ap.add_argument("--out", type=Path, default=Path("runs/beta"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--last", type=int, default=5, help="probe epochs averaged at the end")
    args = ap.parse_args()

    summary = []
    for beta in (float(b) for b in args.betas.split(",")):
        out = args.out / f"beta{beta:g}"
        code = cli_main(["ip-train", "--config", str(ROOT / "configs" / "ip_info.yaml"),
                         "--data", str(ROOT / "data" / "mnist10k"), "--beta", str(beta),
                         "--seed", str(args.seed), "--out", str(out)])
        if code:
            raise SystemExit(code)
        rows = read_csv(out / "ip_trace.csv")
        late = [float(r["mi_xz"]) for r in rows[-args.last:]]
        summary.append({"beta": beta, "late_mean_kl": float(np.mean(late)),
                        "final_test_accuracy": float(rows[-1]["test_accuracy"])})
        print(f"beta={beta:g}: late mean KL={summary[-1]['late_mean_kl']:.3f} "
              f"acc={summary[-1]['final_test_accuracy']:.4f}")
    write_csv(summary, args.out / "beta_sweep.csv")


if __name__ == "__main__":
    main()
