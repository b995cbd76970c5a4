"""Information-plane trace of the Gaussian-dropout FC net on the bundled MNIST subset.

    python scripts/ip_mnist.py                    # configs/ip_gaussian.yaml
    python scripts/ip_mnist.py --seed 1 --out runs/ip_seed1

Extra arguments are passed through to ``dropout-mi ip-train``.
"""
import sys
from pathlib import Path

from dropout_mi.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    argv = ["ip-train", "--config", str(ROOT / "configs" / "ip_gaussian.yaml"),
            "--data", str(ROOT / "data" / "mnist10k"), *sys.argv[1:]]
    sys.exit(cli_main(argv))
