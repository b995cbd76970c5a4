"""Build a 10k-digit MNIST subset in IDX format from the npm ``mnist`` package.

The npm package (cazala/mnist, MIT) ships 10,000 MNIST digits as JSON with
pixels rounded to three decimals, which is fine enough to recover the
original bytes exactly. Usage::

    npm pack mnist && tar xzf mnist-*.tgz
    python scripts/make_mnist_idx.py package/src/digits data/mnist10k

Digits are interleaved by a seeded shuffle so any prefix is class-balanced in
expectation. Output: ``train-images-idx3-ubyte.gz`` / ``train-labels-idx1-ubyte.gz``.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from dropout_mi.data import write_idx


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    images, labels = [], []
    for digit in range(10):
        flat = np.asarray(json.loads((args.digits_dir / f"{digit}.json").read_text())["data"])
        pix = np.rint(flat * 255.0)
        assert pix.min() >= 0 and pix.max() <= 255 and np.allclose(np.round(pix / 255.0, 3), flat)
        pix = pix.astype(np.uint8).reshape(-1, 28, 28)
        images.append(pix)
        labels.append(np.full(pix.shape[0], digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.default_rng(args.seed).permutation(labels.size)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(images[order], labels[order], args.out_dir / "train-images-idx3-ubyte.gz",
              args.out_dir / "train-labels-idx1-ubyte.gz", compress=True)
    print(f"wrote {labels.size} digits to {args.out_dir}")


if __name__ == "__main__":
    main()
