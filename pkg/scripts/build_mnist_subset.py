"""Build the desk-scale MNIST subset shipped in data/mnist-desk/.

Source: the ``mnist`` npm package (10,000 MNIST digits, MIT licence), whose
``src/digits/<d>.json`` files store 28x28 images as pixel/255 fractions.

    npm pack mnist && tar xzf mnist-*.tgz
    python scripts/build_mnist_subset.py package/src/digits data/mnist-desk
"""
import argparse
import json
from pathlib import Path

import numpy as np

from paretoprune.data import Dataset, desk_subset, one_hot, write_idx


def load_npm_digits(digits_dir):
    images, labels = [], []
    for d in range(10):
        raw = np.asarray(json.loads((Path(digits_dir) / f"{d}.json").read_text())["data"])
        pix = np.rint(raw * 255.0).reshape(-1, 784) / 255.0
        images.append(pix)
        labels.append(np.full(pix.shape[0], d))
    return Dataset(np.concatenate(images), one_hot(np.concatenate(labels), 10), "npm-mnist")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--train", type=int, default=6000)
    ap.add_argument("--test", type=int, default=1000)
    args = ap.parse_args()

    full = load_npm_digits(args.digits_dir)
    train = desk_subset(full, args.train)
    test = desk_subset(full, args.test, skip=args.train)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(train, out / "train-images-idx3-ubyte.gz", out / "train-labels-idx1-ubyte.gz")
    write_idx(test, out / "t10k-images-idx3-ubyte.gz", out / "t10k-labels-idx1-ubyte.gz")
    print(f"wrote {len(train)} train / {len(test)} test samples to {out}")


if __name__ == "__main__":
    main()
