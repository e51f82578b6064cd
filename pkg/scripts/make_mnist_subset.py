"""Build the small MNIST fixture used by the test suite.

Source: the MIT-licensed npm package ``mnist`` (1.1.0), which ships 10,000
MNIST digits as JSON arrays of 784 intensities in [0, 1] rounded to three
decimals; ``rint(x * 255)`` recovers the original bytes.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python scripts/make_mnist_subset.py package/src/digits tests/data

Writes gzipped IDX files holding the first ``--per-digit`` images of each
digit, interleaved 0,1,...,9,0,1,... so any prefix stays balanced.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from twodpca.formats import write_idx_images, write_idx_labels


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--per-digit", type=int, default=120)
    args = ap.parse_args(argv)

    per_digit = []
    for d in range(10):
        flat = json.loads((args.digits_dir / f"{d}.json").read_text())["data"]
        raw = np.asarray(flat, dtype=np.float64).reshape(-1, 28, 28)[: args.per_digit]
        if raw.shape[0] < args.per_digit:
            raise SystemExit(f"digit {d}: only {raw.shape[0]} images available")
        per_digit.append(np.rint(raw * 255).astype(np.uint8))
    images = np.stack(per_digit, axis=1).reshape(-1, 28, 28)
    labels = np.tile(np.arange(10, dtype=np.uint8), args.per_digit)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx_images(args.out_dir / "mnist-subset-images-idx3-ubyte.gz", images, compress=True)
    write_idx_labels(args.out_dir / "mnist-subset-labels-idx1-ubyte.gz", labels, compress=True)
    print(f"wrote {images.shape[0]} images to {args.out_dir}")


if __name__ == "__main__":
    main()
