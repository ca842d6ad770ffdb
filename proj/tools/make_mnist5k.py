#!/usr/bin/env python3
"""Build small MNIST IDX files from the 5000-image subset bundled with mlxtend.

The subset holds 500 images per digit. The first 400 of each digit go to the
train files and the remaining 100 to the test files. Output is gzip-compressed
IDX (magic 0x00000803 for images, 0x00000801 for labels).

    python3 tools/make_mnist5k.py --out data
"""
import argparse
import gzip
import io
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile

import numpy as np


def fetch_csv(wheel_dir):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", wheel_dir, "mlxtend"],
        check=True,
    )
    wheel = next(pathlib.Path(wheel_dir).glob("mlxtend-*.whl"))
    with zipfile.ZipFile(wheel) as z:
        return gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()


def write_idx(path, images, labels):
    n = len(labels)
    img = struct.pack(">IIII", 0x00000803, n, 28, 28) + images.astype(np.uint8).tobytes()
    lab = struct.pack(">II", 0x00000801, n) + labels.astype(np.uint8).tobytes()
    with gzip.GzipFile(path + "-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(img)
    with gzip.GzipFile(path + "-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(lab)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--test-per-class", type=int, default=100)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        table = np.loadtxt(io.StringIO(fetch_csv(tmp)), delimiter=",")
    pixels, labels = table[:, :-1], table[:, -1].astype(int)

    train_idx, test_idx = [], []
    for digit in range(10):
        idx = np.flatnonzero(labels == digit)
        cut = len(idx) - args.test_per_class
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(str(out / "mnist5k-train"), pixels[train_idx], labels[train_idx])
    write_idx(str(out / "mnist5k-test"), pixels[test_idx], labels[test_idx])
    print(f"train={len(train_idx)} test={len(test_idx)} -> {out}")


if __name__ == "__main__":
    main()
