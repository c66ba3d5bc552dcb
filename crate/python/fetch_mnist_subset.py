"""Build a small MNIST subset in IDX format.

The 5,000-image MNIST sample shipped inside the mlxtend wheel (500 per digit) is
split into a 2,000-image train file and a 1,000-image test file, stratified by
digit and in file order. Output goes to data/mnist-5k/ under the repository root.

    python python/fetch_mnist_subset.py [--wheel PATH] [--out DIR]
"""

import argparse
import gzip
import io
import struct
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

import numpy as np

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"
TRAIN_PER_DIGIT = 200
TEST_PER_DIGIT = 100


def find_wheel(explicit):
    if explicit:
        return Path(explicit)
    tmp = Path(tempfile.mkdtemp())
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "mlxtend==0.24.0", "--no-deps", "-d", str(tmp)],
        check=True,
    )
    return next(tmp.glob("mlxtend-*.whl"))


def write_idx(images, labels, image_path, label_path):
    n = len(labels)
    with open(image_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(label_path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel")
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "mnist-5k"))
    args = ap.parse_args()

    with zipfile.ZipFile(find_wheel(args.wheel)) as z:
        raw = gzip.decompress(z.read(MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    pixels, labels = table[:, :784], table[:, 784]

    train, test = [], []
    for digit in range(10):
        rows = np.flatnonzero(labels == digit)
        train.extend(rows[:TRAIN_PER_DIGIT])
        test.extend(rows[TRAIN_PER_DIGIT:TRAIN_PER_DIGIT + TEST_PER_DIGIT])
    train, test = np.sort(train), np.sort(test)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(pixels[train], labels[train], out / "train-images.idx3-ubyte", out / "train-labels.idx1-ubyte")
    write_idx(pixels[test], labels[test], out / "test-images.idx3-ubyte", out / "test-labels.idx1-ubyte")
    print(f"wrote {len(train)} train / {len(test)} test images to {out}")


if __name__ == "__main__":
    main()
