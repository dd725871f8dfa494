#!/usr/bin/env python3
"""Build the bundled MNIST sample in IDX format.

Source: the 5000-image MNIST excerpt shipped inside the mlxtend wheel
(mlxtend/data/data/mnist_5k.csv.gz, BSD-3-Clause, 500 images per digit).
The first 400 images of each digit (in file order) become the training
split, the remaining 100 the test split. Files are gzip-compressed with a
zero mtime so the output is byte-reproducible.

    pip download --no-deps mlxtend==0.24.0 -d /tmp
    python3 scripts/make_mnist_sample.py /tmp/mlxtend-0.24.0-py3-none-any.whl data/mnist-sample
"""
import gzip
import io
import struct
import sys
import zipfile


def write_gz(path, payload):
    with open(path, "wb") as raw:
        with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
            gz.write(payload)


def main(wheel, out_dir):
    with zipfile.ZipFile(wheel) as z:
        text = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    rows = [list(map(int, line.split(","))) for line in text.splitlines() if line]
    seen = [0] * 10
    splits = {"train": [], "t10k": []}
    for row in rows:
        label = row[-1]
        split = "train" if seen[label] < 400 else "t10k"
        seen[label] += 1
        splits[split].append(row)
    for name, items in splits.items():
        images = io.BytesIO()
        images.write(struct.pack(">IIII", 0x803, len(items), 28, 28))
        labels = io.BytesIO()
        labels.write(struct.pack(">II", 0x801, len(items)))
        for row in items:
            images.write(bytes(row[:-1]))
            labels.write(bytes([row[-1]]))
        write_gz(f"{out_dir}/{name}-images-idx3-ubyte.gz", images.getvalue())
        write_gz(f"{out_dir}/{name}-labels-idx1-ubyte.gz", labels.getvalue())
        print(name, len(items))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
