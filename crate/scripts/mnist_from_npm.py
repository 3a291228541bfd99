#!/usr/bin/env python3
"""Convert the 10,000 MNIST digits bundled in the npm `mnist` package into IDX files.

Usage: mnist_from_npm.py <package/src/digits dir> <out dir> [n_test]

Pixels are stored in the package as round(v/255, 3); they are mapped back to
bytes with round(v * 255). The digits are shuffled with a fixed seed and split
into train-*/t10k-* IDX pairs.
"""
import json
import random
import struct
import sys
from pathlib import Path


def write_idx(path, magic, dims, payload):
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(bytes(payload))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    n_test = int(sys.argv[3]) if len(sys.argv) > 3 else 2000
    samples = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        for start in range(0, len(data), 784):
            pixels = [min(255, max(0, round(v * 255))) for v in data[start:start + 784]]
            samples.append((pixels, digit))
    random.Random(20190101).shuffle(samples)
    test, train = samples[:n_test], samples[n_test:]
    out.mkdir(parents=True, exist_ok=True)
    for prefix, part in (("train", train), ("t10k", test)):
        images = [p for pixels, _ in part for p in pixels]
        labels = [label for _, label in part]
        write_idx(out / f"{prefix}-images-idx3-ubyte", 0x00000803, [len(part), 28, 28], images)
        write_idx(out / f"{prefix}-labels-idx1-ubyte", 0x00000801, [len(part)], labels)
        print(f"{prefix}: {len(part)} samples")


if __name__ == "__main__":
    main()
