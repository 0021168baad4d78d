#!/usr/bin/env python3
"""Build data/mnist-10k from the 10,000 MNIST digits bundled in the npm package `mnist`.

The package stores each class as a flat list of 784-pixel rows scaled to [0, 1]
with three decimals; multiplying by 255 and rounding recovers the original bytes.
Samples are interleaved with a fixed shuffle so any prefix is roughly class balanced.

    python3 tools/fetch_mnist_subset.py            # runs `npm pack mnist@1.1.0`
    python3 tools/fetch_mnist_subset.py --tarball mnist-1.1.0.tgz
"""

import argparse
import gzip
import json
import random
import struct
import subprocess
import tarfile
import tempfile
from pathlib import Path

ROWS = COLS = 28


def load_digits(tarball):
    rows = []
    with tarfile.open(tarball) as tar:
        for label in range(10):
            member = tar.extractfile(f"package/src/digits/{label}.json")
            flat = json.load(member)["data"]
            if len(flat) % (ROWS * COLS):
                raise SystemExit(f"digit {label}: {len(flat)} values is not a multiple of 784")
            for start in range(0, len(flat), ROWS * COLS):
                pixels = bytes(min(255, max(0, round(v * 255))) for v in flat[start : start + ROWS * COLS])
                rows.append((pixels, label))
    return rows


def write_idx(path, magic_rank, dims, payload):
    header = struct.pack(">BBBB", 0, 0, 0x08, magic_rank) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + payload)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tarball", type=Path, help="existing mnist-1.1.0.tgz (default: npm pack)")
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "mnist-10k")
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        tarball = args.tarball
        if tarball is None:
            subprocess.run(["npm", "pack", "mnist@1.1.0", "--silent"], cwd=tmp, check=True, stdout=subprocess.DEVNULL)
            tarball = Path(tmp) / "mnist-1.1.0.tgz"
        rows = load_digits(tarball)

    random.Random(args.seed).shuffle(rows)
    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out / "train-images-idx3-ubyte.gz", 3, [len(rows), ROWS, COLS], b"".join(p for p, _ in rows))
    write_idx(args.out / "train-labels-idx1-ubyte.gz", 1, [len(rows)], bytes(l for _, l in rows))
    print(f"wrote {len(rows)} samples to {args.out}")


if __name__ == "__main__":
    main()
