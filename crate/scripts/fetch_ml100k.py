#!/usr/bin/env python3
"""Write MovieLens100K to data/ml100k.csv as userId,movieId,rating,timestamp.

Tries the GroupLens archive first, then the copy bundled in the recbole 1.2.1
wheel (fetched with pip). Both list the 100000 ratings in the same order, so
the output is identical either way.
"""

import argparse
import glob
import io
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

GROUPLENS = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
WHEEL_MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS, timeout=60) as r:
        archive = zipfile.ZipFile(io.BytesIO(r.read()))
    text = archive.read("ml-100k/u.data").decode()
    return [line.split("\t") for line in text.splitlines() if line.strip()]


def from_wheel():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-d", tmp, "recbole==1.2.1"],
            check=True,
            stdout=subprocess.DEVNULL,
        )
        wheel = zipfile.ZipFile(glob.glob(f"{tmp}/*.whl")[0])
        text = wheel.read(WHEEL_MEMBER).decode()
    rows = [line.split("\t") for line in text.splitlines()[1:] if line.strip()]
    return [[u, i, r, str(int(float(t)))] for u, i, r, t in rows]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "ml100k.csv"))
    args = parser.parse_args()
    rows = None
    for source in (from_grouplens, from_wheel):
        try:
            rows = source()
            break
        except Exception as e:  # noqa: BLE001
            print(f"{source.__name__} failed: {e}", file=sys.stderr)
    if rows is None:
        sys.exit("could not obtain MovieLens100K")
    if len(rows) != 100_000:
        sys.exit(f"expected 100000 ratings, got {len(rows)}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as f:
        f.write("userId,movieId,rating,timestamp\n")
        for u, i, r, t in rows:
            f.write(f"{u},{i},{int(float(r))},{t}\n")
    print(f"wrote {len(rows)} ratings to {out}")


if __name__ == "__main__":
    main()
