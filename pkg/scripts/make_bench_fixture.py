#!/usr/bin/env python3
"""Build the self-contained offline benchmark fixture.

Writes synthetic bundles, a 10-item dataset (plus a mindcube-format
subset), and the recorded chat fixtures needed to replay the full agent
pipeline without network access.
"""

import argparse
from pathlib import Path

from spatialkit.fixtures import build_bench_fixture


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="bench_fixture",
                        help="output directory (default: ./bench_fixture)")
    args = parser.parse_args()
    paths = build_bench_fixture(Path(args.out))
    for key, value in paths.items():
        print(f"{key}: {value}")


if __name__ == "__main__":
    main()
