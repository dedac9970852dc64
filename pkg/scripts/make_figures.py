#!/usr/bin/env python3
"""Build every figure data bundle under out/figures/ (cached ensembles)."""

import argparse
import sys
import time
from pathlib import Path

from ffcool.figures import FIGURES, build_figure


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("figures", nargs="*", default=[], help="subset of figure ids")
    parser.add_argument("--out", default="out/figures")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()
    ids = args.figures or sorted(FIGURES)
    for fig_id in ids:
        t0 = time.time()
        path = build_figure(fig_id, Path(args.out) / fig_id, workers=args.threads)
        print(f"{fig_id}: {path} ({time.time() - t0:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
