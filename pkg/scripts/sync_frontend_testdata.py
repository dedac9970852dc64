#!/usr/bin/env python3
"""Copy the generated fig3a bundle into frontend/testdata for the plot tests."""

import shutil
import sys
from pathlib import Path

SRC = Path("out/figures/fig3a")
DST = Path("frontend/testdata/fig3a")


def main() -> int:
    if not (SRC / "figure.json").exists():
        print(f"{SRC} missing; run scripts/make_figures.py fig3a first", file=sys.stderr)
        return 1
    DST.mkdir(parents=True, exist_ok=True)
    for item in SRC.iterdir():
        if item.suffix in (".json", ".csv"):
            shutil.copy2(item, DST / item.name)
    print(f"synced {SRC} -> {DST}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
