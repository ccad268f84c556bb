#!/usr/bin/env python3
"""Sweep the coupling of the microbath comparison via the CLI fan-out.

Usage: python scripts/coupling_sweep.py [outdir]
"""
import sys
from pathlib import Path

from qbrownian.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "qbe_out/coupling_sweep"
    code = main(["scenario", "microbath-compare", "--out", out,
                 "--sweep", "params.C=0.05,0.1,0.2"])
    for sub in sorted(Path(out).glob("*/summary.txt")):
        print(f"--- {sub.parent.name} ---")
        print(sub.read_text())
    sys.exit(code)
