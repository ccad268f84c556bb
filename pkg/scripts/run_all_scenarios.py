#!/usr/bin/env python3
"""Run every preset scenario and tabulate the outcomes.

Usage: python scripts/run_all_scenarios.py [outdir]
"""
import sys
import time
from pathlib import Path

from qbrownian.cli import SCENARIOS, main


def run_all(outdir: Path) -> int:
    rows = []
    worst = 0
    for name in sorted(SCENARIOS):
        t0 = time.perf_counter()
        code = main(["scenario", name, "--out", str(outdir / name)])
        rows.append((name, code, time.perf_counter() - t0))
        worst = max(worst, code)
    print()
    print(f"{'scenario':28s} {'exit':>4s} {'seconds':>8s}")
    for name, code, secs in rows:
        print(f"{name:28s} {code:4d} {secs:8.1f}")
    return worst


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("qbe_out")
    sys.exit(run_all(out))
