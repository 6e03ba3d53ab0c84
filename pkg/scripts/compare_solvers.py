#!/usr/bin/env python3
"""Cross-check the built-in exact solver against the external backend on a
batch of random small MILPs and report timing.

Usage: python3 scripts/compare_solvers.py [--trials 20] [--seed 0]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from invqsar.milp.minisolve import solve_exact
from invqsar.milp.solve import default_external_backend, solve


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    from test_minisolve import random_model

    rng = np.random.default_rng(args.seed)
    backend = default_external_backend(120)
    agree = 0
    for trial in range(args.trials):
        model = random_model(rng)
        t0 = time.monotonic()
        mini = solve_exact(model, time_limit=60)
        t_mini = time.monotonic() - t0
        t0 = time.monotonic()
        ext = solve(model, backend)
        t_ext = time.monotonic() - t0
        same = mini.status == ext.status and (
            mini.status != "optimal"
            or abs(float(mini.objective) - ext.objective) < 1e-6
        )
        agree += same
        verdict = "ok" if same else "MISMATCH"
        obj = "-" if mini.objective is None else f"{float(mini.objective):g}"
        print(
            f"trial {trial:2d}: {mini.status:>10} obj={obj:>8} "
            f"mini {t_mini * 1e3:6.1f}ms ext {t_ext * 1e3:6.1f}ms  {verdict}"
        )
    print(f"\nagreement: {agree}/{args.trials}")
    return 0 if agree == args.trials else 1


if __name__ == "__main__":
    sys.exit(main())
