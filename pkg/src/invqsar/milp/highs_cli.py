"""Standalone LP-file solver: reads a CPLEX-LP file, solves the MILP with
HiGHS (via scipy) and writes a CBC-style solution file.

Usage: python3 -m invqsar.milp.highs_cli MODEL.lp OUT.sol
"""

from __future__ import annotations

import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import CONTINUOUS, EQ, LE, MAX, parse_lp


def solve_lp_file(lp_text: str) -> str:
    model = parse_lp(lp_text)
    names = [v.name for v in model.variables]
    index = {n: i for i, n in enumerate(names)}
    n = len(names)

    c = np.zeros(n)
    sign = -1.0 if model.objective_sense == MAX else 1.0
    for name, coef in model.objective:
        c[index[name]] = sign * coef

    lb = np.array([v.lb for v in model.variables])
    ub = np.array([v.ub for v in model.variables])
    integrality = np.array(
        [0 if v.kind == CONTINUOUS else 1 for v in model.variables]
    )

    rows = model.constraints
    a = np.zeros((len(rows), n))
    lo = np.zeros(len(rows))
    hi = np.zeros(len(rows))
    for r, con in enumerate(rows):
        for name, coef in con.coeffs:
            a[r, index[name]] = coef
        if con.sense == LE:
            lo[r], hi[r] = -np.inf, con.rhs
        elif con.sense == EQ:
            lo[r], hi[r] = con.rhs, con.rhs
        else:
            lo[r], hi[r] = con.rhs, np.inf

    constraints = [LinearConstraint(a, lo, hi)] if len(rows) else []

    def attempt(**extra):
        return milp(
            c=c,
            constraints=constraints,
            integrality=integrality,
            bounds=Bounds(lb, ub),
            options={"mip_rel_gap": 0.0, **extra},
        )

    res = attempt()
    if res.status == 2:
        # badly scaled models can trip presolve into a false infeasibility;
        # only trust the claim when the conservative pass agrees
        res = attempt(presolve=False)
    if res.status == 0:
        objective = sign * float(res.fun)
        out = [f"Optimal - objective value {objective!r}"]
        for i, name in enumerate(names):
            out.append(f"{i} {name} {float(res.x[i])!r} 0")
        return "\n".join(out) + "\n"
    if res.status == 2:
        return "Infeasible - objective value 0\n"
    if res.status == 1:
        return "Stopped - iteration or time limit\n"
    return f"Stopped - solver status {res.status}\n"


def main(argv: list[str] | None = None) -> int:
    args = argv if argv is not None else sys.argv[1:]
    if len(args) != 2:
        print("usage: highs_cli MODEL.lp OUT.sol", file=sys.stderr)
        return 2
    lp_path, sol_path = args
    with open(lp_path) as fh:
        text = fh.read()
    result = solve_lp_file(text)
    with open(sol_path, "w") as fh:
        fh.write(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
