"""Solver backends and solution handling.

Two backends: an external solver invoked through a command template with
{input} and {output} placeholders (LP file in, solution file out, wall-clock
timeout), and the built-in exact mini-solver.  Every returned solution is
re-checked against the model (row residuals, bounds, integrality) before it
is handed to callers; a failed check is a hard error, not a warning.
"""

from __future__ import annotations

import shlex
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .minisolve import solve_exact
from .model import MILPModel, check_solution, emit_lp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"


class SolverFailure(RuntimeError):
    """External solver crashed, timed out abnormally or wrote garbage."""


class SolutionCheckError(RuntimeError):
    """A claimed-feasible solution violates the model: emitter/parser bug."""


@dataclass
class Solution:
    status: str
    values: dict[str, Fraction] = field(default_factory=dict)
    objective: float | None = None
    log: str = ""

    def value(self, name: str) -> Fraction:
        return self.values[name]

    def int_value(self, name: str) -> int:
        v = self.values[name]
        nearest = round(v)
        if abs(v - nearest) > Fraction(1, 10**6):
            raise SolutionCheckError(f"{name} = {float(v)} is not integral")
        return int(nearest)

    def float_value(self, name: str) -> float:
        return float(self.values[name])


@dataclass(frozen=True)
class ExternalBackend:
    """Command template with {input}/{output} placeholders, e.g.
    'cbc {input} solve solu {output}' or the bundled helper."""

    command: str
    timeout: float = 600.0

    def run(self, lp_text: str) -> tuple[str, str]:
        """Returns (solution file text, solver log)."""
        with tempfile.TemporaryDirectory(prefix="invqsar_milp_") as tmp:
            lp_path = Path(tmp) / "model.lp"
            sol_path = Path(tmp) / "model.sol"
            lp_path.write_text(lp_text)
            cmd = self.command.format(input=str(lp_path), output=str(sol_path))
            try:
                proc = subprocess.run(
                    shlex.split(cmd),
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired as exc:
                raise SolverFailure(
                    f"external solver exceeded {self.timeout}s"
                ) from exc
            log = (proc.stdout or "") + (proc.stderr or "")
            if proc.returncode != 0:
                raise SolverFailure(
                    f"external solver exited with {proc.returncode}: {log[-2000:]}"
                )
            if not sol_path.exists():
                raise SolverFailure("external solver wrote no solution file")
            return sol_path.read_text(), log


def default_external_backend(timeout: float = 600.0) -> ExternalBackend:
    """Bundled LP-file solver running in a subprocess."""
    return ExternalBackend(
        command=f'"{sys.executable}" -m invqsar.milp.highs_cli {{input}} {{output}}',
        timeout=timeout,
    )


def _to_fraction(text: str) -> Fraction:
    return Fraction(text)


def parse_solution_text(text: str) -> Solution:
    """Auto-detect and parse a solution file.

    Supported formats: the CBC style ('Optimal - objective value V' header
    followed by 'index name value reduced-cost' rows) and bare 'name value'
    pairs with optional '#' comments (objective taken from a
    '# Objective value = V' comment when present)."""
    lines = [ln.rstrip("\n") for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SolverFailure("empty solution file")
    head = lines[0].strip()
    lowered = head.lower()
    if lowered.startswith(("optimal", "infeasible", "unbounded", "stopped")):
        status = OPTIMAL if lowered.startswith("optimal") else INFEASIBLE
        if lowered.startswith("stopped"):
            status = TIMEOUT
        objective = None
        if "objective value" in lowered:
            try:
                objective = float(head.split()[-1])
            except ValueError:
                objective = None
        values: dict[str, Fraction] = {}
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) >= 3 and parts[0].lstrip("*").isdigit():
                values[parts[1]] = _to_fraction(parts[2])
            elif len(parts) == 2:
                values[parts[0]] = _to_fraction(parts[1])
        return Solution(status, values, objective)
    # name/value pairs
    status = OPTIMAL
    objective = None
    values = {}
    for ln in lines:
        stripped = ln.strip()
        if stripped.startswith("#"):
            low = stripped.lower()
            if "infeasible" in low:
                status = INFEASIBLE
            if "objective value" in low and "=" in stripped:
                try:
                    objective = float(stripped.split("=")[-1])
                except ValueError:
                    pass
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise SolverFailure(f"cannot parse solution line {ln!r}")
        values[parts[0]] = _to_fraction(parts[1])
    return Solution(status, values, objective)


def _complete_and_check(model: MILPModel, sol: Solution, tol: float) -> Solution:
    for v in model.variables:
        sol.values.setdefault(v.name, Fraction(0))
    problems = check_solution(model, sol.values, tol=tol)
    if problems:
        raise SolutionCheckError(
            "solution fails verification: " + "; ".join(problems[:10])
        )
    return sol


def solve(
    model: MILPModel,
    backend: ExternalBackend | str = "mini",
    time_limit: float | None = None,
    tol: float = 1e-6,
    polish=None,
) -> Solution:
    """Solve the model and return a residual-checked Solution.

    backend is either the string 'mini' (built-in exact solver) or an
    ExternalBackend.  Infeasibility is a status, not an error.  An optional
    polish callable (model, solution) may clean the raw values in place
    before verification (for example exact recomputation of dependent
    continuous variables)."""
    if isinstance(backend, str):
        if backend != "mini":
            raise ValueError(f"unknown backend {backend!r}")
        outcome = solve_exact(model, time_limit=time_limit)
        if outcome.status == "infeasible":
            return Solution(INFEASIBLE)
        if outcome.status == "timeout":
            raise SolverFailure("mini-solver hit its time or node limit")
        sol = Solution(
            OPTIMAL,
            dict(outcome.values),
            None if outcome.objective is None else float(outcome.objective),
            log=f"mini-solver nodes={outcome.nodes}",
        )
    else:
        if time_limit is not None:
            backend = ExternalBackend(backend.command, time_limit)
        sol_text, log = backend.run(emit_lp(model))
        sol = parse_solution_text(sol_text)
        sol.log = log
        if sol.status == INFEASIBLE:
            return Solution(INFEASIBLE, log=log)
        if sol.status == TIMEOUT:
            raise SolverFailure("external solver stopped before completion")
    for v in model.variables:
        sol.values.setdefault(v.name, Fraction(0))
    if polish is not None:
        polish(model, sol)
    return _complete_and_check(model, sol, tol)
