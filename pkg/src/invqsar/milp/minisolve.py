"""Built-in exact MILP solver: rational branch and bound over LP relaxations.

All arithmetic is exact (integer-scaled tableau rows and rational values),
so feasibility, infeasibility and optimality conclusions carry no rounding
error.  Intended for models up to a few hundred integer variables; larger
models should go through an external solver backend.

Per node: bound propagation and elimination presolve, then a two-phase
bounded-variable simplex on the reduced LP, then branching on a fractional
integer variable.  With a constant objective the search stops at the first
integral point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, gcd, inf

from .model import CONTINUOUS, LE, GE, MAX, MILPModel

ZERO = Fraction(0)
ONE = Fraction(1)
BIG = Fraction(10**30)


class SolverTimeout(Exception):
    pass


class MiniSolverError(Exception):
    pass


@dataclass
class PVar:
    name: str
    lb: Fraction
    ub: Fraction
    is_int: bool


@dataclass
class PRow:
    coeffs: dict[int, Fraction]
    lo: Fraction | None  # None = -inf
    hi: Fraction | None  # None = +inf


@dataclass
class Problem:
    variables: list[PVar]
    rows: list[PRow]
    objective: dict[int, Fraction] = field(default_factory=dict)
    obj_sign: int = 1  # objective stored as minimization

    @staticmethod
    def from_model(model: MILPModel) -> "Problem":
        index = {v.name: i for i, v in enumerate(model.variables)}
        pvars = []
        for v in model.variables:
            if v.lb == -inf or v.ub == inf:
                raise MiniSolverError(
                    f"mini-solver requires finite bounds (variable {v.name})"
                )
            pvars.append(
                PVar(v.name, Fraction(v.lb), Fraction(v.ub), v.kind != CONTINUOUS)
            )
        rows = []
        for con in model.constraints:
            coeffs = {index[n]: Fraction(c) for n, c in con.coeffs}
            rhs = Fraction(con.rhs)
            if con.sense == LE:
                rows.append(PRow(coeffs, None, rhs))
            elif con.sense == GE:
                rows.append(PRow(coeffs, rhs, None))
            else:
                rows.append(PRow(coeffs, rhs, rhs))
        problem = Problem(pvars, rows)
        sign = 1 if model.objective_sense != MAX else -1
        problem.obj_sign = sign
        problem.objective = {index[n]: Fraction(c) * sign for n, c in model.objective}
        return problem


@dataclass
class SolveOutcome:
    status: str  # optimal | infeasible | timeout
    values: dict[str, Fraction] = field(default_factory=dict)
    objective: Fraction | None = None
    nodes: int = 0


# -- presolve ----------------------------------------------------------------


class _Infeasible(Exception):
    pass


def _activity_bounds(row: PRow, lbs, ubs):
    amin = ZERO
    amax = ZERO
    for j, c in row.coeffs.items():
        if c > 0:
            amin += c * lbs[j]
            amax += c * ubs[j]
        else:
            amin += c * ubs[j]
            amax += c * lbs[j]
    return amin, amax


def _propagate(variables: list[PVar], rows: list[PRow], max_passes: int = 10) -> None:
    for v in variables:
        if v.lb > v.ub:
            raise _Infeasible
    for _ in range(max_passes):
        changed = False
        lbs = [v.lb for v in variables]
        ubs = [v.ub for v in variables]
        for row in rows:
            amin, amax = _activity_bounds(row, lbs, ubs)
            if row.hi is not None and amin > row.hi:
                raise _Infeasible
            if row.lo is not None and amax < row.lo:
                raise _Infeasible
            for j, c in row.coeffs.items():
                v = variables[j]
                cmin = c * (v.lb if c > 0 else v.ub)
                cmax = c * (v.ub if c > 0 else v.lb)
                if row.hi is not None:
                    limit = (row.hi - (amin - cmin)) / c
                    if c > 0:
                        if v.is_int:
                            limit = Fraction(floor(limit))
                        if limit < v.ub:
                            v.ub = limit
                            changed = True
                    else:
                        if v.is_int:
                            limit = Fraction(ceil(limit))
                        if limit > v.lb:
                            v.lb = limit
                            changed = True
                if row.lo is not None:
                    limit = (row.lo - (amax - cmax)) / c
                    if c > 0:
                        if v.is_int:
                            limit = Fraction(ceil(limit))
                        if limit > v.lb:
                            v.lb = limit
                            changed = True
                    else:
                        if v.is_int:
                            limit = Fraction(floor(limit))
                        if limit < v.ub:
                            v.ub = limit
                            changed = True
                if v.lb > v.ub:
                    raise _Infeasible
                lbs[j], ubs[j] = v.lb, v.ub
        if not changed:
            return


@dataclass
class _Reduced:
    variables: list[PVar]
    rows: list[PRow]
    objective: dict[int, Fraction]
    obj_const: Fraction
    fixed: dict[int, Fraction]
    singles: list[tuple]
    keep: list[int]


def _presolve(problem: Problem, bounds) -> _Reduced:
    variables = []
    for i, v in enumerate(problem.variables):
        lb, ub = v.lb, v.ub
        if i in bounds:
            blb, bub = bounds[i]
            lb, ub = max(lb, blb), min(ub, bub)
        variables.append(PVar(v.name, lb, ub, v.is_int))
    rows = [PRow(dict(r.coeffs), r.lo, r.hi) for r in problem.rows]

    _propagate(variables, rows)

    fixed: dict[int, Fraction] = {}
    singles: list[tuple] = []
    gone: set[int] = set()
    for _ in range(60):
        changed = False
        for i, v in enumerate(variables):
            if i in gone or v.lb != v.ub:
                continue
            fixed[i] = v.lb
            gone.add(i)
            changed = True
            if v.lb != 0:
                for row in rows:
                    c = row.coeffs.pop(i, None)
                    if c is not None:
                        if row.lo is not None:
                            row.lo -= c * v.lb
                        if row.hi is not None:
                            row.hi -= c * v.lb
            else:
                for row in rows:
                    row.coeffs.pop(i, None)

        kept_rows: list[PRow] = []
        occurrences: dict[int, int] = {}
        lbs = [v.lb for v in variables]
        ubs = [v.ub for v in variables]
        for row in rows:
            if not row.coeffs:
                if (row.lo is not None and row.lo > 0) or (
                    row.hi is not None and row.hi < 0
                ):
                    raise _Infeasible
                changed = True
                continue
            if len(row.coeffs) == 1:
                ((j, c),) = row.coeffs.items()
                v = variables[j]
                lo = None if row.lo is None else row.lo / c
                hi = None if row.hi is None else row.hi / c
                if c < 0:
                    lo, hi = hi, lo
                if lo is not None:
                    if v.is_int:
                        lo = Fraction(ceil(lo))
                    v.lb = max(v.lb, lo)
                if hi is not None:
                    if v.is_int:
                        hi = Fraction(floor(hi))
                    v.ub = min(v.ub, hi)
                if v.lb > v.ub:
                    raise _Infeasible
                changed = True
                continue
            amin, amax = _activity_bounds(row, lbs, ubs)
            lo_slack = row.lo is None or amin >= row.lo
            hi_slack = row.hi is None or amax <= row.hi
            if lo_slack and hi_slack:
                changed = True
                continue
            kept_rows.append(row)
            for j in row.coeffs:
                occurrences[j] = occurrences.get(j, 0) + 1
        rows = kept_rows

        for row in rows:
            victim = None
            for j, c in row.coeffs.items():
                if occurrences.get(j, 0) != 1 or j in problem.objective:
                    continue
                v = variables[j]
                if v.is_int:
                    if abs(c) != 1:
                        continue
                    ok = all(
                        variables[jj].is_int and row.coeffs[jj].denominator == 1
                        for jj in row.coeffs
                        if jj != j
                    )
                    ok = ok and (row.lo is None or row.lo.denominator == 1)
                    ok = ok and (row.hi is None or row.hi.denominator == 1)
                    if not ok:
                        continue
                victim = (j, c)
                break
            if victim is None:
                continue
            j, c = victim
            v = variables[j]
            rest = {jj: cc for jj, cc in row.coeffs.items() if jj != j}
            new_lo = None if row.lo is None else row.lo - max(c * v.lb, c * v.ub)
            new_hi = None if row.hi is None else row.hi - min(c * v.lb, c * v.ub)
            singles.append((j, c, row.lo, row.hi, dict(rest), v.lb, v.ub, v.is_int))
            gone.add(j)
            row.coeffs = rest
            row.lo, row.hi = new_lo, new_hi
            changed = True

        if changed:
            _propagate(variables, rows)
        else:
            break

    keep = [i for i in range(len(variables)) if i not in gone]
    remap = {orig: new for new, orig in enumerate(keep)}
    red_vars = [variables[i] for i in keep]
    red_rows = []
    for row in rows:
        if not row.coeffs:
            if (row.lo is not None and row.lo > 0) or (
                row.hi is not None and row.hi < 0
            ):
                raise _Infeasible
            continue
        red_rows.append(
            PRow({remap[j]: c for j, c in row.coeffs.items()}, row.lo, row.hi)
        )
    red_obj = {
        remap[j]: c for j, c in problem.objective.items() if j in remap and c != 0
    }
    obj_const = sum(
        (c * fixed[j] for j, c in problem.objective.items() if j in fixed),
        start=ZERO,
    )
    return _Reduced(red_vars, red_rows, red_obj, obj_const, fixed, singles, keep)


def _undo_presolve(problem: Problem, red: _Reduced, red_values) -> dict[int, Fraction]:
    values: dict[int, Fraction] = dict(red.fixed)
    for new, orig in enumerate(red.keep):
        values[orig] = red_values[new]
    for j, c, lo, hi, rest, lb, ub, is_int in reversed(red.singles):
        rest_val = sum((cc * values[jj] for jj, cc in rest.items()), start=ZERO)
        lo_x = None if lo is None else (lo - rest_val) / c
        hi_x = None if hi is None else (hi - rest_val) / c
        if c < 0:
            lo_x, hi_x = hi_x, lo_x
        cand_lo = lb if lo_x is None else max(lb, lo_x)
        cand_hi = ub if hi_x is None else min(ub, hi_x)
        if cand_lo > cand_hi:
            raise MiniSolverError("internal error: singleton undo infeasible")
        val = cand_lo
        if is_int and val.denominator != 1:
            # prefer an integral value when the interval allows one;
            # a fractional pick is branched on later like any other
            rounded = Fraction(ceil(val))
            if rounded <= cand_hi:
                val = rounded
        values[j] = val
    return values


# -- exact bounded-variable simplex ------------------------------------------

AT_LB = 0
AT_UB = 1


class _Simplex:
    """Two-phase primal simplex with variable bounds on an exact tableau.

    Tableau rows are integer vectors; a common row scale cancels out of
    every ratio, so rows are kept only up to scale (gcd-reduced).  The
    active cost row is maintained incrementally across pivots.
    """

    def __init__(self, red: _Reduced, deadline: float | None):
        self.deadline = deadline
        n = len(red.variables)
        m = len(red.rows)
        self.n_struct = n
        self.m = m
        self.lb: list[Fraction] = [v.lb for v in red.variables]
        self.ub: list[Fraction] = [v.ub for v in red.variables]
        # slack column per row carries the row range
        for row in red.rows:
            self.lb.append(row.lo if row.lo is not None else -BIG)
            self.ub.append(row.hi if row.hi is not None else BIG)
        # sparse integer rows (scale-free): column -> coefficient
        self.rows_num: list[dict[int, int]] = []
        ncols = n + m
        for r, row in enumerate(red.rows):
            denom = 1
            for c in row.coeffs.values():
                denom = denom * c.denominator // gcd(denom, c.denominator)
            vec = {j: int(c * denom) for j, c in row.coeffs.items() if c}
            vec[n + r] = -denom
            self.rows_num.append(vec)
        self.ncols = ncols
        self.basis: list[int] = list(range(n, n + m))
        self.in_basis: list[bool] = [False] * ncols
        for j in self.basis:
            self.in_basis[j] = True
        self.status = [AT_LB] * ncols
        self.values: list[Fraction] = [ZERO] * ncols
        for j in range(n):
            self.values[j] = self.lb[j]
        self._set_basics_from_nonbasics()
        # objective row kept as integers over one common positive denominator
        self.z_num: list[int] = [0] * ncols
        self.z_den: int = 1
        self.iterations = 0
        self.degenerate_streak = 0

    def _set_basics_from_nonbasics(self) -> None:
        for r in range(self.m):
            vec = self.rows_num[r]
            b = self.basis[r]
            total = ZERO
            for j, a in vec.items():
                if j != b and not self.in_basis[j]:
                    total += a * self.values[j]
            self.values[b] = Fraction(-total, vec[b])

    def _entry(self, r: int, j: int) -> Fraction:
        vec = self.rows_num[r]
        return Fraction(-vec.get(j, 0), vec[self.basis[r]])

    def add_artificials(self) -> list[int]:
        """Clamp basic slacks into range via artificial columns; returns
        the artificial column indices."""
        arts: list[int] = []
        for r in range(self.m):
            b = self.basis[r]
            val = self.values[b]
            if self.lb[b] <= val <= self.ub[b]:
                continue
            target = self.lb[b] if val < self.lb[b] else self.ub[b]
            # append artificial column a with row coefficient chosen so that
            # moving the slack to its bound leaves the artificial at |gap| >= 0
            gap = target - val  # slack must change by gap
            col = self.ncols
            # row holds sum_j vec[j] x_j = 0; with the slack moved to its
            # bound the artificial must absorb -vec[b]*gap, so its
            # coefficient is -vec[b]*sign(gap) and its value |gap|
            vec_b = self.rows_num[r][b]
            coef = -vec_b if gap > 0 else vec_b
            self.rows_num[r][col] = coef
            self.lb.append(ZERO)
            self.ub.append(BIG)
            self.status.append(AT_LB)
            self.in_basis.append(False)
            self.values.append(abs(gap))
            # swap: artificial becomes basic, slack goes nonbasic at target
            self.basis[r] = col
            self.in_basis[col] = True
            self.in_basis[b] = False
            self.status[b] = AT_LB if target == self.lb[b] else AT_UB
            self.values[b] = target
            self.ncols += 1
            arts.append(col)
        return arts

    def compute_zrow(self, cost: dict[int, Fraction]) -> None:
        """Reduced costs of every column for the given cost vector."""
        z = [cost.get(j, ZERO) for j in range(self.ncols)]
        for r in range(self.m):
            cb = cost.get(self.basis[r], ZERO)
            if cb:
                vec = self.rows_num[r]
                denom = vec[self.basis[r]]
                for j, a in vec.items():
                    if j != self.basis[r]:
                        z[j] += cb * Fraction(-a, denom)
        for r in range(self.m):
            z[self.basis[r]] = ZERO
        den = 1
        for f in z:
            if f:
                den = den * f.denominator // gcd(den, f.denominator)
        self.z_den = den
        self.z_num = [int(f * den) for f in z]

    def _normalize_zrow(self) -> None:
        g = self.z_den
        for a in self.z_num:
            if a:
                g = gcd(g, a)
                if g == 1:
                    return
        if g > 1:
            self.z_den //= g
            self.z_num = [a // g for a in self.z_num]

    def _pivot(self, pr: int, pc: int) -> None:
        rows_num = self.rows_num
        prow = rows_num[pr]
        piv = prow[pc]
        if piv == 0:
            raise MiniSolverError("zero pivot")
        zc = self.z_num[pc]
        if zc != 0:
            new_z = [a * piv for a in self.z_num]
            for j, b in prow.items():
                new_z[j] -= zc * b
            if piv < 0:
                den = -self.z_den * piv
                new_z = [-a for a in new_z]
            else:
                den = self.z_den * piv
            self.z_num = new_z
            self.z_den = den
            if den.bit_length() > 256:
                self._normalize_zrow()
        for r in range(self.m):
            if r == pr:
                continue
            vec = rows_num[r]
            factor = vec.pop(pc, 0)
            if factor == 0:
                continue
            new = {j: a * piv for j, a in vec.items()}
            for j, b in prow.items():
                if j == pc:
                    continue
                nv = new.get(j, 0) - factor * b
                if nv:
                    new[j] = nv
                else:
                    new.pop(j, None)
            g = 0
            for a in new.values():
                g = gcd(g, a)
                if g == 1:
                    break
            if g > 1:
                new = {j: a // g for j, a in new.items()}
            rows_num[r] = new
        leaving = self.basis[pr]
        self.basis[pr] = pc
        self.in_basis[leaving] = False
        self.in_basis[pc] = True
        self.z_num[pc] = 0

    def _ratio_test(self, pc: int, direction: int):
        best_t = self.ub[pc] - self.lb[pc]
        best_row = None
        for r in range(self.m):
            vec = self.rows_num[r]
            num = vec.get(pc)
            if not num:
                continue
            alpha = Fraction(-num, vec[self.basis[r]])
            delta = alpha * direction
            b = self.basis[r]
            if delta < 0:
                limit = (self.values[b] - self.lb[b]) / (-delta)
            else:
                limit = (self.ub[b] - self.values[b]) / delta
            if limit < best_t or (
                limit == best_t
                and best_row is not None
                and b < self.basis[best_row]
            ):
                best_t = limit
                best_row = r
        if best_t < 0:
            best_t = ZERO
        return best_t, best_row

    def optimize(self, max_iters: int = 50_000) -> None:
        """Minimize the current zrow cost from the current feasible point."""
        while True:
            self.iterations += 1
            if self.iterations > max_iters:
                raise MiniSolverError("simplex iteration limit exceeded")
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise SolverTimeout
            bland = self.degenerate_streak > 30
            chosen = None
            best_score = 0
            z = self.z_num
            for j in range(self.ncols):
                if self.in_basis[j] or self.lb[j] == self.ub[j]:
                    continue
                rc = z[j]
                if rc < 0 and self.status[j] == AT_LB:
                    score, direction = -rc, 1
                elif rc > 0 and self.status[j] == AT_UB:
                    score, direction = rc, -1
                else:
                    continue
                if bland:
                    chosen = (j, direction)
                    break
                if score > best_score:
                    best_score = score
                    chosen = (j, direction)
            if chosen is None:
                return
            pc, direction = chosen
            t, block = self._ratio_test(pc, direction)
            if t >= BIG:
                raise MiniSolverError("unbounded LP relaxation")
            self.degenerate_streak = 0 if t > 0 else self.degenerate_streak + 1
            if t > 0:
                step = direction * t
                for r in range(self.m):
                    vec = self.rows_num[r]
                    num = vec.get(pc)
                    if num:
                        self.values[self.basis[r]] += Fraction(
                            -num, vec[self.basis[r]]
                        ) * step
            self.values[pc] = self.values[pc] + direction * t
            if block is None:
                self.status[pc] = AT_UB if direction > 0 else AT_LB
                continue
            leaving = self.basis[block]
            alpha_b = self._entry(block, pc)
            hit_ub = (alpha_b * direction) > 0
            self.status[leaving] = AT_UB if hit_ub else AT_LB
            self.values[leaving] = self.ub[leaving] if hit_ub else self.lb[leaving]
            self._pivot(block, pc)


def _solve_lp(red: _Reduced, deadline):
    """Exact LP solve; returns (status, values, objective)."""
    if not red.rows:
        values = []
        obj = red.obj_const
        for i, v in enumerate(red.variables):
            c = red.objective.get(i, ZERO)
            val = v.lb if c >= 0 else v.ub
            values.append(val)
            obj += c * val
        return "optimal", values, obj
    spx = _Simplex(red, deadline)
    arts = spx.add_artificials()
    if arts:
        spx.compute_zrow({a: ONE for a in arts})
        spx.optimize()
        infeas = sum((spx.values[a] for a in arts), start=ZERO)
        if infeas > 0:
            return "infeasible", [], ZERO
        for a in arts:
            spx.lb[a] = ZERO
            spx.ub[a] = ZERO
            if not spx.in_basis[a]:
                spx.values[a] = ZERO
    if red.objective:
        spx.compute_zrow(dict(red.objective))
        spx.optimize()
    values = [spx.values[j] for j in range(len(red.variables))]
    obj = red.obj_const + sum(
        (c * values[j] for j, c in red.objective.items()), start=ZERO
    )
    return "optimal", values, obj


# -- branch and bound ---------------------------------------------------------


def solve_exact(
    model: MILPModel,
    time_limit: float | None = None,
    node_limit: int = 200_000,
) -> SolveOutcome:
    """Exact rational branch and bound over the model.

    With a constant objective the search returns the first integral
    solution found; otherwise the full tree is explored with bound pruning
    and the optimum is returned."""
    problem = Problem.from_model(model)
    deadline = None if time_limit is None else time.monotonic() + time_limit
    feasibility_only = not problem.objective

    int_indices = [i for i, v in enumerate(problem.variables) if v.is_int]
    best_values = None
    best_obj: Fraction | None = None
    nodes = 0
    stack: list[dict[int, tuple[Fraction, Fraction]]] = [{}]

    while stack:
        if deadline is not None and time.monotonic() > deadline:
            return SolveOutcome("timeout", nodes=nodes)
        if nodes >= node_limit:
            return SolveOutcome("timeout", nodes=nodes)
        bounds = stack.pop()
        nodes += 1
        try:
            red = _presolve(problem, bounds)
        except _Infeasible:
            continue
        try:
            status, red_values, obj = _solve_lp(red, deadline)
        except SolverTimeout:
            return SolveOutcome("timeout", nodes=nodes)
        if status == "infeasible":
            continue
        if best_obj is not None and obj >= best_obj:
            continue
        values = _undo_presolve(problem, red, red_values)
        frac_var = None
        for i in int_indices:
            if values[i].denominator != 1:
                frac_var = i
                break
        if frac_var is None:
            cand_obj = sum(
                (c * values[j] for j, c in problem.objective.items()), start=ZERO
            )
            if best_obj is None or cand_obj < best_obj:
                best_obj = cand_obj
                best_values = values
            if feasibility_only:
                break
            continue
        val = values[frac_var]
        v = problem.variables[frac_var]
        lo, hi = bounds.get(frac_var, (v.lb, v.ub))
        down = dict(bounds)
        down[frac_var] = (lo, Fraction(floor(val)))
        up = dict(bounds)
        up[frac_var] = (Fraction(ceil(val)), hi)
        stack.append(up)
        stack.append(down)

    if best_values is None:
        return SolveOutcome("infeasible", nodes=nodes)
    named = {problem.variables[i].name: v for i, v in best_values.items()}
    objective = None if best_obj is None else best_obj * problem.obj_sign
    return SolveOutcome("optimal", named, objective, nodes)
