"""Mixed-integer linear model container and CPLEX-LP text round trip.

Emission is deterministic: two builds from the same inputs produce
byte-identical text, and emit -> parse -> emit is the identity.  Every
coefficient is written with shortest round-trip float formatting, so a
parsed model is numerically exact.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

MIN = "min"
MAX = "max"

LE = "<="
GE = ">="
EQ = "="


class ModelError(ValueError):
    pass


def fmt_num(v: float) -> str:
    if v != v or math.isinf(v):
        raise ModelError(f"cannot emit non-finite coefficient {v}")
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


@dataclass(frozen=True)
class Var:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str
    rhs: float


@dataclass
class MILPModel:
    name: str = "model"
    metadata: dict[str, str] = field(default_factory=dict)
    _vars: dict[str, Var] = field(default_factory=dict)
    _constrs: list[Constraint] = field(default_factory=list)
    _constr_names: set[str] = field(default_factory=set)
    objective_sense: str = MIN
    objective: tuple[tuple[str, float], ...] = ()

    # -- construction -----------------------------------------------------

    def add_var(self, name: str, kind: str = CONTINUOUS,
                lb: float = 0.0, ub: float = math.inf) -> str:
        if not _NAME_RE.match(name):
            raise ModelError(f"bad variable name {name!r}")
        if name in self._vars:
            raise ModelError(f"duplicate variable {name!r}")
        if kind not in (BINARY, INTEGER, CONTINUOUS):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb = max(0.0, float(lb))
            ub = min(1.0, float(ub))
        lb, ub = float(lb), float(ub)
        if lb > ub:
            raise ModelError(f"variable {name}: lower bound {lb} above upper {ub}")
        if kind in (BINARY, INTEGER) and (math.isinf(lb) or math.isinf(ub)):
            raise ModelError(f"integer variable {name} must have finite bounds")
        self._vars[name] = Var(name, kind, lb, ub)
        return name

    def add_constr(self, name: str, coeffs, sense: str, rhs: float) -> str:
        if not _NAME_RE.match(name):
            raise ModelError(f"bad constraint name {name!r}")
        if name in self._constr_names:
            raise ModelError(f"duplicate constraint {name!r}")
        if sense not in (LE, GE, EQ):
            raise ModelError(f"bad sense {sense!r}")
        items = list(coeffs.items()) if isinstance(coeffs, Mapping) else list(coeffs)
        seen: set[str] = set()
        cleaned: list[tuple[str, float]] = []
        for var, c in items:
            if var not in self._vars:
                raise ModelError(f"constraint {name} references unknown {var!r}")
            if var in seen:
                raise ModelError(f"constraint {name} repeats variable {var!r}")
            seen.add(var)
            c = float(c)
            if c != 0.0:
                cleaned.append((var, c))
        if not cleaned:
            raise ModelError(f"constraint {name} has no nonzero terms")
        self._constrs.append(Constraint(name, tuple(cleaned), sense, float(rhs)))
        self._constr_names.add(name)
        return name

    def add_range(self, name: str, coeffs, lo: float, hi: float) -> None:
        """lo <= expr <= hi as one or two rows."""
        if lo == hi:
            self.add_constr(name, coeffs, EQ, lo)
            return
        if lo > hi:
            raise ModelError(f"range {name}: {lo} > {hi}")
        if not math.isinf(lo):
            self.add_constr(f"{name}_lo", coeffs, GE, lo)
        if not math.isinf(hi):
            self.add_constr(f"{name}_hi", coeffs, LE, hi)

    def set_objective(self, sense: str, coeffs) -> None:
        if sense not in (MIN, MAX):
            raise ModelError(f"bad objective sense {sense!r}")
        items = list(coeffs.items()) if isinstance(coeffs, Mapping) else list(coeffs)
        for var, _ in items:
            if var not in self._vars:
                raise ModelError(f"objective references unknown {var!r}")
        self.objective_sense = sense
        self.objective = tuple((v, float(c)) for v, c in items if float(c) != 0.0)

    # -- access ------------------------------------------------------------

    @property
    def variables(self) -> tuple[Var, ...]:
        return tuple(self._vars.values())

    @property
    def constraints(self) -> tuple[Constraint, ...]:
        return tuple(self._constrs)

    def var(self, name: str) -> Var:
        return self._vars[name]

    def has_var(self, name: str) -> bool:
        return name in self._vars

    def n_integer(self) -> int:
        return sum(1 for v in self._vars.values() if v.kind != CONTINUOUS)

    def fingerprint(self) -> str:
        return hashlib.sha256(emit_lp(self).encode()).hexdigest()

    def fix_var(self, name: str, value: float) -> None:
        old = self._vars[name]
        self._vars[name] = Var(old.name, old.kind, float(value), float(value))


def _emit_terms(coeffs: Iterable[tuple[str, float]]) -> str:
    parts: list[str] = []
    for i, (var, c) in enumerate(coeffs):
        mag = f"{fmt_num(abs(c))} {var}"
        if i == 0:
            parts.append(f"- {mag}" if c < 0 else mag)
        else:
            parts.append(f"- {mag}" if c < 0 else f"+ {mag}")
    return " ".join(parts)


def emit_lp(model: MILPModel) -> str:
    """Serialize to CPLEX LP text with deterministic ordering."""
    out: list[str] = []
    out.append(f"\\ model {model.name}")
    for key in sorted(model.metadata):
        out.append(f"\\ meta {key} {model.metadata[key]}")
    out.append("Minimize" if model.objective_sense == MIN else "Maximize")
    out.append(f" obj: {_emit_terms(model.objective)}".rstrip())
    out.append("Subject To")
    for con in model.constraints:
        out.append(f" {con.name}: {_emit_terms(con.coeffs)} {con.sense} {fmt_num(con.rhs)}")
    out.append("Bounds")
    # every variable is listed so declaration order survives a round trip
    for v in model.variables:
        if math.isinf(v.lb) and math.isinf(v.ub):
            out.append(f" {v.name} free")
        elif math.isinf(v.ub):
            out.append(f" {v.name} >= {fmt_num(v.lb)}")
        elif math.isinf(v.lb):
            out.append(f" {v.name} <= {fmt_num(v.ub)}")
        else:
            out.append(f" {fmt_num(v.lb)} <= {v.name} <= {fmt_num(v.ub)}")
    generals = [v.name for v in model.variables if v.kind == INTEGER]
    binaries = [v.name for v in model.variables if v.kind == BINARY]
    if generals:
        out.append("Generals")
        out.extend(f" {name}" for name in generals)
    if binaries:
        out.append("Binaries")
        out.extend(f" {name}" for name in binaries)
    out.append("End")
    return "\n".join(out) + "\n"


_TERM_RE = re.compile(
    r"\s*(?P<sign>[+-])?\s*(?P<coef>[0-9][0-9eE.+-]*|\.[0-9][0-9eE.+-]*)?"
    r"\s*(?P<var>[A-Za-z_][A-Za-z0-9_]*)"
)


def _parse_terms(text: str) -> list[tuple[str, float]]:
    terms: list[tuple[str, float]] = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if not m:
            raise ModelError(f"cannot parse expression near {text[pos:pos + 30]!r}")
        sign = -1.0 if m.group("sign") == "-" else 1.0
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        terms.append((m.group("var"), sign * coef))
        pos = m.end()
    return terms


def parse_lp(text: str) -> MILPModel:
    """Parse the LP subset produced by emit_lp (plus common variations)."""
    model = MILPModel()
    lines = text.splitlines()
    i = 0
    # leading comments
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith("\\")):
        stripped = lines[i].strip()
        if stripped.startswith("\\ model "):
            model.name = stripped[len("\\ model "):]
        elif stripped.startswith("\\ meta "):
            _, _, rest = stripped.partition("\\ meta ")
            key, _, value = rest.partition(" ")
            model.metadata[key] = value
        i += 1

    def section(line: str) -> str | None:
        word = line.strip().lower()
        if word in ("minimize", "maximize", "min", "max"):
            return "objective"
        if word in ("subject to", "s.t.", "st"):
            return "constraints"
        if word == "bounds":
            return "bounds"
        if word in ("generals", "general", "integers"):
            return "generals"
        if word in ("binaries", "binary"):
            return "binaries"
        if word == "end":
            return "end"
        return None

    sense = MIN
    obj_text: list[str] = []
    constr_rows: list[str] = []
    bound_rows: list[str] = []
    general_names: list[str] = []
    binary_names: list[str] = []
    current = None
    for line in lines[i:]:
        stripped = line.strip()
        if not stripped or stripped.startswith("\\"):
            continue
        sec = section(stripped)
        if sec == "end":
            break
        if sec == "objective":
            sense = MAX if stripped.lower().startswith("max") else MIN
            current = "objective"
            continue
        if sec is not None:
            current = sec
            continue
        if current == "objective":
            obj_text.append(stripped)
        elif current == "constraints":
            if ":" in stripped and not stripped.split(":", 1)[0].strip().count(" "):
                constr_rows.append(stripped)
            else:
                constr_rows[-1] += " " + stripped
        elif current == "bounds":
            bound_rows.append(stripped)
        elif current == "generals":
            general_names.extend(stripped.split())
        elif current == "binaries":
            binary_names.extend(stripped.split())
        else:
            raise ModelError(f"unexpected line outside any section: {stripped!r}")

    # declare variables in first-appearance order to mirror emit ordering
    objective_terms: list[tuple[str, float]] = []
    obj_joined = " ".join(obj_text)
    if ":" in obj_joined:
        obj_joined = obj_joined.split(":", 1)[1]
    if obj_joined.strip():
        objective_terms = _parse_terms(obj_joined)

    parsed_constrs: list[tuple[str, list[tuple[str, float]], str, float]] = []
    for row in constr_rows:
        name, _, rest = row.partition(":")
        m = re.search(r"(<=|>=|=)", rest)
        if not m:
            raise ModelError(f"constraint without comparator: {row!r}")
        lhs = rest[: m.start()]
        rhs = float(rest[m.end():])
        parsed_constrs.append((name.strip(), _parse_terms(lhs), m.group(1), rhs))

    bounds: dict[str, tuple[float, float]] = {}
    free: set[str] = set()
    order: list[str] = []
    seen: set[str] = set()

    def note(varname: str) -> None:
        if varname not in seen:
            seen.add(varname)
            order.append(varname)

    for row in bound_rows:
        if row.endswith(" free"):
            varname = row[: -len(" free")].strip()
            note(varname)
            free.add(varname)
            continue
        m = re.match(
            r"^(?P<lo>[-+0-9eE.]+)\s*<=\s*(?P<var>\w+)\s*<=\s*(?P<hi>[-+0-9eE.]+)$", row
        )
        if m:
            note(m.group("var"))
            bounds[m.group("var")] = (float(m.group("lo")), float(m.group("hi")))
            continue
        m = re.match(r"^(?P<var>\w+)\s*(?P<op><=|>=)\s*(?P<val>[-+0-9eE.]+)$", row)
        if m:
            varname = m.group("var")
            note(varname)
            lo, hi = bounds.get(varname, (0.0, math.inf))
            if m.group("op") == "<=":
                bounds[varname] = (-math.inf, float(m.group("val")))
            else:
                bounds[varname] = (float(m.group("val")), math.inf)
            continue
        raise ModelError(f"cannot parse bound row {row!r}")

    for varname in general_names + binary_names:
        note(varname)
    for varname, _ in objective_terms:
        note(varname)
    for _, terms, _, _ in parsed_constrs:
        for varname, _ in terms:
            note(varname)

    general_set = set(general_names)
    binary_set = set(binary_names)
    for varname in order:
        if varname in binary_set:
            kind = BINARY
            lo, hi = bounds.get(varname, (0.0, 1.0))
        elif varname in general_set:
            kind = INTEGER
            lo, hi = bounds.get(varname, (0.0, math.inf))
        else:
            kind = CONTINUOUS
            if varname in free:
                lo, hi = -math.inf, math.inf
            else:
                lo, hi = bounds.get(varname, (0.0, math.inf))
        model.add_var(varname, kind, lo, hi)

    for name, terms, cmp_op, rhs in parsed_constrs:
        model.add_constr(name, terms, cmp_op, rhs)
    model.set_objective(sense, objective_terms)
    return model


# -- exact residual checking ----------------------------------------------


def exact(v: float) -> Fraction:
    return Fraction(v)


def constraint_residuals(
    model: MILPModel, values: Mapping[str, Fraction]
) -> dict[str, Fraction]:
    """Signed violation of each row (positive means violated)."""
    out: dict[str, Fraction] = {}
    for con in model.constraints:
        lhs = sum(exact(c) * values[v] for v, c in con.coeffs)
        rhs = exact(con.rhs)
        if con.sense == LE:
            out[con.name] = lhs - rhs
        elif con.sense == GE:
            out[con.name] = rhs - lhs
        else:
            out[con.name] = abs(lhs - rhs)
    return out


def check_solution(
    model: MILPModel,
    values: Mapping[str, Fraction],
    tol: float = 1e-6,
) -> list[str]:
    """All violations above tol: rows, bounds and integrality."""
    problems: list[str] = []
    ftol = Fraction(repr(tol)) if isinstance(tol, float) else Fraction(tol)
    for v in model.variables:
        if v.name not in values:
            problems.append(f"missing value for {v.name}")
            continue
        val = values[v.name]
        if not math.isinf(v.lb) and val < exact(v.lb) - ftol:
            problems.append(f"{v.name} = {float(val)} below lower bound {v.lb}")
        if not math.isinf(v.ub) and val > exact(v.ub) + ftol:
            problems.append(f"{v.name} = {float(val)} above upper bound {v.ub}")
        if v.kind in (BINARY, INTEGER):
            nearest = round(val)
            if abs(val - nearest) > ftol:
                problems.append(f"{v.name} = {float(val)} is not integral")
    if problems:
        return problems
    for name, resid in constraint_residuals(model, values).items():
        if resid > ftol:
            problems.append(f"constraint {name} violated by {float(resid)}")
    return problems
