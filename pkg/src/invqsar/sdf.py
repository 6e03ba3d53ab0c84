"""Minimal V2000 molfile / SDF reader.

Implicit hydrogens are materialized as explicit vertices so that every
parsed graph satisfies the valence condition.  Records that cannot be
turned into a valid ChemicalGraph are reported per record instead of being
dropped silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .elements import (
    DEFAULT_VALENCE,
    UnknownElementError,
    allowed_valences,
    make_element,
)
from .graph import ChemicalGraph, Edge, Vertex

# old-style charge column of the atom block
_CHG_COLUMN = {0: 0, 1: 3, 2: 2, 3: 1, 5: -1, 6: -2, 7: -3}


@dataclass(frozen=True)
class RecordError:
    record: int
    name: str
    message: str


@dataclass
class SdfParseResult:
    graphs: list[ChemicalGraph] = field(default_factory=list)
    errors: list[RecordError] = field(default_factory=list)
    names: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.errors


def _split_records(text: str) -> list[list[str]]:
    records: list[list[str]] = []
    current: list[str] = []
    for line in text.splitlines():
        if line.strip() == "$$$$":
            records.append(current)
            current = []
        else:
            current.append(line)
    if any(l.strip() for l in current):
        records.append(current)
    return records


def _parse_record(lines: list[str], index: int) -> tuple[ChemicalGraph, str]:
    if len(lines) < 4:
        raise ValueError("record too short for a molfile header")
    name = lines[0].strip() or f"record{index}"
    counts = lines[3]
    if len(counts) < 6:
        raise ValueError("malformed counts line")
    try:
        n_atoms = int(counts[0:3])
        n_bonds = int(counts[3:6])
    except ValueError as exc:
        raise ValueError(f"malformed counts line: {counts!r}") from exc
    if "V2000" not in counts:
        raise ValueError("only V2000 molfiles are supported")
    atom_lines = lines[4 : 4 + n_atoms]
    bond_lines = lines[4 + n_atoms : 4 + n_atoms + n_bonds]
    if len(atom_lines) != n_atoms or len(bond_lines) != n_bonds:
        raise ValueError("counts line disagrees with block sizes")

    symbols: list[str] = []
    charges: list[int] = []
    for ln in atom_lines:
        parts = ln.split()
        if len(parts) < 4:
            raise ValueError(f"malformed atom line: {ln!r}")
        symbols.append(parts[3])
        chg_col = int(parts[5]) if len(parts) > 5 else 0
        charges.append(_CHG_COLUMN.get(chg_col, 0))

    bonds: list[tuple[int, int, int]] = []
    for ln in bond_lines:
        # fixed-width, but whitespace split is robust for well-formed files
        try:
            u = int(ln[0:3])
            v = int(ln[3:6])
            m = int(ln[6:9])
        except ValueError as exc:
            raise ValueError(f"malformed bond line: {ln!r}") from exc
        bonds.append((u, v, m))

    # property block: M CHG overrides the atom-block charge column
    for ln in lines[4 + n_atoms + n_bonds :]:
        if ln.startswith("M  CHG"):
            parts = ln.split()
            n = int(parts[2])
            for j in range(n):
                aid = int(parts[3 + 2 * j])
                charges[aid - 1] = int(parts[4 + 2 * j])
        elif ln.startswith("M  END"):
            break

    beta = [0] * n_atoms
    for u, v, m in bonds:
        if not (1 <= u <= n_atoms and 1 <= v <= n_atoms):
            raise ValueError(f"bond ({u},{v}) references a missing atom")
        beta[u - 1] += m
        beta[v - 1] += m

    vertices: list[Vertex] = []
    edges = [Edge(u, v, m) for u, v, m in bonds]
    next_id = n_atoms + 1
    for i, sym in enumerate(symbols):
        try:
            vals = allowed_valences(sym)
        except UnknownElementError as exc:
            raise ValueError(str(exc)) from exc
        need = beta[i] - charges[i]
        # escalate from the default valence upward; sub-default variants
        # (carbene-like states) are never produced by ingest
        fitting = [v for v in vals if v >= need and v >= DEFAULT_VALENCE[sym]]
        if not fitting:
            raise ValueError(
                f"atom {i + 1} ({sym}) with bond sum {beta[i]} and charge "
                f"{charges[i]} exceeds every supported valence {vals}"
            )
        elem = make_element(sym, fitting[0])
        vertices.append(Vertex(i + 1, elem, charges[i]))
        if sym != "H":
            for _ in range(elem.valence + charges[i] - beta[i]):
                vertices.append(Vertex(next_id, make_element("H")))
                edges.append(Edge(i + 1, next_id, 1))
                next_id += 1

    graph = ChemicalGraph(tuple(vertices), tuple(edges))
    problems = graph.validate()
    if problems:
        raise ValueError("; ".join(problems))
    return graph, name


def parse_sdf(text: str) -> SdfParseResult:
    """Parse SDF/molfile text into chemical graphs, one per record."""
    result = SdfParseResult()
    for idx, rec in enumerate(_split_records(text)):
        try:
            graph, name = _parse_record(rec, idx)
        except (ValueError, UnknownElementError) as exc:
            head = rec[0].strip() if rec else ""
            result.errors.append(RecordError(idx, head or f"record{idx}", str(exc)))
            continue
        result.graphs.append(graph)
        result.names.append(name)
    return result
