"""Chemical graph data model with explicit hydrogens.

A ChemicalGraph stores every atom (including hydrogens) as a vertex and
every bond as an edge with multiplicity 1..3.  Validity means: connected,
simple, the valence condition holds at every vertex, hydrogens are pendant
and every heavy atom has at most 4 heavy neighbours.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .elements import ElementSpec, make_element, parse_element


class InvalidGraphError(ValueError):
    """Raised when a graph violates a structural invariant."""


@dataclass(frozen=True)
class Vertex:
    id: int
    element: ElementSpec
    charge: int = 0

    def __post_init__(self) -> None:
        if not -3 <= self.charge <= 3:
            raise InvalidGraphError(f"charge {self.charge} outside [-3,3]")


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    mult: int

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise InvalidGraphError(f"self-loop at vertex {self.u}")
        if not 1 <= self.mult <= 3:
            raise InvalidGraphError(f"bond multiplicity {self.mult} outside [1,3]")

    def key(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


@dataclass(frozen=True)
class ChemicalGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    @cached_property
    def vertex_map(self) -> dict[int, Vertex]:
        vm = {v.id: v for v in self.vertices}
        if len(vm) != len(self.vertices):
            raise InvalidGraphError("duplicate vertex ids")
        return vm

    @cached_property
    def adjacency(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """vertex id -> tuple of (neighbour id, bond multiplicity)."""
        adj: dict[int, list[tuple[int, int]]] = {v.id: [] for v in self.vertices}
        seen: set[tuple[int, int]] = set()
        for e in self.edges:
            if e.u not in adj or e.v not in adj:
                raise InvalidGraphError(f"edge ({e.u},{e.v}) references unknown vertex")
            if e.key() in seen:
                raise InvalidGraphError(f"parallel edge ({e.u},{e.v})")
            seen.add(e.key())
            adj[e.u].append((e.v, e.mult))
            adj[e.v].append((e.u, e.mult))
        return {k: tuple(v) for k, v in adj.items()}

    def element(self, vid: int) -> ElementSpec:
        return self.vertex_map[vid].element

    def charge(self, vid: int) -> int:
        return self.vertex_map[vid].charge

    def degree(self, vid: int) -> int:
        return len(self.adjacency[vid])

    def beta_sum(self, vid: int) -> int:
        return sum(m for _, m in self.adjacency[vid])

    def n_atoms(self) -> int:
        return len(self.vertices)

    def n_heavy(self) -> int:
        return sum(1 for v in self.vertices if not v.element.is_hydrogen)

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        adj = self.adjacency
        start = self.vertices[0].id
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w, _ in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def validate(self) -> list[str]:
        """Return all invariant violations (empty list when valid)."""
        problems: list[str] = []
        try:
            adj = self.adjacency
        except InvalidGraphError as exc:
            return [str(exc)]
        if not self.vertices:
            problems.append("graph has no vertices")
            return problems
        if not self.is_connected():
            problems.append("graph is not connected")
        for v in self.vertices:
            incident = adj[v.id]
            beta = sum(m for _, m in incident)
            want = v.element.valence + v.charge
            if beta != want:
                problems.append(
                    f"valence condition fails at {v.id} ({v.element.token}): "
                    f"bond sum {beta} != valence {v.element.valence} + charge {v.charge}"
                )
            if v.element.is_hydrogen:
                if len(incident) != 1 or incident[0][1] != 1:
                    problems.append(f"hydrogen {v.id} must have one single bond")
            else:
                heavy = sum(
                    1
                    for w, _ in incident
                    if not self.vertex_map[w].element.is_hydrogen
                )
                if heavy > 4:
                    problems.append(
                        f"vertex {v.id} has {heavy} heavy neighbours (max 4)"
                    )
        return problems

    def check(self) -> "ChemicalGraph":
        problems = self.validate()
        if problems:
            raise InvalidGraphError("; ".join(problems))
        return self


@dataclass(frozen=True)
class SuppressedView:
    """Hydrogen-suppressed view: heavy vertices, heavy-heavy edges,
    and the retained hydrogen count per heavy vertex."""

    graph: ChemicalGraph
    vertex_ids: tuple[int, ...]
    edges: tuple[Edge, ...]
    hydrogens: Mapping[int, int]

    @cached_property
    def adjacency(self) -> dict[int, tuple[tuple[int, int], ...]]:
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in self.vertex_ids}
        for e in self.edges:
            adj[e.u].append((e.v, e.mult))
            adj[e.v].append((e.u, e.mult))
        return {k: tuple(v) for k, v in adj.items()}

    def degree(self, vid: int) -> int:
        return len(self.adjacency[vid])

    def hydrogen_count(self, vid: int) -> int:
        return self.hydrogens[vid]

    def n_vertices(self) -> int:
        return len(self.vertex_ids)

    def n_edges(self) -> int:
        return len(self.edges)


def suppress_hydrogens(g: ChemicalGraph) -> SuppressedView:
    """Project g onto its heavy atoms; per-vertex hydrogen counts retained."""
    heavy = tuple(v.id for v in g.vertices if not v.element.is_hydrogen)
    heavy_set = set(heavy)
    edges = tuple(e for e in g.edges if e.u in heavy_set and e.v in heavy_set)
    hyd = {vid: 0 for vid in heavy}
    for e in g.edges:
        if e.u in heavy_set and e.v not in heavy_set:
            hyd[e.u] += 1
        elif e.v in heavy_set and e.u not in heavy_set:
            hyd[e.v] += 1
    return SuppressedView(g, heavy, edges, hyd)


def rank(g: ChemicalGraph) -> int:
    """Cycle rank |E|-|V|+1 of the hydrogen-suppressed graph."""
    if not g.is_connected():
        raise InvalidGraphError("rank requires a connected graph")
    view = suppress_hydrogens(g)
    if view.n_vertices() == 0:
        return 0
    return view.n_edges() - view.n_vertices() + 1


def graph_to_json(g: ChemicalGraph) -> dict:
    """Serialize to the interchange schema
    {vertices: [{id, element, valence, charge}], edges: [{u, v, order}]}."""
    return {
        "vertices": [
            {
                "id": v.id,
                "element": v.element.symbol,
                "valence": v.element.valence,
                "charge": v.charge,
            }
            for v in g.vertices
        ],
        "edges": [{"u": e.u, "v": e.v, "order": e.mult} for e in g.edges],
    }


def graph_from_json(doc: dict) -> ChemicalGraph:
    """Inverse of graph_to_json; accepts element tokens with or without
    an explicit valence field."""
    vertices = []
    for rec in doc["vertices"]:
        if "valence" in rec and rec["valence"] is not None:
            elem = make_element(rec["element"], rec["valence"])
        else:
            elem = parse_element(rec["element"])
        vertices.append(Vertex(int(rec["id"]), elem, int(rec.get("charge", 0))))
    edges = [Edge(int(r["u"]), int(r["v"]), int(r["order"])) for r in doc["edges"]]
    return ChemicalGraph(tuple(vertices), tuple(edges))


def graph_to_json_text(g: ChemicalGraph) -> str:
    return json.dumps(graph_to_json(g), indent=2, sort_keys=True)


def graph_from_json_text(text: str) -> ChemicalGraph:
    return graph_from_json(json.loads(text))


def build_graph(
    atoms: Iterable[tuple[int, str, int] | tuple[int, str]],
    bonds: Iterable[tuple[int, int, int]],
    add_hydrogens: bool = False,
) -> ChemicalGraph:
    """Convenience constructor from (id, element token[, charge]) atoms and
    (u, v, mult) bonds.  With add_hydrogens=True, pendant hydrogens are
    appended so the valence condition holds at every heavy atom."""
    vertices = []
    for spec in atoms:
        vid, token = spec[0], spec[1]
        charge = spec[2] if len(spec) > 2 else 0
        vertices.append(Vertex(vid, parse_element(token), charge))
    edges = [Edge(u, v, m) for u, v, m in bonds]
    if add_hydrogens:
        beta = {v.id: 0 for v in vertices}
        for e in edges:
            beta[e.u] += e.mult
            beta[e.v] += e.mult
        next_id = max((v.id for v in vertices), default=0) + 1
        for v in list(vertices):
            if v.element.is_hydrogen:
                continue
            missing = v.element.valence + v.charge - beta[v.id]
            if missing < 0:
                raise InvalidGraphError(
                    f"vertex {v.id} over-bonded: {beta[v.id]} > "
                    f"{v.element.valence + v.charge}"
                )
            for _ in range(missing):
                vertices.append(Vertex(next_id, make_element("H")))
                edges.append(Edge(v.id, next_id, 1))
                next_id += 1
    return ChemicalGraph(tuple(vertices), tuple(edges))
