"""Interior/exterior decomposition of a chemical graph and rooted fringe trees.

The heavy-atom graph is peeled: leaves get height 0, then the new leaves
height 1, and so on; vertices on cycles (never peeled) get infinite height.
With branch parameter rho, the interior is every heavy vertex of height at
least rho; each interior vertex roots one fringe tree consisting of its
attached exterior descendants and all their hydrogens.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .elements import ElementSpec
from .graph import ChemicalGraph, Edge, InvalidGraphError, suppress_hydrogens

INF_HEIGHT = 10**9


def peel_heights(g: ChemicalGraph) -> dict[int, int]:
    """Peeling height of every heavy vertex (INF_HEIGHT on cycles)."""
    view = suppress_hydrogens(g)
    deg = {v: view.degree(v) for v in view.vertex_ids}
    height = {v: INF_HEIGHT for v in view.vertex_ids}
    alive = set(view.vertex_ids)
    rnd = 0
    while alive:
        peel = [v for v in alive if deg[v] <= 1]
        if not peel:
            break
        for v in peel:
            height[v] = rnd
            alive.discard(v)
        for v in peel:
            for w, _ in view.adjacency[v]:
                if w in alive:
                    deg[w] -= 1
        rnd += 1
    return height


@dataclass(frozen=True)
class RootedFringeTree:
    """A fringe tree: interior root plus exterior descendants and hydrogens.

    Edges are directed parent -> child.  Scalars used by the feature vector
    and the model builder are exposed as cached properties.
    """

    root: int
    nodes: tuple[tuple[int, ElementSpec, int], ...]  # (id, element, charge)
    edges: tuple[tuple[int, int, int], ...]  # (parent, child, mult)

    @cached_property
    def node_map(self) -> dict[int, tuple[ElementSpec, int]]:
        return {nid: (elem, chg) for nid, elem, chg in self.nodes}

    @cached_property
    def children(self) -> dict[int, tuple[tuple[int, int], ...]]:
        ch: dict[int, list[tuple[int, int]]] = {nid: [] for nid, _, _ in self.nodes}
        for p, c, m in self.edges:
            ch[p].append((c, m))
        return {k: tuple(v) for k, v in ch.items()}

    @cached_property
    def canonical_code(self) -> bytes:
        return _canonical_code(self, self.root)

    @cached_property
    def height(self) -> int:
        """Height of the hydrogen-suppressed tree."""

        def go(nid: int) -> int:
            hs = [
                1 + go(c)
                for c, _ in self.children[nid]
                if not self.node_map[c][0].is_hydrogen
            ]
            return max(hs, default=0)

        return go(self.root)

    @cached_property
    def root_element(self) -> ElementSpec:
        return self.node_map[self.root][0]

    @cached_property
    def root_charge(self) -> int:
        return self.node_map[self.root][1]

    @cached_property
    def root_heavy_children(self) -> int:
        return sum(
            1 for c, _ in self.children[self.root]
            if not self.node_map[c][0].is_hydrogen
        )

    @cached_property
    def root_hydrogen_children(self) -> int:
        return sum(
            1 for c, _ in self.children[self.root]
            if self.node_map[c][0].is_hydrogen
        )

    @cached_property
    def beta_root(self) -> int:
        return sum(m for _, m in self.children[self.root])

    @cached_property
    def n_nonroot_heavy(self) -> int:
        return sum(
            1 for nid, elem, _ in self.nodes
            if nid != self.root and not elem.is_hydrogen
        )

    @cached_property
    def n_hydrogens(self) -> int:
        return sum(1 for _, elem, _ in self.nodes if elem.is_hydrogen)

    @cached_property
    def nonroot_element_counts(self) -> dict[str, int]:
        """Element token -> frequency among non-root nodes (hydrogen included)."""
        counts: dict[str, int] = {}
        for nid, elem, _ in self.nodes:
            if nid == self.root:
                continue
            counts[elem.token] = counts.get(elem.token, 0) + 1
        return counts

    @cached_property
    def heavy_degree(self) -> dict[int, int]:
        """Heavy-neighbour count of each heavy node within the tree."""
        deg = {}
        parent: dict[int, int] = {}
        for p, c, _ in self.edges:
            parent[c] = p
        for nid, elem, _ in self.nodes:
            if elem.is_hydrogen:
                continue
            d = sum(
                1 for c, _ in self.children[nid]
                if not self.node_map[c][0].is_hydrogen
            )
            if nid != self.root and not self.node_map[parent[nid]][0].is_hydrogen:
                d += 1
            deg[nid] = d
        return deg

    @cached_property
    def nonroot_heavy_degree_counts(self) -> dict[int, int]:
        """Suppressed degree d -> count over non-root heavy nodes."""
        counts: dict[int, int] = {}
        for nid, d in self.heavy_degree.items():
            if nid == self.root:
                continue
            counts[d] = counts.get(d, 0) + 1
        return counts

    @cached_property
    def leaf_edge_configs(self) -> dict[tuple[str, str, int], int]:
        """Adjacency configuration (leaf element, parent element, mult) ->
        count over leaf edges of the suppressed tree (leaf end non-root)."""
        parent_of: dict[int, tuple[int, int]] = {}
        for p, c, m in self.edges:
            parent_of[c] = (p, m)
        counts: dict[tuple[str, str, int], int] = {}
        for nid, d in self.heavy_degree.items():
            if nid == self.root or d != 1:
                continue
            p, m = parent_of[nid]
            key = (self.node_map[nid][0].token, self.node_map[p][0].token, m)
            counts[key] = counts.get(key, 0) + 1
        return counts

    def size(self) -> int:
        return len(self.nodes)


def _canonical_code(t: RootedFringeTree, nid: int) -> bytes:
    elem, chg = t.node_map[nid]
    entries = []
    for c, m in t.children[nid]:
        celem, cchg = t.node_map[c]
        entries.append(
            (celem.sort_key(), cchg, m, _canonical_code(t, c))
        )
    entries.sort()
    inner = b";".join(b"%d:" % m + code for _, _, m, code in entries)
    return b"(%s,%d[" % (elem.token.encode(), chg) + inner + b"])"


def canonical_fringe_code(t: RootedFringeTree) -> bytes:
    """Deterministic code equal for two trees iff they are isomorphic by a
    root-preserving map respecting elements, charges and multiplicities."""
    return t.canonical_code


def tree_to_json(t: RootedFringeTree) -> dict:
    """Serialize with the graph interchange schema plus a root marker."""
    return {
        "root": t.root,
        "vertices": [
            {"id": nid, "element": elem.symbol, "valence": elem.valence, "charge": chg}
            for nid, elem, chg in t.nodes
        ],
        "edges": [{"u": p, "v": c, "order": m} for p, c, m in t.edges],
    }


def tree_from_json(doc: dict) -> RootedFringeTree:
    from .graph import graph_from_json

    g = graph_from_json({"vertices": doc["vertices"], "edges": doc["edges"]})
    root = int(doc["root"])
    # keep the given node order and edge orientation when they already form
    # an out-tree from the root, so serialization round-trips exactly
    children = {v.id: 0 for v in g.vertices}
    oriented = True
    for rec in doc["edges"]:
        child = int(rec["v"])
        children[child] = children.get(child, 0) + 1
    if children.get(root, 0) != 0 or any(
        n != 1 for vid, n in children.items() if vid != root
    ):
        oriented = False
    if oriented:
        nodes = tuple((v.id, v.element, v.charge) for v in g.vertices)
        edges = tuple(
            (int(r["u"]), int(r["v"]), int(r["order"])) for r in doc["edges"]
        )
        return RootedFringeTree(root, nodes, edges)
    return fringe_tree_from_graph(g, root)


def fringe_tree_from_graph(g: ChemicalGraph, root: int) -> RootedFringeTree:
    """Orient a tree-shaped chemical graph away from the given root."""
    if len(g.edges) != len(g.vertices) - 1 or not g.is_connected():
        raise InvalidGraphError("fringe tree must be a connected tree")
    nodes = []
    edges = []
    seen = {root}
    order = [root]
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for w, m in g.adjacency[u]:
            if w not in seen:
                seen.add(w)
                order.append(w)
                edges.append((u, w, m))
    for nid in order:
        v = g.vertex_map[nid]
        nodes.append((nid, v.element, v.charge))
    return RootedFringeTree(root, tuple(nodes), tuple(edges))


@dataclass(frozen=True)
class TwoLayeredDecomposition:
    rho: int
    graph: ChemicalGraph
    interior_vertices: frozenset[int]
    interior_edges: tuple[Edge, ...]
    fringe_trees: dict[int, RootedFringeTree]

    def classify(self, vid: int) -> str:
        """'interior', 'exterior' or 'hydrogen' for a vertex id."""
        if self.graph.vertex_map[vid].element.is_hydrogen:
            return "hydrogen"
        return "interior" if vid in self.interior_vertices else "exterior"

    def interior_degree(self, vid: int) -> int:
        return sum(1 for e in self.interior_edges if vid in (e.u, e.v))

    def n_interior(self) -> int:
        return len(self.interior_vertices)


def decompose(g: ChemicalGraph, rho: int) -> TwoLayeredDecomposition:
    """Split g into interior and fringe trees with branch parameter rho."""
    if rho < 1:
        raise ValueError("rho must be at least 1")
    view = suppress_hydrogens(g)
    height = peel_heights(g)
    interior = frozenset(v for v in view.vertex_ids if height[v] >= rho)
    interior_edges = tuple(
        e for e in view.edges if e.u in interior and e.v in interior
    )

    hydrogens_of: dict[int, list[tuple[int, int]]] = {v: [] for v in view.vertex_ids}
    for e in g.edges:
        hu = g.vertex_map[e.u].element.is_hydrogen
        hv = g.vertex_map[e.v].element.is_hydrogen
        if hu and not hv:
            hydrogens_of[e.v].append((e.u, e.mult))
        elif hv and not hu:
            hydrogens_of[e.u].append((e.v, e.mult))

    fringe_trees: dict[int, RootedFringeTree] = {}
    claimed: set[int] = set()
    for root in sorted(interior):
        edges: list[tuple[int, int, int]] = []
        order = [root]
        seen = {root}
        i = 0
        while i < len(order):
            u = order[i]
            i += 1
            for w, m in view.adjacency[u]:
                if w in interior or w in seen:
                    continue
                if w in claimed:
                    raise InvalidGraphError(
                        f"exterior vertex {w} reachable from two interior roots"
                    )
                seen.add(w)
                claimed.add(w)
                order.append(w)
                edges.append((u, w, m))
        tree_nodes: list[tuple[int, ElementSpec, int]] = []
        for nid in order:
            v = g.vertex_map[nid]
            tree_nodes.append((nid, v.element, v.charge))
        for nid in order:
            for h, m in hydrogens_of[nid]:
                vtx = g.vertex_map[h]
                tree_nodes.append((h, vtx.element, vtx.charge))
                edges.append((nid, h, m))
        tree = RootedFringeTree(root, tuple(tree_nodes), tuple(edges))
        if tree.height > rho:
            raise InvalidGraphError(
                f"fringe tree at {root} has height {tree.height} > rho={rho}"
            )
        fringe_trees[root] = tree

    return TwoLayeredDecomposition(
        rho=rho,
        graph=g,
        interior_vertices=interior,
        interior_edges=interior_edges,
        fringe_trees=fringe_trees,
    )
