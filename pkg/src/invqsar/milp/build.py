"""Full MILP construction for inverse design under a topological spec.

The model selects a subgraph of a layered scheme graph (seed vertices C,
path slots T, leaf-path slots F), assigns colors that carve paths out of
the slot sequences, attaches one fringe tree per used interior vertex,
assigns elements and bond multiplicities subject to the valence condition,
tallies every descriptor of the feature vector, and couples the normalized
feature variables to a linear predictor whose output must land in a target
interval.

Variable names are a fixed, documented scheme (eC_3, chiT_5, dfrC_1_2, ...)
so solutions can be decoded independently of the solver used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..descriptors import DescriptorSpace, space_hash
from ..elements import ElementSpec
from ..regression import LinearPredictor
from ..topospec import (
    FIXED,
    FLEXIBLE,
    OPTIONAL,
    PATH,
    SeedEdge,
    TopologicalSpecification,
)
from .model import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, MILPModel


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class SymbolInfo:
    """Chemical-symbol slot: element index (1-based in lambda_int) + degree."""

    element_pos: int
    degree: int
    token: str


class Build:
    """Incremental model builder shared by the constraint-family functions."""

    def __init__(self, spec: TopologicalSpecification, space: DescriptorSpace):
        self.spec = spec
        self.space = space
        self.model = MILPModel(name="inverse_design")
        self.m = self.model
        self.infeasible_marks = 0

        seed = spec.seed
        self.t_c = seed.t_c
        self.m_c = seed.m_c
        self.k_tilde = seed.k_tilde
        self.k_c = seed.k_c
        self.t_t = spec.t_tree
        self.t_f = spec.t_leaf
        self.leafable = seed.leafable  # tuple of seed positions
        self.t_c_tilde = len(self.leafable)
        self.c_f = self.t_c_tilde + self.t_t
        self.rho = spec.rho
        self.n_star = spec.n_star

        # edge groups by class (indices are 1-based positions in seed.edges)
        self.path_edges = seed.edges_of_class(PATH)
        self.flexible_edges = seed.edges_of_class(FLEXIBLE)
        self.optional_edges = seed.edges_of_class(OPTIONAL)
        self.fixed_edges = seed.edges_of_class(FIXED)
        self.colored_edges = seed.edges_of_class(PATH, FLEXIBLE)  # k in 1..kC
        self.direct_edges = seed.edges_of_class(FLEXIBLE, OPTIONAL, FIXED)

        # element tables
        self.lam_int = spec.lambda_int
        self.lam_ex = spec.lambda_ex
        self.lam_int_pos = {e: i + 1 for i, e in enumerate(self.lam_int)}
        self.lam_all = tuple(
            sorted(set(self.lam_int) | set(self.lam_ex))
        )
        for e in self.lam_int:
            if e not in space.lambda_int_index:
                raise BuildError(
                    f"interior element {e.token} is not in the descriptor space"
                )
        for e in self.lam_ex:
            if e not in space.lambda_ex_index:
                raise BuildError(
                    f"exterior element {e.token} is not in the descriptor space"
                )

        # fringe menu: entries in spec order; all must be indexed by the space
        self.psis = spec.fringe_entries
        self.psi_pos = {f.psi_id: p + 1 for p, f in enumerate(self.psis)}
        for f in self.psis:
            if f.tree.canonical_code not in space.fringe_index:
                raise BuildError(
                    f"fringe tree {f.psi_id} is not in the descriptor space"
                )
            if f.tree.root_element not in self.lam_int_pos:
                raise BuildError(
                    f"fringe tree {f.psi_id} root element "
                    f"{f.tree.root_element.token} outside the interior elements"
                )
            for token in f.tree.nonroot_element_counts:
                if all(e.token != token for e in self.lam_ex):
                    raise BuildError(
                        f"fringe tree {f.psi_id} uses exterior element {token} "
                        "outside lambda_ex"
                    )
        self.menu_c = {
            i: tuple(spec.fringe_set_for_vertex(i)) for i in range(1, self.t_c + 1)
        }
        self.menu_e = tuple(spec.fringe_edge_set)

        # chemical symbols over interior elements x degrees 1..4
        self.symbols: list[SymbolInfo] = []
        for pos, elem in enumerate(self.lam_int, start=1):
            for d in range(1, 5):
                self.symbols.append(SymbolInfo(pos, d, f"{elem.token}{d}"))
        self.sym_pos = {
            (s.element_pos, s.degree): i + 1 for i, s in enumerate(self.symbols)
        }

        # ordered edge-configuration list over the space catalog
        self.ordered_configs: list[tuple[int, int, int, int]] = []
        # entries: (symbol pos of mu, symbol pos of mu', mult, gamma index)
        for gi, gamma in enumerate(space.gamma_int):
            mu_pos = self._sym_pos_for(gamma.mu.element, gamma.mu.degree)
            mu2_pos = self._sym_pos_for(gamma.mu_prime.element, gamma.mu_prime.degree)
            if mu_pos is None or mu2_pos is None:
                continue  # configuration uses an element this spec cannot place
            self.ordered_configs.append((mu_pos, mu2_pos, gamma.mult, gi))
            if mu_pos != mu2_pos:
                self.ordered_configs.append((mu2_pos, mu_pos, gamma.mult, gi))

        self.mass_avg_ub = self._mass_bound()

    def _sym_pos_for(self, elem: ElementSpec, degree: int) -> int | None:
        pos = self.lam_int_pos.get(elem)
        if pos is None:
            return None
        return self.sym_pos[(pos, degree)]

    def _mass_bound(self) -> int:
        if self.spec.mass_avg_ub is not None:
            return int(math.ceil(self.spec.mass_avg_ub))
        return max(e.mass_star for e in self.lam_all)

    # -- small helpers ------------------------------------------------------

    def var(self, name: str, kind: str, lb, ub) -> str:
        return self.m.add_var(name, kind, lb, ub)

    def row(self, name: str, terms, sense: str, rhs) -> None:
        nonzero = [(v, c) for v, c in terms if c != 0]
        if not nonzero:
            ok = (
                (sense == LE and rhs >= 0)
                or (sense == GE and rhs <= 0)
                or (sense == EQ and rhs == 0)
            )
            if not ok:
                self.mark_infeasible(name)
            return
        self.m.add_constr(name, nonzero, sense, rhs)

    def rng(self, name: str, terms, lo, hi) -> None:
        if lo > hi:
            self.mark_infeasible(name)
            return
        nonzero = [(v, c) for v, c in terms if c != 0]
        if not nonzero:
            if lo > 0 or hi < 0:
                self.mark_infeasible(name)
            return
        if lo == hi:
            self.m.add_constr(name, nonzero, EQ, lo)
            return
        self.m.add_constr(f"{name}_lo", nonzero, GE, lo)
        self.m.add_constr(f"{name}_hi", nonzero, LE, hi)

    def mark_infeasible(self, why: str) -> None:
        """Record an unsatisfiable requirement as an explicit contradiction."""
        self.infeasible_marks += 1
        name = f"never_{self.infeasible_marks}"
        if not self.m.has_var("always_zero"):
            self.m.add_var("always_zero", BINARY, 0, 0)
        self.m.add_constr(name, {"always_zero": 1.0}, GE, 1.0)

    def ivar(self, name: str, lb, ub) -> str:
        """Integer variable; crossing bounds become an explicit contradiction."""
        if lb > ub:
            self.mark_infeasible(f"{name}_bounds")
            return self.m.add_var(name, INTEGER, 0, 0)
        return self.m.add_var(name, INTEGER, lb, ub)

    # edge incidence helpers (1-based positions)
    def colored_at(self, pos: int, role: str) -> list[SeedEdge]:
        return [
            e
            for e in self.colored_edges
            if (role == "tail" and e.tail == pos) or (role == "head" and e.head == pos)
        ]

    def direct_at(self, pos: int) -> list[SeedEdge]:
        return [e for e in self.direct_edges if pos in (e.tail, e.head)]

    def leaf_color_of_vertex(self, pos: int) -> int | None:
        """Leaf-path color of a permitted seed vertex, None otherwise."""
        try:
            return self.leafable.index(pos) + 1
        except ValueError:
            return None


# -- constraint families -------------------------------------------------


def add_cyclical_base(b: Build) -> None:
    """Seed-edge selection, path colors over the T slots, rank accounting."""
    m, spec = b.m, b.spec
    seed = spec.seed
    for e in seed.edges:
        m.add_var(f"eC_{e.index}", BINARY)
    for i in range(1, b.t_t + 1):
        m.add_var(f"vT_{i}", BINARY)
    for i in range(2, b.t_t + 1):
        m.add_var(f"eT_{i}", BINARY)
    for i in range(1, b.t_t + 1):
        m.add_var(f"chiT_{i}", INTEGER, 0, b.k_c)
        for k in range(0, b.k_c + 1):
            m.add_var(f"chiTk_{i}_{k}", BINARY)
    m.add_var("clrT_0", INTEGER, 0, b.t_t)
    for e in b.colored_edges:
        lo = max(0, e.len_lb - 1)
        hi = min(e.len_ub - 1, b.t_t)
        if lo > hi:
            m.add_var(f"clrT_{e.index}", INTEGER, 0, 0)
            b.mark_infeasible(f"clrT_{e.index}_range")
        else:
            m.add_var(f"clrT_{e.index}", INTEGER, lo, hi)
    for k in range(0, b.k_c + 1):
        m.add_var(f"dclrT_{k}", BINARY)
    for i in range(1, b.t_c + 1):
        m.add_var(f"tdgCout_{i}", INTEGER, 0, 4)
        m.add_var(f"tdgCin_{i}", INTEGER, 0, 4)
    n_optional = len(b.optional_edges)
    m.add_var("rank", INTEGER, seed.rank - n_optional, seed.rank)

    # rank = rank(seed) - sum of dropped optional edges
    b.row(
        "co_rank",
        [("rank", 1)] + [(f"eC_{e.index}", -1) for e in b.optional_edges],
        EQ,
        seed.rank - n_optional,
    )
    for e in b.fixed_edges:
        b.row(f"co_fix_{e.index}", [(f"eC_{e.index}", 1)], EQ, 1)
    for e in b.path_edges:
        b.row(f"co_drop_{e.index}", [(f"eC_{e.index}", 1)], EQ, 0)
        b.row(f"co_need_{e.index}", [(f"clrT_{e.index}", 1)], GE, 1)
    for e in b.flexible_edges:
        b.row(
            f"co_either_{e.index}",
            [(f"eC_{e.index}", 1), (f"clrT_{e.index}", 1)],
            GE,
            1,
        )
        b.row(
            f"co_excl_{e.index}",
            [(f"clrT_{e.index}", 1), (f"eC_{e.index}", b.t_t)],
            LE,
            b.t_t,
        )
    for i in range(1, b.t_c + 1):
        outs = [e for e in b.direct_edges if e.tail == i]
        ins = [e for e in b.direct_edges if e.head == i]
        b.row(
            f"co_outdeg_{i}",
            [(f"eC_{e.index}", 1) for e in outs] + [(f"tdgCout_{i}", -1)],
            EQ,
            0,
        )
        b.row(
            f"co_indeg_{i}",
            [(f"eC_{e.index}", 1) for e in ins] + [(f"tdgCin_{i}", -1)],
            EQ,
            0,
        )
    for i in range(1, b.t_t + 1):
        b.row(f"co_unused_{i}", [(f"chiTk_{i}_0", 1), (f"vT_{i}", 1)], EQ, 1)
        b.row(
            f"co_onehot_{i}",
            [(f"chiTk_{i}_{k}", 1) for k in range(0, b.k_c + 1)],
            EQ,
            1,
        )
        b.row(
            f"co_code_{i}",
            [(f"chiTk_{i}_{k}", k) for k in range(1, b.k_c + 1)]
            + [(f"chiT_{i}", -1)],
            EQ,
            0,
        )
    for k in range(0, b.k_c + 1):
        b.row(
            f"co_count_{k}",
            [(f"chiTk_{i}_{k}", 1) for i in range(1, b.t_t + 1)]
            + [(f"clrT_{k}", -1)],
            EQ,
            0,
        )
        b.row(
            f"co_used_hi_{k}",
            [(f"dclrT_{k}", b.t_t)]
            + [(f"chiTk_{i}_{k}", -1) for i in range(1, b.t_t + 1)],
            GE,
            0,
        )
        b.row(
            f"co_used_lo_{k}",
            [(f"chiTk_{i}_{k}", 1) for i in range(1, b.t_t + 1)]
            + [(f"dclrT_{k}", -1)],
            GE,
            0,
        )
    for i in range(2, b.t_t + 1):
        b.row(f"co_prefix_{i}", [(f"vT_{i - 1}", 1), (f"vT_{i}", -1)], GE, 0)
        b.row(
            f"co_chain_hi_{i}",
            [
                (f"vT_{i - 1}", b.k_c),
                (f"eT_{i}", -b.k_c),
                (f"chiT_{i - 1}", -1),
                (f"chiT_{i}", 1),
            ],
            GE,
            0,
        )
        b.row(
            f"co_chain_lo_{i}",
            [
                (f"chiT_{i - 1}", 1),
                (f"chiT_{i}", -1),
                (f"vT_{i - 1}", -1),
                (f"eT_{i}", 1),
            ],
            GE,
            0,
        )


def add_leaf_paths(b: Build) -> None:
    """Leaf-path colors over the F slots, leaf-branch budget, interior size."""
    m, spec = b.m, b.spec
    for i in range(1, b.t_f + 1):
        m.add_var(f"vF_{i}", BINARY)
    for i in range(2, b.t_f + 1):
        m.add_var(f"eF_{i}", BINARY)
    for i in range(1, b.t_f + 1):
        m.add_var(f"chiF_{i}", INTEGER, 0, b.c_f)
        for c in range(0, b.c_f + 1):
            m.add_var(f"chiFc_{i}_{c}", BINARY)
    for c in range(0, b.c_f + 1):
        m.add_var(f"clrF_{c}", INTEGER, 0, b.t_f)
    m.add_var("dclrF_0", BINARY)
    for c in range(1, b.c_f + 1):
        if c <= b.t_c_tilde:
            lb = spec.seed.vertices[b.leafable[c - 1] - 1].leaf_path_lb
        else:
            lb = 0
        m.add_var(f"dclrF_{c}", BINARY, lb, 1)
    for e in b.colored_edges:
        for i in range(1, b.t_t + 1):
            m.add_var(f"bl_{e.index}_{i}", BINARY)
    m.add_var("nintG", INTEGER, spec.n_int_lb, spec.n_int_ub)

    for i in range(1, b.t_f + 1):
        b.row(f"lp_unused_{i}", [(f"chiFc_{i}_0", 1), (f"vF_{i}", 1)], EQ, 1)
        b.row(
            f"lp_onehot_{i}",
            [(f"chiFc_{i}_{c}", 1) for c in range(0, b.c_f + 1)],
            EQ,
            1,
        )
        b.row(
            f"lp_code_{i}",
            [(f"chiFc_{i}_{c}", c) for c in range(1, b.c_f + 1)]
            + [(f"chiF_{i}", -1)],
            EQ,
            0,
        )
    for c in range(0, b.c_f + 1):
        b.row(
            f"lp_count_{c}",
            [(f"chiFc_{i}_{c}", 1) for i in range(1, b.t_f + 1)]
            + [(f"clrF_{c}", -1)],
            EQ,
            0,
        )
        b.row(
            f"lp_used_hi_{c}",
            [(f"dclrF_{c}", b.t_f)]
            + [(f"chiFc_{i}_{c}", -1) for i in range(1, b.t_f + 1)],
            GE,
            0,
        )
        b.row(
            f"lp_used_lo_{c}",
            [(f"chiFc_{i}_{c}", 1) for i in range(1, b.t_f + 1)]
            + [(f"dclrF_{c}", -1)],
            GE,
            0,
        )
    for i in range(2, b.t_f + 1):
        b.row(f"lp_prefix_{i}", [(f"vF_{i - 1}", 1), (f"vF_{i}", -1)], GE, 0)
        b.row(
            f"lp_chain_hi_{i}",
            [
                (f"vF_{i - 1}", b.c_f),
                (f"eF_{i}", -b.c_f),
                (f"chiF_{i - 1}", -1),
                (f"chiF_{i}", 1),
            ],
            GE,
            0,
        )
        b.row(
            f"lp_chain_lo_{i}",
            [
                (f"chiF_{i - 1}", 1),
                (f"chiF_{i}", -1),
                (f"vF_{i - 1}", -1),
                (f"eF_{i}", 1),
            ],
            GE,
            0,
        )
    for e in b.colored_edges:
        for i in range(1, b.t_t + 1):
            b.row(
                f"lp_branch_{e.index}_{i}",
                [
                    (f"bl_{e.index}_{i}", 1),
                    (f"dclrF_{b.t_c_tilde + i}", -1),
                    (f"chiTk_{i}_{e.index}", -1),
                ],
                GE,
                -1,
            )
    if b.colored_edges and b.t_t:
        b.row(
            "lp_branch_budget",
            [
                (f"bl_{e.index}_{i}", 1)
                for e in b.colored_edges
                for i in range(1, b.t_t + 1)
            ]
            + [(f"dclrF_{b.t_c_tilde + i}", -1) for i in range(1, b.t_t + 1)],
            LE,
            0,
        )
    for e in b.colored_edges:
        b.rng(
            f"lp_branches_{e.index}",
            [(f"bl_{e.index}_{i}", 1) for i in range(1, b.t_t + 1)],
            e.branch_lb,
            e.branch_ub,
        )
    b.row(
        "lp_interior_size",
        [(f"vT_{i}", 1) for i in range(1, b.t_t + 1)]
        + [(f"vF_{i}", 1) for i in range(1, b.t_f + 1)]
        + [("nintG", -1)],
        EQ,
        -b.t_c,
    )


def _menu(b: Build, x: str, i: int) -> tuple[str, ...]:
    return b.menu_c[i] if x == "C" else b.menu_e


def _slots(b: Build, x: str) -> int:
    return {"C": b.t_c, "T": b.t_t, "F": b.t_f}[x]


def add_fringe_trees(b: Build) -> None:
    """Fringe-tree choice per interior vertex plus height accounting."""
    m, spec = b.m, b.spec
    by_id = spec.fringe_by_id
    for x in "CTF":
        for i in range(1, _slots(b, x) + 1):
            for psi in _menu(b, x, i):
                m.add_var(f"dfr{x}_{i}_{b.psi_pos[psi]}", BINARY)
            m.add_var(f"degex{x}_{i}", INTEGER, 0, 3)
            m.add_var(f"hyddeg{x}_{i}", INTEGER, 0, 4)
            m.add_var(f"eledeg{x}_{i}", INTEGER, -3, 3)
            m.add_var(f"h{x}_{i}", INTEGER, 0, b.rho)
    b.ivar("nG", spec.n_lb, spec.n_star)
    for p, f in enumerate(b.psis, start=1):
        b.ivar(f"fc_{p}", f.fc_lb, min(f.fc_ub, spec.n_int_ub))
    for ai in range(len(b.space.ac_lf)):
        m.add_var(f"aclf_{ai + 1}", INTEGER, 0, 4 * b.n_star)
    for e in b.colored_edges:
        for i in range(1, b.t_t + 1):
            m.add_var(f"sig_{e.index}_{i}", BINARY)

    for x in "CTF":
        for i in range(1, _slots(b, x) + 1):
            menu = _menu(b, x, i)
            pick = [(f"dfr{x}_{i}_{b.psi_pos[psi]}", 1) for psi in menu]
            if x == "C":
                b.row(f"fr_pick_{x}_{i}", pick, EQ, 1)
            else:
                b.row(f"fr_pick_{x}_{i}", pick + [(f"v{x}_{i}", -1)], EQ, 0)
            b.row(
                f"fr_degex_{x}_{i}",
                [
                    (f"dfr{x}_{i}_{b.psi_pos[psi]}", by_id[psi].tree.root_heavy_children)
                    for psi in menu
                ]
                + [(f"degex{x}_{i}", -1)],
                EQ,
                0,
            )
            b.row(
                f"fr_hyddeg_{x}_{i}",
                [
                    (
                        f"dfr{x}_{i}_{b.psi_pos[psi]}",
                        by_id[psi].tree.root_hydrogen_children,
                    )
                    for psi in menu
                ]
                + [(f"hyddeg{x}_{i}", -1)],
                EQ,
                0,
            )
            b.row(
                f"fr_eledeg_{x}_{i}",
                [
                    (f"dfr{x}_{i}_{b.psi_pos[psi]}", by_id[psi].tree.root_charge)
                    for psi in menu
                ]
                + [(f"eledeg{x}_{i}", -1)],
                EQ,
                0,
            )
            b.row(
                f"fr_height_{x}_{i}",
                [
                    (f"dfr{x}_{i}_{b.psi_pos[psi]}", by_id[psi].tree.height)
                    for psi in menu
                ]
                + [(f"h{x}_{i}", -1)],
                EQ,
                0,
            )
    # a leaf path must end in a full-height fringe tree
    for i in range(1, b.t_f + 1):
        tall = [
            (f"dfrF_{i}_{b.psi_pos[psi]}", 1)
            for psi in b.menu_e
            if by_id[psi].tree.height == b.rho
        ]
        terms = tall + [(f"vF_{i}", -1)]
        if i < b.t_f:
            terms.append((f"eF_{i + 1}", 1))
        b.row(f"fr_tallend_{i}", terms, GE, 0)
    # heavy-atom count
    b.row(
        "fr_heavy_count",
        [
            (f"dfr{x}_{i}_{b.psi_pos[psi]}", by_id[psi].tree.n_nonroot_heavy)
            for x in "CTF"
            for i in range(1, _slots(b, x) + 1)
            for psi in _menu(b, x, i)
        ]
        + [(f"vT_{i}", 1) for i in range(1, b.t_t + 1)]
        + [(f"vF_{i}", 1) for i in range(1, b.t_f + 1)]
        + [("nG", -1)],
        EQ,
        -b.t_c,
    )
    # fringe-shape tallies
    for p, f in enumerate(b.psis, start=1):
        b.row(
            f"fr_count_{p}",
            [
                (f"dfr{x}_{i}_{p}", 1)
                for x in "CTF"
                for i in range(1, _slots(b, x) + 1)
                if f.psi_id in _menu(b, x, i)
            ]
            + [(f"fc_{p}", -1)],
            EQ,
            0,
        )
    # leaf-edge adjacency-configuration tallies over the space catalog
    ac_key_to_idx = {
        (a.a.token, a.b.token, a.mult): ai + 1
        for ai, a in enumerate(b.space.ac_lf)
    }
    psi_ac: dict[str, dict[int, int]] = {}
    for f in b.psis:
        counts: dict[int, int] = {}
        for key, cnt in f.tree.leaf_edge_configs.items():
            idx = ac_key_to_idx.get(key)
            if idx is None:
                raise BuildError(
                    f"fringe tree {f.psi_id} contains leaf-edge configuration "
                    f"{key} outside the descriptor space"
                )
            counts[idx] = counts.get(idx, 0) + cnt
        psi_ac[f.psi_id] = counts
    for ai in range(1, len(b.space.ac_lf) + 1):
        b.row(
            f"fr_ac_{ai}",
            [
                (f"dfr{x}_{i}_{b.psi_pos[psi]}", psi_ac[psi].get(ai, 0))
                for x in "CTF"
                for i in range(1, _slots(b, x) + 1)
                for psi in _menu(b, x, i)
            ]
            + [(f"aclf_{ai}", -1)],
            EQ,
            0,
        )
    # requested bounds on leaf-edge configurations
    for bound in spec.ac_bounds:
        key = (bound.config.a.token, bound.config.b.token, bound.config.mult)
        idx = ac_key_to_idx.get(key)
        if idx is None:
            if bound.lb > 0:
                b.mark_infeasible(f"ac_{bound.config.label}")
            continue
        b.rng(f"fr_acrange_{idx}", [(f"aclf_{idx}", 1)], bound.lb, bound.ub)

    # height bounds at seed vertices
    big = b.n_star
    for pos in range(1, b.t_c + 1):
        sv = spec.seed.vertices[pos - 1]
        c = b.leaf_color_of_vertex(pos)
        if c is None:
            b.rng(f"fr_chC_{pos}", [(f"hC_{pos}", 1)], sv.height_lb, sv.height_ub)
            continue
        b.row(
            f"fr_chC_lo1_{pos}",
            [(f"hC_{pos}", 1), (f"dclrF_{c}", big)],
            GE,
            sv.height_lb,
        )
        b.row(f"fr_chC_lo2_{pos}", [(f"clrF_{c}", 1)], GE, sv.height_lb - b.rho)
        b.row(f"fr_chC_hi1_{pos}", [(f"hC_{pos}", 1)], LE, sv.height_ub)
        b.row(
            f"fr_chC_hi2_{pos}",
            [(f"clrF_{c}", 1), (f"dclrF_{c}", big)],
            LE,
            sv.height_ub - b.rho + big,
        )
    # height bounds over path interiors
    for e in b.colored_edges:
        k = e.index
        for i in range(1, b.t_t + 1):
            c = b.t_c_tilde + i
            b.row(
                f"fr_chT_hi1_{k}_{i}",
                [(f"hT_{i}", 1), (f"dclrF_{c}", -big), (f"chiTk_{i}_{k}", big)],
                LE,
                e.height_ub + big,
            )
            b.row(
                f"fr_chT_hi2_{k}_{i}",
                [(f"clrF_{c}", 1), (f"dclrF_{c}", big), (f"chiTk_{i}_{k}", big)],
                LE,
                e.height_ub - b.rho + 2 * big,
            )
        b.row(
            f"fr_argmax_{k}",
            [(f"sig_{k}_{i}", 1) for i in range(1, b.t_t + 1)]
            + [(f"dclrT_{k}", -1)],
            EQ,
            0,
        )
        for i in range(1, b.t_t + 1):
            c = b.t_c_tilde + i
            b.row(
                f"fr_sigsel_{k}_{i}",
                [(f"chiTk_{i}_{k}", 1), (f"sig_{k}_{i}", -1)],
                GE,
                0,
            )
            b.row(
                f"fr_chT_lo1_{k}_{i}",
                [(f"hT_{i}", 1), (f"dclrF_{c}", big), (f"sig_{k}_{i}", -big)],
                GE,
                e.height_lb - big,
            )
            b.row(
                f"fr_chT_lo2_{k}_{i}",
                [(f"clrF_{c}", 1), (f"dclrF_{c}", -big), (f"sig_{k}_{i}", -big)],
                GE,
                e.height_lb - b.rho - 2 * big,
            )


def add_degree(b: Build) -> None:
    """Degree bookkeeping: interior degrees, full degrees, tallies."""
    m, spec = b.m, b.spec
    for i in range(1, b.t_c + 1):
        m.add_var(f"degCT_{i}", INTEGER, 0, 4)
        m.add_var(f"degTC_{i}", INTEGER, 0, 4)
    for x in "CTF":
        for i in range(1, _slots(b, x) + 1):
            m.add_var(f"deg{x}_{i}", INTEGER, 0, 4)
            m.add_var(
                f"degint{x}_{i}", INTEGER, 1 if x == "C" else 0, 4
            )
            d0 = 1 if x == "C" else 0
            for d in range(d0, 5):
                m.add_var(f"ddg{x}_{i}_{d}", BINARY)
                m.add_var(f"ddgint{x}_{i}_{d}", BINARY)
            for d in range(0, 5):
                m.add_var(f"dsup{x}_{i}_{d}", BINARY)
    for d in range(1, 5):
        m.add_var(f"dg_{d}", INTEGER, spec.deg_lb[d - 1], spec.deg_ub[d - 1])
        m.add_var(f"dgint_{d}", INTEGER, spec.deg_lb[d - 1], spec.deg_ub[d - 1])

    for i in range(1, b.t_c + 1):
        b.row(
            f"dg_ct_{i}",
            [(f"dclrT_{e.index}", 1) for e in b.colored_at(i, "tail")]
            + [(f"degCT_{i}", -1)],
            EQ,
            0,
        )
        b.row(
            f"dg_tc_{i}",
            [(f"dclrT_{e.index}", 1) for e in b.colored_at(i, "head")]
            + [(f"degTC_{i}", -1)],
            EQ,
            0,
        )
        c = b.leaf_color_of_vertex(i)
        terms = [
            (f"tdgCin_{i}", 1),
            (f"tdgCout_{i}", 1),
            (f"degCT_{i}", 1),
            (f"degTC_{i}", 1),
            (f"degintC_{i}", -1),
        ]
        if c is not None:
            terms.append((f"dclrF_{c}", 1))
        b.row(f"dg_intC_{i}", terms, EQ, 0)
        b.row(
            f"dg_splitC_{i}",
            [(f"degintC_{i}", 1), (f"degexC_{i}", 1), (f"degC_{i}", -1)],
            EQ,
            0,
        )
        tall = [
            (f"dfrC_{i}_{b.psi_pos[psi]}", 1)
            for psi in b.menu_c[i]
            if spec.fringe_by_id[psi].tree.height == b.rho
        ]
        b.row(
            f"dg_leafC_{i}",
            tall + [(f"degintC_{i}", 1)],
            GE,
            2,
        )
    for i in range(1, b.t_t + 1):
        b.row(
            f"dg_intT_{i}",
            [
                (f"vT_{i}", 2),
                (f"dclrF_{b.t_c_tilde + i}", 1),
                (f"degintT_{i}", -1),
            ],
            EQ,
            0,
        )
        b.row(
            f"dg_splitT_{i}",
            [(f"degintT_{i}", 1), (f"degexT_{i}", 1), (f"degT_{i}", -1)],
            EQ,
            0,
        )
    for i in range(1, b.t_f + 1):
        terms = [(f"vF_{i}", 1), (f"degintF_{i}", -1)]
        if i < b.t_f:
            terms.append((f"eF_{i + 1}", 1))
        b.row(f"dg_intF_{i}", terms, EQ, 0)
        b.row(
            f"dg_splitF_{i}",
            [(f"degintF_{i}", 1), (f"degexF_{i}", 1), (f"degF_{i}", -1)],
            EQ,
            0,
        )
    for x in "CTF":
        d0 = 1 if x == "C" else 0
        for i in range(1, _slots(b, x) + 1):
            b.row(
                f"dg_onehot_{x}_{i}",
                [(f"ddg{x}_{i}_{d}", 1) for d in range(d0, 5)],
                EQ,
                1,
            )
            b.row(
                f"dg_value_{x}_{i}",
                [(f"ddg{x}_{i}_{d}", d) for d in range(max(d0, 1), 5)]
                + [(f"deg{x}_{i}", -1), (f"hyddeg{x}_{i}", -1)],
                EQ,
                0,
            )
            b.row(
                f"dg_ionehot_{x}_{i}",
                [(f"ddgint{x}_{i}_{d}", 1) for d in range(d0, 5)],
                EQ,
                1,
            )
            b.row(
                f"dg_ivalue_{x}_{i}",
                [(f"ddgint{x}_{i}_{d}", d) for d in range(max(d0, 1), 5)]
                + [(f"degint{x}_{i}", -1)],
                EQ,
                0,
            )
            b.row(
                f"dg_sonehot_{x}_{i}",
                [(f"dsup{x}_{i}_{d}", 1) for d in range(0, 5)],
                EQ,
                1,
            )
            b.row(
                f"dg_svalue_{x}_{i}",
                [(f"dsup{x}_{i}_{d}", d) for d in range(1, 5)]
                + [(f"deg{x}_{i}", -1)],
                EQ,
                0,
            )
    for d in range(1, 5):
        b.row(
            f"dg_tally_{d}",
            [
                (f"ddg{x}_{i}_{d}", 1)
                for x in "CTF"
                for i in range(1, _slots(b, x) + 1)
            ]
            + [(f"dg_{d}", -1)],
            EQ,
            0,
        )
        b.row(
            f"dg_itally_{d}",
            [
                (f"ddgint{x}_{i}_{d}", 1)
                for x in "CTF"
                for i in range(1, _slots(b, x) + 1)
            ]
            + [(f"dgint_{d}", -1)],
            EQ,
            0,
        )


def add_multiplicity(b: Build) -> None:
    """Bond multiplicities on every scheme edge plus interior-bond tallies."""
    m, spec = b.m, b.spec
    by_id = spec.fringe_by_id
    for e in b.direct_edges:
        m.add_var(f"bC_{e.index}", INTEGER, 0, 3)
        for mm in range(0, 4):
            m.add_var(f"dbC_{e.index}_{mm}", BINARY)
    for i in range(2, b.t_t + 1):
        m.add_var(f"bT_{i}", INTEGER, 0, 3)
        for mm in range(0, 4):
            m.add_var(f"dbT_{i}_{mm}", BINARY)
    for i in range(2, b.t_f + 1):
        m.add_var(f"bF_{i}", INTEGER, 0, 3)
        for mm in range(0, 4):
            m.add_var(f"dbF_{i}_{mm}", BINARY)
    for e in b.colored_edges:
        m.add_var(f"bCTk_{e.index}", INTEGER, 0, 3)
        m.add_var(f"bTCk_{e.index}", INTEGER, 0, 3)
        for mm in range(0, 4):
            m.add_var(f"dbCTk_{e.index}_{mm}", BINARY)
            m.add_var(f"dbTCk_{e.index}_{mm}", BINARY)
    for c in range(1, b.c_f + 1):
        m.add_var(f"bsF_{c}", INTEGER, 0, 3)
        for mm in range(0, 4):
            m.add_var(f"dbsF_{c}_{mm}", BINARY)
    for i in range(1, b.t_t + 1):
        m.add_var(f"bCT_{i}", INTEGER, 0, 3)
        m.add_var(f"bTC_{i}", INTEGER, 0, 3)
    for i in range(1, b.t_f + 1):
        m.add_var(f"bCF_{i}", INTEGER, 0, 3)
        m.add_var(f"bTF_{i}", INTEGER, 0, 3)
    for x in "CTF":
        for i in range(1, _slots(b, x) + 1):
            m.add_var(f"bex{x}_{i}", INTEGER, 0, 4)
    cap = 2 * spec.n_int_ub
    for mm in range(1, 4):
        for part in ("C", "T", "F", "CT", "TC", "CF", "TF"):
            m.add_var(f"bd{part}_{mm}", INTEGER, 0, cap)
        m.add_var(f"bdint_{mm}", INTEGER, 0, cap)

    for e in b.direct_edges:
        i = e.index
        b.row(f"mt_gate_lo_C_{i}", [(f"bC_{i}", 1), (f"eC_{i}", -1)], GE, 0)
        b.row(f"mt_gate_hi_C_{i}", [(f"bC_{i}", 1), (f"eC_{i}", -3)], LE, 0)
        b.row(
            f"mt_onehot_C_{i}",
            [(f"dbC_{i}_{mm}", 1) for mm in range(0, 4)],
            EQ,
            1,
        )
        b.row(
            f"mt_value_C_{i}",
            [(f"dbC_{i}_{mm}", mm) for mm in range(1, 4)] + [(f"bC_{i}", -1)],
            EQ,
            0,
        )
    for x, hi in (("T", b.t_t), ("F", b.t_f)):
        for i in range(2, hi + 1):
            b.row(f"mt_gate_lo_{x}_{i}", [(f"b{x}_{i}", 1), (f"e{x}_{i}", -1)], GE, 0)
            b.row(f"mt_gate_hi_{x}_{i}", [(f"b{x}_{i}", 1), (f"e{x}_{i}", -3)], LE, 0)
            b.row(
                f"mt_onehot_{x}_{i}",
                [(f"db{x}_{i}_{mm}", 1) for mm in range(0, 4)],
                EQ,
                1,
            )
            b.row(
                f"mt_value_{x}_{i}",
                [(f"db{x}_{i}_{mm}", mm) for mm in range(1, 4)]
                + [(f"b{x}_{i}", -1)],
                EQ,
                0,
            )
    for e in b.colored_edges:
        k = e.index
        for side in ("CTk", "TCk"):
            b.row(
                f"mt_gate_lo_{side}_{k}",
                [(f"b{side}_{k}", 1), (f"dclrT_{k}", -1)],
                GE,
                0,
            )
            b.row(
                f"mt_gate_hi_{side}_{k}",
                [(f"b{side}_{k}", 1), (f"dclrT_{k}", -3)],
                LE,
                0,
            )
            b.row(
                f"mt_onehot_{side}_{k}",
                [(f"db{side}_{k}_{mm}", 1) for mm in range(0, 4)],
                EQ,
                1,
            )
            b.row(
                f"mt_value_{side}_{k}",
                [(f"db{side}_{k}_{mm}", mm) for mm in range(1, 4)]
                + [(f"b{side}_{k}", -1)],
                EQ,
                0,
            )
    for c in range(1, b.c_f + 1):
        b.row(f"mt_gate_lo_sF_{c}", [(f"bsF_{c}", 1), (f"dclrF_{c}", -1)], GE, 0)
        b.row(f"mt_gate_hi_sF_{c}", [(f"bsF_{c}", 1), (f"dclrF_{c}", -3)], LE, 0)
        b.row(
            f"mt_onehot_sF_{c}",
            [(f"dbsF_{c}_{mm}", 1) for mm in range(0, 4)],
            EQ,
            1,
        )
        b.row(
            f"mt_value_sF_{c}",
            [(f"dbsF_{c}_{mm}", mm) for mm in range(1, 4)] + [(f"bsF_{c}", -1)],
            EQ,
            0,
        )
    # fringe-root bond load
    for x in "CTF":
        for i in range(1, _slots(b, x) + 1):
            b.row(
                f"mt_root_{x}_{i}",
                [
                    (f"dfr{x}_{i}_{b.psi_pos[psi]}", by_id[psi].tree.beta_root)
                    for psi in _menu(b, x, i)
                ]
                + [(f"bex{x}_{i}", -1)],
                EQ,
                0,
            )
    # position edges exist only at run boundaries
    for i in range(1, b.t_t + 1):
        first = [(f"bCT_{i}", 1), (f"vT_{i}", -3)]
        if i >= 2:
            first.append((f"eT_{i}", 3))
        b.row(f"mt_first_T_{i}", first, LE, 0)
        last = [(f"bTC_{i}", 1), (f"vT_{i}", -3)]
        if i < b.t_t:
            last.append((f"eT_{i + 1}", 3))
        b.row(f"mt_last_T_{i}", last, LE, 0)
    for i in range(1, b.t_f + 1):
        start = [(f"bCF_{i}", 1), (f"bTF_{i}", 1), (f"vF_{i}", -3)]
        if i >= 2:
            start.append((f"eF_{i}", 3))
        b.row(f"mt_first_F_{i}", start, LE, 0)
        b.row(
            f"mt_side_CF_{i}",
            [(f"bCF_{i}", 1)]
            + [(f"chiFc_{i}_{c}", -3) for c in range(1, b.t_c_tilde + 1)],
            LE,
            0,
        )
        b.row(
            f"mt_side_TF_{i}",
            [(f"bTF_{i}", 1)]
            + [
                (f"chiFc_{i}_{c}", -3)
                for c in range(b.t_c_tilde + 1, b.c_f + 1)
            ],
            LE,
            0,
        )
    # tallies
    for mm in range(1, 4):
        b.row(
            f"mt_bdC_{mm}",
            [(f"dbC_{e.index}_{mm}", 1) for e in b.direct_edges]
            + [(f"bdC_{mm}", -1)],
            EQ,
            0,
        )
        b.row(
            f"mt_bdT_{mm}",
            [(f"dbT_{i}_{mm}", 1) for i in range(2, b.t_t + 1)]
            + [(f"bdT_{mm}", -1)],
            EQ,
            0,
        )
        b.row(
            f"mt_bdF_{mm}",
            [(f"dbF_{i}_{mm}", 1) for i in range(2, b.t_f + 1)]
            + [(f"bdF_{mm}", -1)],
            EQ,
            0,
        )
        b.row(
            f"mt_bdCT_{mm}",
            [(f"dbCTk_{e.index}_{mm}", 1) for e in b.colored_edges]
            + [(f"bdCT_{mm}", -1)],
            EQ,
            0,
        )
        b.row(
            f"mt_bdTC_{mm}",
            [(f"dbTCk_{e.index}_{mm}", 1) for e in b.colored_edges]
            + [(f"bdTC_{mm}", -1)],
            EQ,
            0,
        )
        b.row(
            f"mt_bdCF_{mm}",
            [(f"dbsF_{c}_{mm}", 1) for c in range(1, b.t_c_tilde + 1)]
            + [(f"bdCF_{mm}", -1)],
            EQ,
            0,
        )
        b.row(
            f"mt_bdTF_{mm}",
            [(f"dbsF_{c}_{mm}", 1) for c in range(b.t_c_tilde + 1, b.c_f + 1)]
            + [(f"bdTF_{mm}", -1)],
            EQ,
            0,
        )
        b.row(
            f"mt_bdint_{mm}",
            [(f"bd{part}_{mm}", 1) for part in ("C", "T", "F", "CT", "TC", "CF", "TF")]
            + [(f"bdint_{mm}", -1)],
            EQ,
            0,
        )


def add_element_valence(b: Build) -> None:
    """Element assignment, the valence condition, mass accounting."""
    m, spec = b.m, b.spec
    by_id = spec.fringe_by_id
    n_int_elems = len(b.lam_int)
    for x in "CTF":
        for i in range(1, _slots(b, x) + 1):
            m.add_var(f"a{x}_{i}", INTEGER, 0, n_int_elems)
            for e_pos in range(1, n_int_elems + 1):
                m.add_var(f"da{x}_{i}_{e_pos}", BINARY)
    for e_pos in range(1, n_int_elems + 1):
        for x in "CTF":
            m.add_var(f"na{x}_{e_pos}", INTEGER, 0, b.n_star)
        token = b.lam_int[e_pos - 1].token
        lo, hi = spec.na_int_bounds(token)
        b.ivar(f"naint_{e_pos}", lo, min(hi, b.n_star))
    for a_pos, elem in enumerate(b.lam_ex, start=1):
        cap = 3 * b.n_star if elem.is_hydrogen else b.n_star
        for x in "CTF":
            m.add_var(f"naex{x}_{a_pos}", INTEGER, 0, cap)
        m.add_var(f"naex_{a_pos}", INTEGER, 0, cap)
    for t_pos, elem in enumerate(b.lam_all, start=1):
        lo, hi = spec.na_bounds(elem.token)
        cap = 4 * b.n_star if elem.is_hydrogen else b.n_star
        b.ivar(f"na_{t_pos}", lo, min(hi, cap))
    h_lo, h_hi = spec.na_bounds("H")
    atm_lo = spec.n_lb + h_lo
    atm_hi = b.n_star + h_hi
    m.add_var("Mass", INTEGER, 0, b.mass_avg_ub * atm_hi)
    m.add_var("msbar", CONTINUOUS, 0, b.mass_avg_ub)
    for i in range(atm_lo, atm_hi + 1):
        m.add_var(f"datm_{i}", BINARY)

    # multiplicity transfer between color-level and position-level bonds
    for e in b.colored_edges:
        k = e.index
        for i in range(1, b.t_t + 1):
            gate_first = [(f"chiTk_{i}_{k}", 3)]
            if i >= 2:
                gate_first.append((f"eT_{i}", -3))
            b.row(
                f"av_firstlo_{k}_{i}",
                [(f"bCT_{i}", 1), (f"bCTk_{k}", -1)] + [(v, -c) for v, c in gate_first],
                GE,
                -3,
            )
            b.row(
                f"av_firsthi_{k}_{i}",
                [(f"bCT_{i}", 1), (f"bCTk_{k}", -1)] + [(v, c) for v, c in gate_first],
                LE,
                3,
            )
            gate_last = [(f"chiTk_{i}_{k}", 3)]
            if i < b.t_t:
                gate_last.append((f"eT_{i + 1}", -3))
            b.row(
                f"av_lastlo_{k}_{i}",
                [(f"bTC_{i}", 1), (f"bTCk_{k}", -1)] + [(v, -c) for v, c in gate_last],
                GE,
                -3,
            )
            b.row(
                f"av_lasthi_{k}_{i}",
                [(f"bTC_{i}", 1), (f"bTCk_{k}", -1)] + [(v, c) for v, c in gate_last],
                LE,
                3,
            )
    for c in range(1, b.c_f + 1):
        side = "bCF" if c <= b.t_c_tilde else "bTF"
        for i in range(1, b.t_f + 1):
            gate = [(f"chiFc_{i}_{c}", 3)]
            if i >= 2:
                gate.append((f"eF_{i}", -3))
            b.row(
                f"av_leaflo_{c}_{i}",
                [(f"{side}_{i}", 1), (f"bsF_{c}", -1)] + [(v, -cc) for v, cc in gate],
                GE,
                -3,
            )
            b.row(
                f"av_leafhi_{c}_{i}",
                [(f"{side}_{i}", 1), (f"bsF_{c}", -1)] + [(v, cc) for v, cc in gate],
                LE,
                3,
            )

    # element one-hots
    for x in "CTF":
        for i in range(1, _slots(b, x) + 1):
            pick = [(f"da{x}_{i}_{e}", 1) for e in range(1, n_int_elems + 1)]
            if x == "C":
                b.row(f"av_onehot_{x}_{i}", pick, EQ, 1)
            else:
                b.row(f"av_onehot_{x}_{i}", pick + [(f"v{x}_{i}", -1)], EQ, 0)
            b.row(
                f"av_code_{x}_{i}",
                [(f"da{x}_{i}_{e}", e) for e in range(1, n_int_elems + 1)]
                + [(f"a{x}_{i}", -1)],
                EQ,
                0,
            )
            b.row(
                f"av_root_{x}_{i}",
                [
                    (
                        f"dfr{x}_{i}_{b.psi_pos[psi]}",
                        b.lam_int_pos[by_id[psi].tree.root_element],
                    )
                    for psi in _menu(b, x, i)
                ]
                + [(f"a{x}_{i}", -1)],
                EQ,
                0,
            )
    # allowed elements per seed vertex
    for pos in range(1, b.t_c + 1):
        allowed = spec.seed.vertices[pos - 1].elements or b.lam_int
        b.row(
            f"av_menu_{pos}",
            [(f"daC_{pos}_{b.lam_int_pos[e]}", 1) for e in allowed],
            EQ,
            1,
        )
    # valence condition
    val = [0] + [e.valence for e in b.lam_int]
    for pos in range(1, b.t_c + 1):
        terms = []
        for e in b.direct_at(pos):
            terms.append((f"bC_{e.index}", 1))
        for e in b.colored_at(pos, "tail"):
            terms.append((f"bCTk_{e.index}", 1))
        for e in b.colored_at(pos, "head"):
            terms.append((f"bTCk_{e.index}", 1))
        c = b.leaf_color_of_vertex(pos)
        if c is not None:
            terms.append((f"bsF_{c}", 1))
        terms.append((f"bexC_{pos}", 1))
        terms.append((f"eledegC_{pos}", -1))
        terms += [
            (f"daC_{pos}_{e}", -val[e]) for e in range(1, n_int_elems + 1)
        ]
        b.row(f"av_valC_{pos}", terms, EQ, 0)
    for i in range(1, b.t_t + 1):
        terms = []
        if i >= 2:
            terms.append((f"bT_{i}", 1))
        if i < b.t_t:
            terms.append((f"bT_{i + 1}", 1))
        terms += [
            (f"bexT_{i}", 1),
            (f"bCT_{i}", 1),
            (f"bTC_{i}", 1),
            (f"bsF_{b.t_c_tilde + i}", 1),
            (f"eledegT_{i}", -1),
        ]
        terms += [(f"daT_{i}_{e}", -val[e]) for e in range(1, n_int_elems + 1)]
        b.row(f"av_valT_{i}", terms, EQ, 0)
    for i in range(1, b.t_f + 1):
        terms = []
        if i >= 2:
            terms.append((f"bF_{i}", 1))
        if i < b.t_f:
            terms.append((f"bF_{i + 1}", 1))
        terms += [
            (f"bCF_{i}", 1),
            (f"bTF_{i}", 1),
            (f"bexF_{i}", 1),
            (f"eledegF_{i}", -1),
        ]
        terms += [(f"daF_{i}_{e}", -val[e]) for e in range(1, n_int_elems + 1)]
        b.row(f"av_valF_{i}", terms, EQ, 0)
    # element tallies
    for e_pos in range(1, n_int_elems + 1):
        for x in "CTF":
            b.row(
                f"av_na_{x}_{e_pos}",
                [
                    (f"da{x}_{i}_{e_pos}", 1)
                    for i in range(1, _slots(b, x) + 1)
                ]
                + [(f"na{x}_{e_pos}", -1)],
                EQ,
                0,
            )
        b.row(
            f"av_naint_{e_pos}",
            [(f"na{x}_{e_pos}", 1) for x in "CTF"] + [(f"naint_{e_pos}", -1)],
            EQ,
            0,
        )
    for a_pos, elem in enumerate(b.lam_ex, start=1):
        for x in "CTF":
            b.row(
                f"av_naex_{x}_{a_pos}",
                [
                    (
                        f"dfr{x}_{i}_{b.psi_pos[psi]}",
                        by_id[psi].tree.nonroot_element_counts.get(elem.token, 0),
                    )
                    for i in range(1, _slots(b, x) + 1)
                    for psi in _menu(b, x, i)
                ]
                + [(f"naex{x}_{a_pos}", -1)],
                EQ,
                0,
            )
        b.row(
            f"av_naex_{a_pos}",
            [(f"naex{x}_{a_pos}", 1) for x in "CTF"] + [(f"naex_{a_pos}", -1)],
            EQ,
            0,
        )
    for t_pos, elem in enumerate(b.lam_all, start=1):
        terms = [(f"na_{t_pos}", -1)]
        if elem in b.lam_int_pos:
            terms.append((f"naint_{b.lam_int_pos[elem]}", 1))
        for a_pos, ex_elem in enumerate(b.lam_ex, start=1):
            if ex_elem == elem:
                terms.append((f"naex_{a_pos}", 1))
        b.row(f"av_natotal_{t_pos}", terms, EQ, 0)
    # mass accounting
    b.row(
        "av_mass",
        [
            (f"na_{t_pos}", elem.mass_star)
            for t_pos, elem in enumerate(b.lam_all, start=1)
        ]
        + [("Mass", -1)],
        EQ,
        0,
    )
    h_terms = [("nG", 1)]
    for a_pos, ex_elem in enumerate(b.lam_ex, start=1):
        if ex_elem.is_hydrogen:
            h_terms.append((f"naex_{a_pos}", 1))
    b.row(
        "av_atoms_onehot",
        [(f"datm_{i}", 1) for i in range(atm_lo, atm_hi + 1)],
        EQ,
        1,
    )
    b.row(
        "av_atoms_value",
        [(f"datm_{i}", i) for i in range(atm_lo, atm_hi + 1)]
        + [(v, -c) for v, c in h_terms],
        EQ,
        0,
    )
    # slack must absorb the largest possible |Mass - i*msbar| when inactive
    big_m = b.mass_avg_ub * atm_hi
    for i in range(atm_lo, atm_hi + 1):
        b.row(
            f"av_avg_hi_{i}",
            [("Mass", 1), ("msbar", -i), (f"datm_{i}", big_m)],
            LE,
            big_m,
        )
        b.row(
            f"av_avg_lo_{i}",
            [("Mass", 1), ("msbar", -i), (f"datm_{i}", -big_m)],
            GE,
            -big_m,
        )


def add_bond_bounds(b: Build) -> None:
    """Per-seed-edge bounds on double and triple bonds."""
    m = b.m
    for e in b.colored_edges:
        for i in range(2, b.t_t + 1):
            for mm in (2, 3):
                m.add_var(f"bdTk_{e.index}_{i}_{mm}", BINARY)
    for e in b.optional_edges + b.fixed_edges:
        for mm, lo, hi in ((2, e.bond2_lb, e.bond2_ub), (3, e.bond3_lb, e.bond3_ub)):
            b.rng(
                f"bb_direct_{e.index}_{mm}",
                [(f"dbC_{e.index}_{mm}", 1)],
                max(0, lo),
                min(1, hi),
            )
    for e in b.colored_edges:
        k = e.index
        for i in range(2, b.t_t + 1):
            for mm in (2, 3):
                b.row(
                    f"bb_mark_{k}_{i}_{mm}",
                    [
                        (f"bdTk_{k}_{i}_{mm}", 1),
                        (f"dbT_{i}_{mm}", -1),
                        (f"chiTk_{i}_{k}", -1),
                    ],
                    GE,
                    -1,
                )
    for mm in (2, 3):
        if b.colored_edges:
            b.row(
                f"bb_cap_{mm}",
                [(f"dbT_{j}_{mm}", 1) for j in range(2, b.t_t + 1)]
                + [
                    (f"bdTk_{e.index}_{i}_{mm}", -1)
                    for e in b.colored_edges
                    for i in range(2, b.t_t + 1)
                ],
                GE,
                0,
            )
    for e in b.colored_edges:
        k = e.index
        for mm, lo, hi in ((2, e.bond2_lb, e.bond2_ub), (3, e.bond3_lb, e.bond3_ub)):
            b.rng(
                f"bb_path_{k}_{mm}",
                [(f"bdTk_{k}_{i}_{mm}", 1) for i in range(2, b.t_t + 1)]
                + [(f"dbCTk_{k}_{mm}", 1), (f"dbTCk_{k}_{mm}", 1)],
                lo,
                hi,
            )


def _cs_terms(b: Build) -> None:
    """Chemical-symbol indicators: element and suppressed degree combined."""
    m = b.m
    n_sym = len(b.symbols)
    for x in "CTF":
        for i in range(1, _slots(b, x) + 1):
            for s in range(1, n_sym + 1):
                m.add_var(f"cs{x}_{i}_{s}", BINARY)
            for s, info in enumerate(b.symbols, start=1):
                b.row(
                    f"dl_cs_and_{x}_{i}_{s}",
                    [
                        (f"cs{x}_{i}_{s}", 1),
                        (f"da{x}_{i}_{info.element_pos}", -1),
                        (f"dsup{x}_{i}_{info.degree}", -1),
                    ],
                    GE,
                    -1,
                )
                b.row(
                    f"dl_cs_el_{x}_{i}_{s}",
                    [
                        (f"cs{x}_{i}_{s}", 1),
                        (f"da{x}_{i}_{info.element_pos}", -1),
                    ],
                    LE,
                    0,
                )
                b.row(
                    f"dl_cs_dg_{x}_{i}_{s}",
                    [
                        (f"cs{x}_{i}_{s}", 1),
                        (f"dsup{x}_{i}_{info.degree}", -1),
                    ],
                    LE,
                    0,
                )
            pick = [(f"cs{x}_{i}_{s}", 1) for s in range(1, n_sym + 1)]
            if x == "C":
                b.row(f"dl_cs_onehot_{x}_{i}", pick, EQ, 1)
            else:
                b.row(
                    f"dl_cs_onehot_{x}_{i}", pick + [(f"v{x}_{i}", -1)], EQ, 0
                )


def _boundary_markers(b: Build) -> None:
    """First/last vertex of every path run and first vertex of leaf runs."""
    m = b.m
    for e in b.colored_edges:
        k = e.index
        for i in range(1, b.t_t + 1):
            m.add_var(f"firstT_{k}_{i}", BINARY)
            m.add_var(f"lastT_{k}_{i}", BINARY)
            lower = [(f"firstT_{k}_{i}", 1), (f"chiTk_{i}_{k}", -1)]
            cap = [(f"firstT_{k}_{i}", 1), (f"vT_{i}", -1)]
            if i >= 2:
                lower.append((f"eT_{i}", 1))
                cap.append((f"eT_{i}", 1))
            b.row(f"dl_first_lo_{k}_{i}", lower, GE, 0)
            b.row(
                f"dl_first_hi1_{k}_{i}",
                [(f"firstT_{k}_{i}", 1), (f"chiTk_{i}_{k}", -1)],
                LE,
                0,
            )
            b.row(f"dl_first_hi2_{k}_{i}", cap, LE, 0)
            lower = [(f"lastT_{k}_{i}", 1), (f"chiTk_{i}_{k}", -1)]
            cap = [(f"lastT_{k}_{i}", 1), (f"vT_{i}", -1)]
            if i < b.t_t:
                lower.append((f"eT_{i + 1}", 1))
                cap.append((f"eT_{i + 1}", 1))
            b.row(f"dl_last_lo_{k}_{i}", lower, GE, 0)
            b.row(
                f"dl_last_hi1_{k}_{i}",
                [(f"lastT_{k}_{i}", 1), (f"chiTk_{i}_{k}", -1)],
                LE,
                0,
            )
            b.row(f"dl_last_hi2_{k}_{i}", cap, LE, 0)
    for c in range(1, b.c_f + 1):
        for i in range(1, b.t_f + 1):
            m.add_var(f"firstF_{c}_{i}", BINARY)
            lower = [(f"firstF_{c}_{i}", 1), (f"chiFc_{i}_{c}", -1)]
            cap = [(f"firstF_{c}_{i}", 1), (f"vF_{i}", -1)]
            if i >= 2:
                lower.append((f"eF_{i}", 1))
                cap.append((f"eF_{i}", 1))
            b.row(f"dl_lphead_lo_{c}_{i}", lower, GE, 0)
            b.row(
                f"dl_lphead_hi1_{c}_{i}",
                [(f"firstF_{c}_{i}", 1), (f"chiFc_{i}_{c}", -1)],
                LE,
                0,
            )
            b.row(f"dl_lphead_hi2_{c}_{i}", cap, LE, 0)


def _symbol_transfer(b: Build) -> None:
    """Chemical symbol of the endpoint vertex of each path or leaf run."""
    m = b.m
    n_sym = len(b.symbols)
    for e in b.colored_edges:
        k = e.index
        for s in range(1, n_sym + 1):
            m.add_var(f"fsT_{k}_{s}", BINARY)
            m.add_var(f"lsT_{k}_{s}", BINARY)
        for s in range(1, n_sym + 1):
            for i in range(1, b.t_t + 1):
                b.row(
                    f"dl_fs_{k}_{s}_{i}",
                    [
                        (f"fsT_{k}_{s}", 1),
                        (f"csT_{i}_{s}", -1),
                        (f"firstT_{k}_{i}", -1),
                    ],
                    GE,
                    -1,
                )
                b.row(
                    f"dl_ls_{k}_{s}_{i}",
                    [
                        (f"lsT_{k}_{s}", 1),
                        (f"csT_{i}_{s}", -1),
                        (f"lastT_{k}_{i}", -1),
                    ],
                    GE,
                    -1,
                )
        b.row(
            f"dl_fs_onehot_{k}",
            [(f"fsT_{k}_{s}", 1) for s in range(1, n_sym + 1)]
            + [(f"dclrT_{k}", -1)],
            EQ,
            0,
        )
        b.row(
            f"dl_ls_onehot_{k}",
            [(f"lsT_{k}_{s}", 1) for s in range(1, n_sym + 1)]
            + [(f"dclrT_{k}", -1)],
            EQ,
            0,
        )
    for c in range(1, b.c_f + 1):
        for s in range(1, n_sym + 1):
            m.add_var(f"fsF_{c}_{s}", BINARY)
        for s in range(1, n_sym + 1):
            for i in range(1, b.t_f + 1):
                b.row(
                    f"dl_fsF_{c}_{s}_{i}",
                    [
                        (f"fsF_{c}_{s}", 1),
                        (f"csF_{i}_{s}", -1),
                        (f"firstF_{c}_{i}", -1),
                    ],
                    GE,
                    -1,
                )
        b.row(
            f"dl_fsF_onehot_{c}",
            [(f"fsF_{c}_{s}", 1) for s in range(1, n_sym + 1)]
            + [(f"dclrF_{c}", -1)],
            EQ,
            0,
        )


def _edge_config_slots(b: Build) -> list[tuple[str, str, str, str, str]]:
    """All interior-edge slots: (slot name, symbol var A, symbol var B,
    multiplicity indicator prefix, used indicator).  Symbol var entries are
    name prefixes to which _{s} is appended."""
    slots = []
    for e in b.direct_edges:
        slots.append(
            (
                f"C_{e.index}",
                f"csC_{e.tail}",
                f"csC_{e.head}",
                f"dbC_{e.index}",
                f"eC_{e.index}",
            )
        )
    for i in range(2, b.t_t + 1):
        slots.append((f"T_{i}", f"csT_{i - 1}", f"csT_{i}", f"dbT_{i}", f"eT_{i}"))
    for i in range(2, b.t_f + 1):
        slots.append((f"F_{i}", f"csF_{i - 1}", f"csF_{i}", f"dbF_{i}", f"eF_{i}"))
    for e in b.colored_edges:
        k = e.index
        slots.append(
            (f"CTk_{k}", f"csC_{e.tail}", f"fsT_{k}", f"dbCTk_{k}", f"dclrT_{k}")
        )
        slots.append(
            (f"TCk_{k}", f"lsT_{k}", f"csC_{e.head}", f"dbTCk_{k}", f"dclrT_{k}")
        )
    for c in range(1, b.c_f + 1):
        if c <= b.t_c_tilde:
            root = f"csC_{b.leafable[c - 1]}"
        else:
            root = f"csT_{c - b.t_c_tilde}"
        slots.append((f"sF_{c}", root, f"fsF_{c}", f"dbsF_{c}", f"dclrF_{c}"))
    return slots


def add_descriptor_linking(b: Build) -> None:
    """Tie the raw descriptor variables x_1..x_K to the structural model."""
    m, spec, space = b.m, b.spec, b.space
    _cs_terms(b)
    _boundary_markers(b)
    _symbol_transfer(b)
    slots = _edge_config_slots(b)

    n_ord = len(b.ordered_configs)
    for slot, sym_a, sym_b, db, used in slots:
        for o in range(1, n_ord + 1):
            m.add_var(f"ec{slot}_{o}", BINARY)
        for o, (pa, pb, mult, _gi) in enumerate(b.ordered_configs, start=1):
            name = f"ec{slot}_{o}"
            b.row(
                f"dl_ec_and_{slot}_{o}",
                [
                    (name, 1),
                    (f"{sym_a}_{pa}", -1),
                    (f"{sym_b}_{pb}", -1),
                    (f"{db}_{mult}", -1),
                ],
                GE,
                -2,
            )
            b.row(
                f"dl_ec_a_{slot}_{o}", [(name, 1), (f"{sym_a}_{pa}", -1)], LE, 0
            )
            b.row(
                f"dl_ec_b_{slot}_{o}", [(name, 1), (f"{sym_b}_{pb}", -1)], LE, 0
            )
            b.row(
                f"dl_ec_m_{slot}_{o}", [(name, 1), (f"{db}_{mult}", -1)], LE, 0
            )
        b.row(
            f"dl_ec_cover_{slot}",
            [(f"ec{slot}_{o}", 1) for o in range(1, n_ord + 1)] + [(used, -1)],
            EQ,
            0,
        )

    # raw descriptor variables
    off = space.offsets
    k_total = space.k
    bounds: dict[int, tuple[float, float]] = {}
    bounds[1] = (spec.n_lb, spec.n_star)
    n_opt = len(b.optional_edges)
    bounds[2] = (spec.seed.rank - n_opt, spec.seed.rank)
    bounds[3] = (spec.n_int_lb, spec.n_int_ub)
    bounds[4] = (0, b.mass_avg_ub)
    for d in range(1, 5):
        bounds[4 + d] = (0, spec.n_star)
        bounds[8 + d] = (0, spec.n_int_ub)
    bounds[13] = (0, 2 * spec.n_int_ub)
    bounds[14] = (0, 2 * spec.n_int_ub)
    for j in range(15, k_total + 1):
        bounds[j] = (0, 4 * spec.n_star)
    for j in range(1, k_total + 1):
        lo, hi = bounds[j]
        kind = CONTINUOUS if j == 4 else INTEGER
        m.add_var(f"x_{j}", kind, lo, hi)

    b.row("dl_x_1", [("x_1", 1), ("nG", -1)], EQ, 0)
    b.row("dl_x_2", [("x_2", 1), ("rank", -1)], EQ, 0)
    b.row("dl_x_3", [("x_3", 1), ("nintG", -1)], EQ, 0)
    b.row("dl_x_4", [("x_4", 1), ("msbar", -1)], EQ, 0)
    by_id = spec.fringe_by_id
    for d in range(1, 5):
        terms = [(f"x_{4 + d}", -1)]
        terms += [
            (f"dsup{x}_{i}_{d}", 1)
            for x in "CTF"
            for i in range(1, _slots(b, x) + 1)
        ]
        terms += [
            (
                f"dfr{x}_{i}_{b.psi_pos[psi]}",
                by_id[psi].tree.nonroot_heavy_degree_counts.get(d, 0),
            )
            for x in "CTF"
            for i in range(1, _slots(b, x) + 1)
            for psi in _menu(b, x, i)
        ]
        b.row(f"dl_x_deg_{d}", terms, EQ, 0)
        b.row(
            f"dl_x_degint_{d}",
            [(f"x_{8 + d}", 1), (f"dgint_{d}", -1)],
            EQ,
            0,
        )
    b.row("dl_x_bd2", [("x_13", 1), ("bdint_2", -1)], EQ, 0)
    b.row("dl_x_bd3", [("x_14", 1), ("bdint_3", -1)], EQ, 0)

    for si, elem in enumerate(space.lambda_int):
        j = off["na_int"] + si + 1
        if elem in b.lam_int_pos:
            b.row(
                f"dl_x_naint_{j}",
                [(f"x_{j}", 1), (f"naint_{b.lam_int_pos[elem]}", -1)],
                EQ,
                0,
            )
        else:
            m.fix_var(f"x_{j}", 0)
    ex_pos = {e: i + 1 for i, e in enumerate(b.lam_ex)}
    for si, elem in enumerate(space.lambda_ex):
        j = off["na_ex"] + si + 1
        if elem in ex_pos:
            b.row(
                f"dl_x_naex_{j}",
                [(f"x_{j}", 1), (f"naex_{ex_pos[elem]}", -1)],
                EQ,
                0,
            )
        else:
            m.fix_var(f"x_{j}", 0)
    gamma_terms: dict[int, list[tuple[str, float]]] = {
        gi: [] for gi in range(len(space.gamma_int))
    }
    for slot, _sa, _sb, _db, _used in slots:
        for o, (_pa, _pb, _mult, gi) in enumerate(b.ordered_configs, start=1):
            gamma_terms[gi].append((f"ec{slot}_{o}", 1))
    for gi in range(len(space.gamma_int)):
        j = off["ec"] + gi + 1
        b.row(f"dl_x_ec_{j}", gamma_terms[gi] + [(f"x_{j}", -1)], EQ, 0)
    spec_code_pos = {
        f.tree.canonical_code: b.psi_pos[f.psi_id] for f in b.psis
    }
    for ci, code in enumerate(space.fringe_codes):
        j = off["fc"] + ci + 1
        p = spec_code_pos.get(code)
        if p is None:
            m.fix_var(f"x_{j}", 0)
        else:
            b.row(f"dl_x_fc_{j}", [(f"x_{j}", 1), (f"fc_{p}", -1)], EQ, 0)
    for ai in range(len(space.ac_lf)):
        j = off["ac"] + ai + 1
        b.row(f"dl_x_ac_{j}", [(f"x_{j}", 1), (f"aclf_{ai + 1}", -1)], EQ, 0)


def add_normalization(b: Build, mins, maxs, epsilon: float = 1e-5) -> None:
    """Two-sided scaling sandwich tying x_j to its normalized copy.

    Written with an explicit offset variable (d = x - min) so the two
    inequality rows have an exact zero right-hand side: with a folded
    (1 +- eps)*min constant, a descriptor exactly pinned at the training
    minimum can make the sandwich empty by a rounding hair, which an exact
    solver would dutifully report as infeasible.  The stored minimum is
    nudged one ulp down for the same reason."""
    if epsilon <= 0:
        raise BuildError("normalization tolerance must be positive")
    m = b.m
    k_total = b.space.k
    if len(mins) != k_total or len(maxs) != k_total:
        raise BuildError("normalization parameter length does not match K")
    pad = 1e-9
    for j in range(1, k_total + 1):
        lo, hi = float(mins[j - 1]), float(maxs[j - 1])
        xv = m.var(f"x_{j}")
        if hi == lo:
            m.add_var(f"xhat_{j}", CONTINUOUS, 0, 0)
            continue
        lo = math.nextafter(lo, -math.inf)
        span = hi - lo
        m.add_var(
            f"xd_{j}", CONTINUOUS, xv.lb - lo - pad, xv.ub - lo + pad
        )
        cands = [
            f * (xb - lo) / span
            for f in (1 - epsilon, 1 + epsilon)
            for xb in (xv.lb, xv.ub)
        ]
        m.add_var(
            f"xhat_{j}",
            CONTINUOUS,
            min(0.0, *cands) - pad,
            max(0.0, *cands) + pad,
        )
        b.row(f"nm_d_{j}", [(f"x_{j}", 1), (f"xd_{j}", -1)], EQ, lo)
        b.row(
            f"nm_lo_{j}",
            [(f"xd_{j}", 1 - epsilon), (f"xhat_{j}", -span)],
            LE,
            0,
        )
        b.row(
            f"nm_hi_{j}",
            [(f"xd_{j}", 1 + epsilon), (f"xhat_{j}", -span)],
            GE,
            0,
        )


def add_prediction(
    b: Build, predictor: LinearPredictor, y_lo: float, y_hi: float
) -> None:
    """Predicted value (standardized units) constrained to an interval."""
    if y_lo > y_hi:
        raise BuildError(f"empty target interval [{y_lo}, {y_hi}]")
    if predictor.space_hash != space_hash(b.space):
        raise BuildError("predictor was trained against a different space")
    m = b.m
    m.add_var("y", CONTINUOUS, y_lo, y_hi)
    terms = [("y", 1.0)]
    for j, w in enumerate(predictor.weights, start=1):
        if w != 0.0:
            terms.append((f"xhat_{j}", -w))
    b.row("pred_value", terms, EQ, predictor.bias)


def build_milp(
    spec: TopologicalSpecification,
    space: DescriptorSpace,
    predictor: LinearPredictor | None = None,
    y_lo: float | None = None,
    y_hi: float | None = None,
    epsilon: float = 1e-5,
    objective: str = "none",
) -> MILPModel:
    """Assemble the full model; feasibility objective unless asked to
    minimize or maximize the predicted value."""
    b = Build(spec, space)
    add_cyclical_base(b)
    add_leaf_paths(b)
    add_fringe_trees(b)
    add_degree(b)
    add_multiplicity(b)
    add_element_valence(b)
    add_bond_bounds(b)
    add_descriptor_linking(b)
    if predictor is not None:
        if y_lo is None or y_hi is None:
            raise BuildError("a target interval is required with a predictor")
        if predictor.space_hash != space_hash(space):
            raise BuildError("predictor was trained against a different space")
        add_normalization(b, predictor.mins, predictor.maxs, epsilon)
        add_prediction(b, predictor, y_lo, y_hi)
        b.model.metadata["predictor"] = predictor.space_hash
    b.model.metadata["space"] = space_hash(space)
    if objective == "min_y":
        b.model.set_objective("min", {"y": 1.0})
    elif objective == "max_y":
        b.model.set_objective("max", {"y": 1.0})
    elif objective != "none":
        raise BuildError(f"unknown objective {objective!r}")
    return b.model


def polish_solution(model: MILPModel, sol) -> None:
    """Exact cleanup of a float solution, in place.

    Integer variables are snapped; the continuous layer (average mass, the
    normalization offsets and normalized copies, the predicted value) is
    recomputed in exact rationals from the model's own rows, so the
    returned values satisfy those rows with zero residual regardless of the
    solver's feasibility tolerance.  The normalized copies are placed at
    their sandwich centers, then shifted greedily within the sandwich if
    the predicted value needs to re-enter its interval."""
    from fractions import Fraction

    values = sol.values
    kind = {v.name: v for v in model.variables}
    for v in model.variables:
        if v.kind != CONTINUOUS and v.name in values:
            values[v.name] = Fraction(round(values[v.name]))
    if "Mass" in values and "msbar" in values:
        atoms = None
        for v in model.variables:
            if v.name.startswith("datm_") and values.get(v.name) == 1:
                atoms = int(v.name.split("_")[1])
                break
        if atoms:
            values["msbar"] = Fraction(values["Mass"], atoms)
            if "x_4" in values:
                values["x_4"] = values["msbar"]

    rows = {c.name: c for c in model.constraints}
    centers: dict[str, tuple[Fraction, Fraction]] = {}
    j = 0
    while True:
        j += 1
        name_d = f"nm_d_{j}"
        if f"x_{j}" not in values:
            break
        if name_d not in rows:
            continue
        lo = Fraction(rows[name_d].rhs)
        xd = values[f"x_{j}"] - lo
        values[f"xd_{j}"] = xd
        coeffs_lo = dict(rows[f"nm_lo_{j}"].coeffs)
        coeffs_hi = dict(rows[f"nm_hi_{j}"].coeffs)
        span = Fraction(-coeffs_lo[f"xhat_{j}"])
        low = Fraction(coeffs_lo[f"xd_{j}"]) * xd / span
        high = Fraction(coeffs_hi[f"xd_{j}"]) * xd / span
        if high < low:
            low, high = high, low
        centers[f"xhat_{j}"] = (low, high)
        values[f"xhat_{j}"] = (low + high) / 2

    pred = rows.get("pred_value")
    if pred is not None and centers:
        weights = {
            name: Fraction(c) for name, c in pred.coeffs if name != "y"
        }
        bias = Fraction(pred.rhs)
        y_var = kind["y"]
        y_lo, y_hi = Fraction(y_var.lb), Fraction(y_var.ub)

        def current_y() -> Fraction:
            return bias - sum(
                (w * values[name] for name, w in weights.items()),
                start=Fraction(0),
            )

        y = current_y()
        # shift normalized copies inside their sandwiches to pull y back
        for name, w in sorted(weights.items()):
            if y_lo <= y <= y_hi:
                break
            if name not in centers or w == 0:
                continue
            low, high = centers[name]
            # y = bias - sum(w * xhat); moving xhat by t changes y by -w*t
            need = (y_lo - y) if y < y_lo else (y_hi - y)
            t = need / (-w)
            t = max(low - values[name], min(high - values[name], t))
            values[name] += t
            y = current_y()
        if y_lo <= y <= y_hi:
            values["y"] = y


# Variable catalog: every family the builder creates, as (name pattern,
# kind, meaning).  Decoders and tooling may rely on these names; bounds are
# set where the family is declared and summarized here.
VARIABLE_FAMILIES: tuple[tuple[str, str, str], ...] = (
    (r"eC_\d+", BINARY, "seed edge used directly"),
    (r"vT_\d+", BINARY, "path slot used"),
    (r"eT_\d+", BINARY, "edge between consecutive path slots"),
    (r"chiT_\d+", INTEGER, "path color of a slot, 0..kC"),
    (r"chiTk_\d+_\d+", BINARY, "path color indicator"),
    (r"clrT_\d+", INTEGER, "slots carrying a path color (path length - 1)"),
    (r"dclrT_\d+", BINARY, "path color in use"),
    (r"tdgCin_\d+", INTEGER, "direct seed in-degree, 0..4"),
    (r"tdgCout_\d+", INTEGER, "direct seed out-degree, 0..4"),
    (r"rank", INTEGER, "cycle rank of the result"),
    (r"vF_\d+", BINARY, "leaf-path slot used"),
    (r"eF_\d+", BINARY, "edge between consecutive leaf-path slots"),
    (r"chiF_\d+", INTEGER, "leaf color of a slot, 0..cF"),
    (r"chiFc_\d+_\d+", BINARY, "leaf color indicator"),
    (r"clrF_\d+", INTEGER, "slots carrying a leaf color"),
    (r"dclrF_\d+", BINARY, "leaf color in use"),
    (r"bl_\d+_\d+", BINARY, "path slot carries a hanging leaf path"),
    (r"nintG", INTEGER, "interior vertex count"),
    (r"nG", INTEGER, "heavy atom count"),
    (r"dfr[CTF]_\d+_\d+", BINARY, "fringe-tree choice at a vertex"),
    (r"degex[CTF]_\d+", INTEGER, "heavy children of the fringe root, 0..3"),
    (r"hyddeg[CTF]_\d+", INTEGER, "hydrogens on the vertex, 0..4"),
    (r"eledeg[CTF]_\d+", INTEGER, "charge of the vertex, -3..3"),
    (r"h[CTF]_\d+", INTEGER, "fringe height at the vertex, 0..rho"),
    (r"fc_\d+", INTEGER, "fringe-shape count"),
    (r"aclf_\d+", INTEGER, "leaf-edge configuration count"),
    (r"sig_\d+_\d+", BINARY, "tallest-tree marker along a path"),
    (r"degCT_\d+", INTEGER, "paths leaving a seed vertex"),
    (r"degTC_\d+", INTEGER, "paths entering a seed vertex"),
    (r"deg[CTF]_\d+", INTEGER, "heavy neighbours, 0..4"),
    (r"degint[CTF]_\d+", INTEGER, "interior neighbours, 0..4"),
    (r"ddg[CTF]_\d+_\d+", BINARY, "full-degree indicator"),
    (r"ddgint[CTF]_\d+_\d+", BINARY, "interior-degree indicator"),
    (r"dsup[CTF]_\d+_\d+", BINARY, "suppressed-degree indicator"),
    (r"dg_\d", INTEGER, "interior vertices by full degree"),
    (r"dgint_\d", INTEGER, "interior vertices by interior degree"),
    (r"b[CTF]_\d+", INTEGER, "bond multiplicity of a scheme edge, 0..3"),
    (r"db[CTF]_\d+_\d+", BINARY, "bond multiplicity indicator"),
    (r"bCTk_\d+", INTEGER, "first-edge multiplicity of a path, 0..3"),
    (r"bTCk_\d+", INTEGER, "last-edge multiplicity of a path, 0..3"),
    (r"dbCTk_\d+_\d+", BINARY, "first-edge multiplicity indicator"),
    (r"dbTCk_\d+_\d+", BINARY, "last-edge multiplicity indicator"),
    (r"bsF_\d+", INTEGER, "root-edge multiplicity of a leaf path, 0..3"),
    (r"dbsF_\d+_\d+", BINARY, "leaf root-edge multiplicity indicator"),
    (r"bCT_\d+", INTEGER, "incoming first-edge multiplicity at a slot"),
    (r"bTC_\d+", INTEGER, "outgoing last-edge multiplicity at a slot"),
    (r"bCF_\d+", INTEGER, "leaf root edge from a seed vertex at a slot"),
    (r"bTF_\d+", INTEGER, "leaf root edge from a path slot at a slot"),
    (r"bex[CTF]_\d+", INTEGER, "bond load inside the fringe tree, 0..4"),
    (r"bd(C|T|F|CT|TC|CF|TF)_\d", INTEGER, "bond tally component"),
    (r"bdint_\d", INTEGER, "interior bonds by multiplicity"),
    (r"bdTk_\d+_\d+_\d", BINARY, "path edge of given multiplicity marker"),
    (r"a[CTF]_\d+", INTEGER, "element code of a vertex"),
    (r"da[CTF]_\d+_\d+", BINARY, "element indicator"),
    (r"na[CTF]_\d+", INTEGER, "interior element tally per layer"),
    (r"naint_\d+", INTEGER, "interior element tally"),
    (r"naex[CTF]_\d+", INTEGER, "exterior element tally per layer"),
    (r"naex_\d+", INTEGER, "exterior element tally"),
    (r"na_\d+", INTEGER, "total element tally (hydrogen included)"),
    (r"Mass", INTEGER, "total mass surrogate"),
    (r"msbar", CONTINUOUS, "average mass surrogate over all atoms"),
    (r"datm_\d+", BINARY, "atom-count selector"),
    (r"cs[CTF]_\d+_\d+", BINARY, "chemical-symbol indicator"),
    (r"firstT_\d+_\d+", BINARY, "first slot of a path run"),
    (r"lastT_\d+_\d+", BINARY, "last slot of a path run"),
    (r"firstF_\d+_\d+", BINARY, "first slot of a leaf run"),
    (r"fsT_\d+_\d+", BINARY, "symbol of a path run's first slot"),
    (r"lsT_\d+_\d+", BINARY, "symbol of a path run's last slot"),
    (r"fsF_\d+_\d+", BINARY, "symbol of a leaf run's first slot"),
    (r"ec(C|T|F|CTk|TCk|sF)_\d+_\d+", BINARY, "edge-configuration marker"),
    (r"x_\d+", INTEGER, "raw descriptor (continuous for the mass average)"),
    (r"xd_\d+", CONTINUOUS, "descriptor offset above its training minimum"),
    (r"xhat_\d+", CONTINUOUS, "normalized descriptor"),
    (r"y", CONTINUOUS, "predicted property, standardized units"),
    (r"always_zero", BINARY, "anchor for explicit contradictions"),
)
