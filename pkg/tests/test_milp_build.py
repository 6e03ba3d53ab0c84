import json

import pytest

from invqsar.descriptors import build_space, featurize
from invqsar.milp.build import Build, BuildError, build_milp
from invqsar.milp.decode import decode
from invqsar.milp.solve import default_external_backend, solve
from invqsar.topospec import check_graph_satisfies, parse_spec

from conftest import (
    fringe_menu_json,
    ring,
    roundtrip_fixture,
    triangle_spec_doc,
    uniform_predictor,
)


def triangle_setup(**spec_overrides):
    dataset = [ring(3), ring(5), ring(6)]
    space = build_space(dataset, 2)
    doc = triangle_spec_doc(fringe_menu_json(dataset))
    doc.update(spec_overrides)
    spec = parse_spec(json.dumps(doc))
    return dataset, space, spec


def test_family_coverage():
    """Each constraint family contributes rows when its index set is
    populated."""
    names: list[str] = []
    counts: dict[str, int] = {}
    # union over fixtures so every edge class and slot kind is populated
    for fixture_name in ("expanded_path", "two_rings", "square_chord"):
        fx = roundtrip_fixture(fixture_name)
        model = build_milp(fx.spec, fx.space, fx.predictor, 0.0, 1.0)
        for con in model.constraints:
            names.append(con.name)
            prefix = con.name.split("_")[0]
            counts[prefix] = counts.get(prefix, 0) + 1
    for family in ("co", "lp", "fr", "dg", "mt", "av", "bb", "dl", "nm", "pred"):
        assert counts.get(family, 0) >= 1, f"family {family} contributed no rows"
    # finer-grained coverage: every sub-family applicable to these fixtures
    wanted = [
        "co_rank", "co_onehot", "co_code", "co_count", "co_chain", "co_either",
        "co_drop", "co_need", "co_fix", "co_outdeg", "co_indeg", "co_prefix",
        "lp_onehot", "lp_code", "lp_count", "lp_chain", "lp_branch",
        "lp_branches", "lp_interior_size",
        "fr_pick", "fr_degex", "fr_hyddeg", "fr_eledeg", "fr_height",
        "fr_tallend", "fr_heavy_count", "fr_count", "fr_ac", "fr_chC",
        "fr_chT", "fr_argmax", "fr_sigsel",
        "dg_ct", "dg_tc", "dg_intC", "dg_intT", "dg_intF", "dg_splitC",
        "dg_leafC", "dg_onehot", "dg_value", "dg_ionehot", "dg_ivalue",
        "dg_sonehot", "dg_svalue", "dg_tally", "dg_itally",
        "mt_gate", "mt_onehot", "mt_value", "mt_root", "mt_first", "mt_last",
        "mt_side", "mt_bd",
        "av_first", "av_last", "av_leaf", "av_onehot", "av_code", "av_root",
        "av_menu", "av_valC", "av_valT", "av_valF", "av_na", "av_naint",
        "av_naex", "av_natotal", "av_mass", "av_atoms", "av_avg",
        "bb_mark", "bb_cap", "bb_path",
        "dl_cs", "dl_first", "dl_last", "dl_lphead", "dl_fs", "dl_ls",
        "dl_ec_and", "dl_ec_cover", "dl_x",
        "nm_d", "nm_lo", "nm_hi", "pred_value",
    ]
    for stem in wanted:
        assert any(n == stem or n.startswith(stem + "_") or n.startswith(stem)
                   for n in names), f"no rows from sub-family {stem}"


def test_build_determinism():
    fx = roundtrip_fixture("triangle")
    m1 = build_milp(fx.spec, fx.space, fx.predictor, 0.1, 0.9)
    m2 = build_milp(fx.spec, fx.space, fx.predictor, 0.1, 0.9)
    assert m1.fingerprint() == m2.fingerprint()


def test_triangle_rank_fixed():
    _, space, spec = triangle_setup()
    model = build_milp(spec, space)
    sol = solve(model, "mini")
    assert sol.status == "optimal"
    assert sol.int_value("rank") == 1
    for e in spec.seed.edges:
        assert sol.int_value(f"eC_{e.index}") == 1


def test_path_color_count_bounds():
    dataset = [ring(3), ring(5), ring(6)]
    space = build_space(dataset, 2)
    doc = triangle_spec_doc(fringe_menu_json(dataset), n_int_ub=5)
    doc["seed"]["edges"][0] = {"tail": 1, "head": 2, "len_lb": 2, "len_ub": 3}
    spec = parse_spec(json.dumps(doc))
    model = build_milp(spec, space)
    v = model.var("clrT_1")
    assert (v.lb, v.ub) == (1.0, 2.0)


def test_optional_edge_drop_reduces_rank():
    fx = roundtrip_fixture("square_chord")
    model = build_milp(fx.spec, fx.space)
    # chord forced in: rank 2; chord forced out: rank 1
    chord = next(e for e in fx.spec.seed.edges if e.cls == "optional")
    m_in = build_milp(fx.spec, fx.space)
    m_in.fix_var(f"eC_{chord.index}", 1)
    sol_in = solve(m_in, default_external_backend(60))
    assert sol_in.int_value("rank") == 2
    m_out = build_milp(fx.spec, fx.space)
    m_out.fix_var(f"eC_{chord.index}", 0)
    sol_out = solve(m_out, default_external_backend(60))
    assert sol_out.int_value("rank") == 1
    g = decode(sol_out, fx.spec, fx.space)
    from invqsar.graph import rank as graph_rank

    assert graph_rank(g) == 1


def test_interior_cap_kills_slots():
    # n_int_ub equal to the seed size forces every T and F slot off
    fx = roundtrip_fixture("expanded_path")
    doc = json.loads(
        __import__("invqsar.topospec", fromlist=["spec_to_json_text"])
        .spec_to_json_text(fx.spec)
    )
    doc["n_int_ub"] = 3
    doc["n_int_lb"] = 3
    doc["t_tree"] = 2
    doc["t_leaf"] = 2
    doc["seed"]["edges"][0] = {"tail": 1, "head": 2, "len_lb": 1, "len_ub": 1}
    spec = parse_spec(json.dumps(doc))
    model = build_milp(spec, fx.space)
    sol = solve(model, default_external_backend(60))
    assert sol.status == "optimal"
    for i in (1, 2):
        assert sol.int_value(f"vT_{i}") == 0
        assert sol.int_value(f"vF_{i}") == 0


def test_fringe_count_cap():
    dataset = [ring(3), ring(5), ring(6)]
    space = build_space(dataset, 2)
    psis = fringe_menu_json(dataset)
    assert len(psis) == 1
    psis[0]["fc_ub"] = 0  # the only fringe tree is banned
    doc = triangle_spec_doc(psis)
    spec = parse_spec(json.dumps(doc))
    model = build_milp(spec, space)
    assert solve(model, "mini").status == "infeasible"


def test_mass_accounting():
    fx = roundtrip_fixture("triangle")
    model = build_milp(fx.spec, fx.space)
    model.fix_var("nG", 3)
    sol = solve(model, "mini")
    g = decode(sol, fx.spec, fx.space)
    mass = sum(v.element.mass_star for v in g.vertices)
    assert sol.int_value("Mass") == mass
    n_atoms = g.n_atoms()
    assert abs(sol.float_value("msbar") - mass / n_atoms) < 1e-6


def test_bond_bound_blocks_triples():
    fx = roundtrip_fixture("hetero")
    model = build_milp(fx.spec, fx.space)
    sol = solve(model, default_external_backend(120))
    assert sol.status == "optimal"
    assert sol.int_value("bdint_3") == 0  # no triple-bond shapes in the menu


def test_normalization_endpoints():
    # stretchable triangle spec so the atom count can reach the dataset max
    dataset = [ring(3), ring(5), ring(6)]
    space = build_space(dataset, 2)
    doc = triangle_spec_doc(fringe_menu_json(dataset), n_int_ub=6)
    for e in doc["seed"]["edges"]:
        e["len_ub"] = 2
    spec = parse_spec(json.dumps(doc))
    vectors = [featurize(g, space) for g in dataset]
    predictor = uniform_predictor(space, vectors)
    eps = 1e-5
    lo, hi = predictor.mins[0], predictor.maxs[0]
    # force n to the dataset min and max and inspect the normalized copy
    m_min = build_milp(spec, space, predictor, -10, 10, epsilon=eps)
    m_min.fix_var("x_1", lo)
    sol = solve(m_min, default_external_backend(60))
    assert abs(sol.float_value("xhat_1")) <= eps
    m_max = build_milp(spec, space, predictor, -10, 10, epsilon=eps)
    m_max.fix_var("x_1", hi)
    sol = solve(m_max, default_external_backend(60))
    assert 1 - eps - 1e-9 <= sol.float_value("xhat_1") <= 1 + eps + 1e-9


def test_prediction_interval_errors():
    fx = roundtrip_fixture("triangle")
    with pytest.raises(BuildError, match="empty target interval"):
        build_milp(fx.spec, fx.space, fx.predictor, 0.9, 0.1)
    other = roundtrip_fixture("hetero")
    with pytest.raises(BuildError, match="different space"):
        build_milp(fx.spec, fx.space, other.predictor, 0.1, 0.9)


def test_objective_modes():
    fx = roundtrip_fixture("triangle")
    lo = build_milp(fx.spec, fx.space, fx.predictor, -10, 10, objective="min_y")
    hi = build_milp(fx.spec, fx.space, fx.predictor, -10, 10, objective="max_y")
    s_lo = solve(lo, default_external_backend(60))
    s_hi = solve(hi, default_external_backend(60))
    assert s_lo.objective <= s_hi.objective + 1e-9
    with pytest.raises(BuildError):
        build_milp(fx.spec, fx.space, objective="noisy")


def test_variable_bounds_match_contract():
    fx = roundtrip_fixture("expanded_path")
    model = build_milp(fx.spec, fx.space)
    assert (model.var("nintG").lb, model.var("nintG").ub) == (
        fx.spec.n_int_lb,
        fx.spec.n_int_ub,
    )
    assert (model.var("nG").lb, model.var("nG").ub) == (fx.spec.n_lb, fx.spec.n_star)
    for i in range(1, fx.spec.t_tree + 1):
        v = model.var(f"chiT_{i}")
        assert (v.lb, v.ub) == (0, fx.spec.seed.k_c)
        assert (model.var(f"eledegT_{i}").lb, model.var(f"eledegT_{i}").ub) == (-3, 3)
        assert model.var(f"hT_{i}").ub == fx.spec.rho
        assert model.var(f"bexT_{i}").ub == 4
        assert model.var(f"degexT_{i}").ub == 3


def test_every_variable_belongs_to_a_cataloged_family():
    import re

    from invqsar.milp.build import VARIABLE_FAMILIES
    from invqsar.milp.model import CONTINUOUS

    fx = roundtrip_fixture("expanded_path")
    model = build_milp(fx.spec, fx.space, fx.predictor, fx.y_lo, fx.y_hi)
    compiled = [(re.compile(f"^{pat}$"), kind) for pat, kind, _ in VARIABLE_FAMILIES]
    for v in model.variables:
        matches = [kind for rex, kind in compiled if rex.match(v.name)]
        assert matches, f"variable {v.name} matches no cataloged family"
        if v.name.startswith("x_"):
            expected = CONTINUOUS if v.name == "x_4" else matches[0]
        else:
            expected = matches[0]
        assert v.kind == expected, (v.name, v.kind, expected)


def test_height_lower_bound_forces_leaf_path():
    """A hanging-tree height demand above rho can only be met by growing a
    leaf path of the right length at that vertex."""
    fx = roundtrip_fixture("expanded_path")
    doc = json.loads(
        __import__("invqsar.topospec", fromlist=["spec_to_json_text"])
        .spec_to_json_text(fx.spec)
    )
    doc["seed"]["vertices"][0]["height_lb"] = 4  # rho=2, so 2 path vertices
    spec = parse_spec(json.dumps(doc))
    model = build_milp(spec, fx.space)
    sol = solve(model, default_external_backend(300))
    assert sol.status == "optimal"
    assert sol.int_value("dclrF_1") == 1
    assert sol.int_value("clrF_1") == 2
    g = decode(sol, spec, fx.space)
    from invqsar.topospec import check_graph_satisfies

    report = check_graph_satisfies(spec, g)
    assert report.passed, report.to_text()


def test_height_exact_fringe_demand():
    """height bounds [2,2] at a vertex without a leaf path pin its fringe
    tree to height exactly 2."""
    fx = roundtrip_fixture("expanded_path")
    doc = json.loads(
        __import__("invqsar.topospec", fromlist=["spec_to_json_text"])
        .spec_to_json_text(fx.spec)
    )
    doc["seed"]["vertices"][1]["height_lb"] = 2
    doc["seed"]["vertices"][1]["height_ub"] = 2
    spec = parse_spec(json.dumps(doc))
    model = build_milp(spec, fx.space)
    sol = solve(model, default_external_backend(300))
    assert sol.status == "optimal"
    assert sol.int_value("hC_2") == 2
    g = decode(sol, spec, fx.space)
    from invqsar.decompose import decompose

    d = decompose(g, 2)
    assert d.fringe_trees[2].height == 2


def test_edge_height_bounds_on_path_interior():
    """Height demands on a path's interior vertices: an upper bound of 0
    forces bare fringes; a lower bound of 1 forces a taller tree."""
    fx = roundtrip_fixture("expanded_path")
    base = json.loads(
        __import__("invqsar.topospec", fromlist=["spec_to_json_text"])
        .spec_to_json_text(fx.spec)
    )
    # the path edge is listed first (class order); cap its tree heights
    capped = json.loads(json.dumps(base))
    capped["seed"]["edges"][0]["height_ub"] = 0
    spec = parse_spec(json.dumps(capped))
    model = build_milp(spec, fx.space)
    sol = solve(model, default_external_backend(300))
    assert sol.status == "optimal"
    g = decode(sol, spec, fx.space)
    from invqsar.decompose import decompose

    d = decompose(g, 2)
    # interior path slots decode to ids t_c + i
    for i in range(1, spec.t_tree + 1):
        if sol.int_value(f"vT_{i}") and sol.int_value(f"chiT_{i}") == 1:
            root = spec.seed.t_c + i
            assert d.fringe_trees[root].height == 0
            assert sol.int_value(f"dclrF_{len(spec.seed.leafable) + i}") == 0

    raised = json.loads(json.dumps(base))
    raised["seed"]["edges"][0]["height_lb"] = 1
    spec2 = parse_spec(json.dumps(raised))
    model2 = build_milp(spec2, fx.space)
    sol2 = solve(model2, default_external_backend(300))
    assert sol2.status == "optimal"
    g2 = decode(sol2, spec2, fx.space)
    d2 = decompose(g2, 2)
    tallest = 0
    for i in range(1, spec2.t_tree + 1):
        if sol2.int_value(f"vT_{i}") and sol2.int_value(f"chiT_{i}") == 1:
            root = spec2.seed.t_c + i
            height = d2.fringe_trees[root].height
            c = len(spec2.seed.leafable) + i
            if sol2.int_value(f"dclrF_{c}"):
                height = sol2.int_value(f"clrF_{c}") + 2
            tallest = max(tallest, height)
    assert tallest >= 1
    assert check_graph_satisfies(spec2, g2).passed


def test_branch_cap_zero_blocks_leaf_paths_on_path():
    """branch_ub = 0 on a stretchable edge bans hanging paths along it."""
    fx = roundtrip_fixture("expanded_path")
    doc = json.loads(
        __import__("invqsar.topospec", fromlist=["spec_to_json_text"])
        .spec_to_json_text(fx.spec)
    )
    doc["seed"]["edges"][0]["branch_ub"] = 0
    spec = parse_spec(json.dumps(doc))
    model = build_milp(spec, fx.space)
    sol = solve(model, default_external_backend(300))
    assert sol.status == "optimal"
    for e in spec.seed.edges:
        if e.cls not in ("path", "flexible"):
            continue
        for i in range(1, spec.t_tree + 1):
            assert sol.int_value(f"bl_{e.index}_{i}") == 0
    # no leaf color may sit on a slot of the capped path
    t_tilde = len(spec.seed.leafable)
    for i in range(1, spec.t_tree + 1):
        if sol.int_value(f"chiT_{i}") == 1:  # slot belongs to the capped edge
            assert sol.int_value(f"dclrF_{t_tilde + i}") == 0


def test_bare_fringe_menu_pins_heavy_count_to_interior():
    """With only hydrogen-dressed single-atom fringe trees on offer, every
    heavy atom is interior."""
    fx = roundtrip_fixture("triangle")
    assert all(
        f.tree.n_nonroot_heavy == 0 for f in fx.spec.fringe_entries
    )
    model = build_milp(fx.spec, fx.space)
    sol = solve(model, "mini")
    assert sol.int_value("nG") == sol.int_value("nintG")


def test_prediction_reduces_to_normalized_interval():
    """A unit-weight zero-bias predictor turns the target window into a
    window on one normalized descriptor."""
    from invqsar.regression import LinearPredictor
    from invqsar.descriptors import space_hash

    dataset = [ring(3), ring(5), ring(6)]
    space = build_space(dataset, 2)
    doc = triangle_spec_doc(fringe_menu_json(dataset), n_int_ub=6)
    for e in doc["seed"]["edges"]:
        e["len_ub"] = 2
    spec = parse_spec(json.dumps(doc))
    vectors = [featurize(g, space) for g in dataset]
    base = uniform_predictor(space, vectors)
    weights = [0.0] * space.k
    weights[0] = 1.0  # heavy-atom count only
    predictor = LinearPredictor(
        weights=tuple(weights), bias=0.0, lam=0.0,
        descriptor_names=space.descriptor_names,
        mins=base.mins, maxs=base.maxs,
        target_min=0.0, target_max=1.0, space_hash=space_hash(space),
    )
    # n ranges over 3..6 normalized to 0..1; ask for the middle third
    model = build_milp(spec, space, predictor, 0.2, 0.8)
    sol = solve(model, default_external_backend(300))
    assert sol.status == "optimal"
    xhat = sol.float_value("xhat_1")
    assert 0.2 - 1e-6 <= xhat <= 0.8 + 1e-6
    assert sol.int_value("x_1") in (4, 5)  # normalized 1/3 and 2/3
