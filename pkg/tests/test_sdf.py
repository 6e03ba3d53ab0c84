from invqsar.sdf import parse_sdf


def _mol_block(name, atoms, bonds, charges=()):
    lines = [name, "  test", "", f"{len(atoms):3d}{len(bonds):3d}  0  0  0  0  0  0  0  0999 V2000"]
    for sym in atoms:
        lines.append(
            f"    0.0000    0.0000    0.0000 {sym:<3} 0  0  0  0  0  0  0  0  0  0  0  0"
        )
    for u, v, m in bonds:
        lines.append(f"{u:3d}{v:3d}{m:3d}  0  0  0  0")
    if charges:
        head = f"M  CHG{len(charges):3d}"
        for vid, chg in charges:
            head += f"{vid:4d}{chg:4d}"
        lines.append(head)
    lines.append("M  END")
    lines.append("$$$$")
    return "\n".join(lines) + "\n"


def test_ethane():
    text = _mol_block("ethane", ["C", "C"], [(1, 2, 1)])
    result = parse_sdf(text)
    assert result.ok()
    (g,) = result.graphs
    assert g.n_heavy() == 2
    assert g.n_atoms() == 8
    assert g.validate() == []


def test_five_coordinate_carbon_reported():
    text = _mol_block(
        "bad", ["C", "C", "C", "C", "C", "C"],
        [(1, 2, 1), (1, 3, 1), (1, 4, 1), (1, 5, 1), (1, 6, 1)],
    )
    result = parse_sdf(text)
    assert not result.graphs
    assert len(result.errors) == 1
    msg = result.errors[0].message
    assert "valence" in msg or "heavy neighbours" in msg


def test_mixed_records():
    good1 = _mol_block("ok1", ["C", "O"], [(1, 2, 1)])
    bad = _mol_block("bad", ["C"] * 6,
                     [(1, 2, 1), (1, 3, 1), (1, 4, 1), (1, 5, 1), (1, 6, 1)])
    good2 = _mol_block("ok2", ["N"], [])
    result = parse_sdf(good1 + bad + good2)
    assert len(result.graphs) == 2
    assert len(result.errors) == 1
    assert result.errors[0].record == 1


def test_charge_line():
    text = _mol_block("cation", ["N", "C"], [(1, 2, 1)], charges=[(1, 1)])
    result = parse_sdf(text)
    assert result.ok()
    (g,) = result.graphs
    n = g.vertex_map[1]
    assert n.charge == 1
    # N+ with one C bond gets 3 implicit hydrogens
    assert sum(1 for w, _ in g.adjacency[1] if g.vertex_map[w].element.is_hydrogen) == 3
    assert g.validate() == []


def test_multivalent_sulfur():
    # sulfur with 6 bonds resolves to the valence-6 variant
    text = _mol_block(
        "sf", ["S", "O", "O", "C", "C"],
        [(1, 2, 2), (1, 3, 2), (1, 4, 1), (1, 5, 1)],
    )
    result = parse_sdf(text)
    assert result.ok()
    (g,) = result.graphs
    assert g.vertex_map[1].element.token == "S(6)"
    assert g.validate() == []


def test_malformed_counts_line():
    text = "junk\n\n\nnot-a-counts-line\n$$$$\n"
    result = parse_sdf(text)
    assert not result.graphs
    assert len(result.errors) == 1


def test_unknown_element():
    text = _mol_block("odd", ["Zz"], [])
    result = parse_sdf(text)
    assert result.errors and "unknown element" in result.errors[0].message
