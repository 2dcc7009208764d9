import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macrosim import testlib
from macrosim.macrofile import (
    BadIndexLine,
    DuplicateBond,
    DuplicateHeader,
    DuplicateNodeIndex,
    FeaturizationError,
    FingerprintScheme,
    MacroFileError,
    MacroGraph,
    MalformedLine,
    MissingSection,
    OneHotScheme,
    SelfLoop,
    UnknownName,
    featurize,
    graph_stats,
    load_graph,
    parse_macrofile,
    to_graph,
    write_macrofile,
)

MINIMAL = """SMILES
Glc OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O
b CC(OC)CC

MONOMERS
1 Glc
2 Glc

BONDS
1 2 b
"""


def test_minimal_file():
    f = parse_macrofile(MINIMAL)
    assert f.n == 2 and f.bonds == {(1, 2): "b"}
    g = to_graph(f)
    assert g.n_nodes == 2 and g.n_edges == 1
    assert g.labels == ("Glc", "Glc") and g.edges == ((0, 1, "b"),)


def test_headers_case_insensitive_and_comments():
    text = "# a comment\n" + MINIMAL.replace("SMILES", "smiles").replace("BONDS", "Bonds")
    assert to_graph(parse_macrofile(text)).n_edges == 1


def test_write_is_canonical():
    f = parse_macrofile(MINIMAL)
    assert write_macrofile(to_graph(f), f.smiles) == MINIMAL


def test_gap_in_indices():
    text = MINIMAL.replace("2 Glc", "3 Glc").replace("1 2 b", "1 3 b")
    with pytest.raises(BadIndexLine) as exc:
        parse_macrofile(text)
    assert exc.value.line == 7


@pytest.mark.parametrize("edit, cls, line", [
    (lambda t: t.replace("1 2 b", "1 1 b"), SelfLoop, 10),
    (lambda t: t.replace("1 2 b", "1 2 b\n2 1 b"), DuplicateBond, 11),
    (lambda t: t.replace("2 Glc", "1 Glc"), DuplicateNodeIndex, 7),
    (lambda t: t.replace("2 Glc", "2 Man"), UnknownName, 7),
    (lambda t: t.replace("1 2 b", "1 2 a"), UnknownName, 10),
    (lambda t: t.replace("1 2 b", "1 7 b"), BadIndexLine, 10),
    (lambda t: t.replace("1 2 b", "1 x b"), BadIndexLine, 10),
    (lambda t: t.replace("1 2 b", "1 2"), BadIndexLine, 10),
    (lambda t: t.replace("\nBONDS", "\nMONOMERS"), DuplicateHeader, 9),
    (lambda t: t.replace("BONDS\n1 2 b\n", ""), MissingSection, None),
    (lambda t: t.replace("SMILES\n", ""), MissingSection, 1),
    (lambda t: t.replace("b CC(OC)CC", "b CC(OC)CC extra"), MalformedLine, 3),
])
def test_structured_errors(edit, cls, line):
    with pytest.raises(cls) as exc:
        parse_macrofile(edit(MINIMAL))
    assert exc.value.line == line


def test_sections_out_of_order():
    text = "MONOMERS\n1 Glc\nSMILES\nGlc C\nBONDS\n"
    with pytest.raises(MissingSection):
        parse_macrofile(text)


def test_unknown_name_carries_name():
    with pytest.raises(UnknownName) as exc:
        parse_macrofile(MINIMAL.replace("2 Glc", "2 Man"))
    assert exc.value.name == "Man"


def test_path_and_branch_degrees(family):
    assert family["L"].degrees() == [1, 2, 2, 2, 2, 1]
    assert max(family["B1"].degrees()) == 3


def test_branch_node_three():
    lib = {"G": "C", "b": "CC"}
    g = MacroGraph(("G",) * 5, ((1, 2, "b"), (2, 3, "b"), (2, 4, "b"), (0, 1, "b")))
    g2 = to_graph(parse_macrofile(write_macrofile(g, lib)))
    assert g2.degrees()[2] == 3


def test_isolated_node_keeps_empty_bonds_section():
    g = MacroGraph(("Glc", "Glc"))
    text = write_macrofile(g, testlib.MONOMER_LIBRARY)
    assert text.rstrip().endswith("BONDS")
    assert to_graph(parse_macrofile(text)) == g


def test_three_monomers_listed_once():
    g = MacroGraph(("Glc", "Xyl", "Fuc", "Glc"), ((0, 1, "b1-4"), (1, 2, "b1-4"), (2, 3, "a1-4")))
    text = write_macrofile(g, testlib.MONOMER_LIBRARY)
    smiles_lines = text.split("MONOMERS")[0].strip().splitlines()[1:]
    assert [ln.split()[0] for ln in smiles_lines] == ["Glc", "Xyl", "Fuc", "b1-4", "a1-4"]


def test_write_unknown_label():
    with pytest.raises(UnknownName):
        write_macrofile(MacroGraph(("Nope",)), testlib.MONOMER_LIBRARY)


def test_macrograph_validation():
    with pytest.raises(SelfLoop):
        MacroGraph(("A",), ((0, 0, "x"),))
    with pytest.raises(DuplicateBond):
        MacroGraph(("A", "B"), ((0, 1, "x"), (1, 0, "y")))
    with pytest.raises(BadIndexLine):
        MacroGraph(("A",), ((0, 1, "x"),))


def test_edges_normalized_and_attrs_follow():
    g = MacroGraph(("A", "B", "C"), ((2, 1, "y"), (0, 1, "x")), None, np.array([[2.0], [1.0]]))
    assert g.edges == ((0, 1, "x"), (1, 2, "y"))
    assert g.edge_attrs.ravel().tolist() == [1.0, 2.0]


def test_one_hot_featurization():
    scheme = OneHotScheme(("Glc", "Xyl", "Fuc"), ("b1-4",))
    g = featurize(MacroGraph(("Xyl", "Glc"), ((0, 1, "b1-4"),)), scheme)
    assert g.node_attrs[0].tolist() == [0, 1, 0]
    assert g.edge_attrs.tolist() == [[1.0]]
    eye = g.node_attrs @ g.node_attrs.T
    assert np.array_equal(eye, np.eye(2))


def test_one_hot_from_graphs(family):
    scheme = OneHotScheme.from_graphs(family.values())
    assert scheme.node_vocab == ("Fuc", "Glc", "Xyl")
    with pytest.raises(UnknownName):
        featurize(MacroGraph(("Man",)), scheme)


def test_fingerprint_featurization_shapes(family):
    g = featurize(family["L-glc-xyl"], FingerprintScheme(), testlib.MONOMER_LIBRARY)
    assert g.node_attrs.shape == (6, 128)
    assert g.edge_attrs.shape == (5, 16)
    assert np.array_equal(g.node_attrs[0], g.node_attrs[1])
    assert not np.array_equal(g.node_attrs[1], g.node_attrs[2])
    assert set(np.unique(g.node_attrs)) <= {0.0, 1.0}


def test_featurization_error_names_monomer():
    with pytest.raises(FeaturizationError) as exc:
        featurize(MacroGraph(("Bad",)), FingerprintScheme(), {"Bad": "C(("})
    assert exc.value.name == "Bad"


def test_attrs_read_only(family):
    g = featurize(family["L"], FingerprintScheme(), testlib.MONOMER_LIBRARY)
    with pytest.raises(ValueError):
        g.node_attrs[0, 0] = 5


@pytest.mark.parametrize("n, edges, density", [
    (6, [(i, i + 1) for i in range(5)], 1 / 3),
    (4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 1.0),
    (1, [], 0.0),
])
def test_graph_stats(n, edges, density):
    s = graph_stats(MacroGraph(("A",) * n, tuple((u, v, "x") for u, v in edges)))
    assert s.n_nodes == n and s.n_edges == len(edges)
    assert s.density == pytest.approx(density)
    assert s.dense == (density > 0.5)


def test_json_round_trip(family):
    g = featurize(family["B2"], FingerprintScheme(), testlib.MONOMER_LIBRARY)
    data = json.loads(json.dumps(g.to_json()))
    assert set(data) == {"nodes", "edges"}
    assert set(data["nodes"][0]) == {"id", "label", "attr"}
    assert MacroGraph.from_json(data) == g
    assert MacroGraph.from_json(family["M"].to_json()) == family["M"]


def test_to_networkx(family):
    nx = pytest.importorskip("networkx")
    g = family["M"].to_networkx()
    assert nx.cycle_basis(g) and g.number_of_edges() == 6


def test_shipped_fixtures_parse(family, tmp_path):
    for name in testlib.ROWS:
        g, lib = load_graph(testlib.reference_paths()[testlib.ROWS.index(name)])
        assert g == family[name]
        assert set(lib) <= set(testlib.MONOMER_LIBRARY)


graph_params = st.tuples(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(0, 1))


@given(graph_params)
def test_round_trip_property(params):
    seed, n, density = params
    g = testlib.generate_random_macrograph(seed, n, density, ("Glc", "Xyl", "Fuc", "Man"), ("a1-4", "b1-4"))
    text = write_macrofile(g, testlib.MONOMER_LIBRARY)
    assert to_graph(parse_macrofile(text)) == g
    s = graph_stats(g)
    assert 0.0 <= s.density <= 1.0
    assert s.n_edges <= n * (n - 1) // 2


@given(st.text(max_size=200))
def test_garbage_never_crashes(text):
    try:
        parse_macrofile(text)
    except MacroFileError:
        pass
