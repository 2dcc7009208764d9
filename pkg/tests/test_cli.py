import json
import subprocess
import sys

import numpy as np
import pytest

from macrosim import testlib
from macrosim.cli import main
from macrosim.macrofile import MacroGraph, write_macrofile
from macrosim.simmatrix import SimilarityReport, read_matrix_csv
from macrosim.substitution import load_matrix, save_matrix


@pytest.fixture
def files(tmp_path):
    out = {}
    for name in testlib.ROWS:
        p = tmp_path / f"{name}.txt"
        p.write_text(testlib.reference_file(name))
        out[name] = p
    return out


@pytest.fixture
def injected(tmp_path):
    p = tmp_path / "nodes.csv"
    save_matrix(testlib.reference_node_matrix(), p)
    e = tmp_path / "edges.csv"
    save_matrix(testlib.reference_edge_matrix(), e)
    return p, e


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys, files, tmp_path):
    code, out, _ = run(capsys, "validate", files["L"], files["M"])
    assert code == 0 and out.count(": OK") == 2
    gap = tmp_path / "gap.txt"
    gap.write_text(files["L"].read_text().replace("\n2 Glc", "\n7 Glc").replace("1 2 b1-4", "1 7 b1-4"))
    code, out, _ = run(capsys, "validate", files["L"], gap)
    assert code == 1 and "BadIndexLine" in out and "line " in out
    code, out, _ = run(capsys, "validate", tmp_path / "absent.txt")
    assert code == 1 and "absent.txt" in out and "I/O error" in out


def test_validate_reports_bad_smiles(capsys, tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text(write_macrofile(MacroGraph(("X",)), {"X": "C(("}))
    code, out, _ = run(capsys, "validate", p)
    assert code == 1 and "'X'" in out


def test_stats(capsys, files):
    code, out, _ = run(capsys, "stats", files["L"])
    data = json.loads(out)
    assert code == 0 and data["graphs"][0]["density"] == pytest.approx(1 / 3, abs=1e-6)
    code, out, _ = run(capsys, "stats", files["L"], files["M"])
    data = json.loads(out)
    assert len(data["graphs"]) == 2 and data["aggregate"]["n_graphs"] == 2
    assert sum(data["aggregate"]["n_edges"]["counts"]) == 2
    code, out, _ = run(capsys, "stats", files["L"], "--format", "csv")
    assert out.splitlines()[1] == "L,6,5,0.333333,0"
    assert run(capsys, "stats")[0] == 2


def test_fpstats(capsys, tmp_path):
    lib = tmp_path / "lib.csv"
    lib.write_text("name,smiles\na,CCO\nb,OCC\n")
    code, out, _ = run(capsys, "fpstats", lib)
    assert code == 0 and out.splitlines()[1].split(",")[3] == "1.000000"
    lib.write_text(testlib.library_csv())
    code, out, _ = run(capsys, "fpstats", lib, "--radii", "2,3", "--bits", "64,128")
    rows = [r.split(",") for r in out.splitlines()[1:]]
    assert len(rows) == 4
    means = {(int(r[0]), int(r[1])): float(r[3]) for r in rows}
    for radius in (2, 3):
        assert means[radius, 64] >= means[radius, 128]
    assert run(capsys, "fpstats", lib, "--bits", "100")[0] == 2


def test_submatrix(capsys, tmp_path):
    lib = tmp_path / "lib.csv"
    lib.write_text("name,smiles\nGlc,OCC1OC(O)C(O)C(O)C1O\n")
    out_path = tmp_path / "m.csv"
    assert run(capsys, "submatrix", lib, "-o", out_path)[0] == 0
    assert load_matrix(out_path).sim.tolist() == [[1.0]]
    lib.write_text(testlib.library_csv())
    assert run(capsys, "submatrix", lib, "-o", out_path, "--no-stereo")[0] == 0
    m = load_matrix(out_path)
    assert m.similarity("a1-4", "b1-4") == 1.0
    lib.write_text("name,smiles\nok,C\nbroken,C1C\n")
    code, _, err = run(capsys, "submatrix", lib)
    assert code == 1 and "broken" in err


def test_ged(capsys, files, injected):
    nodes, edges = injected
    code, out, _ = run(capsys, "ged", files["L"], files["L"])
    assert code == 0 and json.loads(out)["distance"] == 0.0
    code, out, _ = run(capsys, "ged", files["L"], files["L-glc-xyl"], "--indel", 3, "--sub", 3,
                       "--submatrix", nodes, "--edge-submatrix", edges)
    data = json.loads(out)
    assert round(data["distance"], 2) == 2.05
    assert set(data["path"]) == {"mapping", "deletions", "insertions", "cost"}
    code, out, _ = run(capsys, "ged", files["L"], files["L-glc-xyl-fuc"], "--grid", "--submatrix", nodes)
    grid = json.loads(out)["grid"]
    assert len(grid) == 16
    for cell, (ci, cs) in zip(grid, testlib.GRID_CELLS):
        assert cell["distance"] == pytest.approx(testlib.table_a1_expected("L-glc-xyl-fuc", ci, cs))


def test_ged_budget_exit_code(capsys, tmp_path, files):
    big = MacroGraph(("Glc",) * 13, tuple((i, i + 1, "b1-4") for i in range(12)))
    p = tmp_path / "big.txt"
    p.write_text(write_macrofile(big, testlib.MONOMER_LIBRARY))
    code, _, err = run(capsys, "ged", p, files["L"])
    assert code == 3 and "budget" in err


def test_ged_unknown_label_in_matrix(capsys, tmp_path, files, injected):
    g = MacroGraph(("Man", "Glc"), ((0, 1, "b1-4"),))
    p = tmp_path / "man.txt"
    p.write_text(write_macrofile(g, testlib.MONOMER_LIBRARY))
    code, _, err = run(capsys, "ged", p, files["L"], "--submatrix", injected[0])
    assert code == 1 and "Man" in err


def test_kernel(capsys, files, tmp_path):
    code, out, _ = run(capsys, "kernel", files["M"], files["M"], "--seed", 4)
    first = json.loads(out)["value"]
    assert code == 0
    assert json.loads(run(capsys, "kernel", files["M"], files["M"], "--seed", 4)[1])["value"] == first
    code, out, _ = run(capsys, "kernel", files["L"], files["M"], "--bin-width", "1e12", "--iters", 30)
    assert json.loads(out)["value"] == 30 * 6 * 6


def test_matrix(capsys, files, tmp_path):
    one = tmp_path / "one"
    one.mkdir()
    (one / "L.txt").write_text(files["L"].read_text())
    code, out, _ = run(capsys, "matrix", one, "--kernel")
    ids, values = read_matrix_csv(out)
    assert code == 0 and ids == ("L",) and values.shape == (1, 1)

    corpus = files["L"].parent
    outputs = []
    for workers in (1, 8):
        code, out, _ = run(capsys, "matrix", corpus, "--kernel", "--workers", workers)
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]

    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "matrix", corpus, "--kernel", "--normalize", "--report", report)
    _, values = read_matrix_csv(out)
    assert np.allclose(values.max(axis=1), 1.0)
    rep = SimilarityReport.from_json(json.loads(report.read_text()))
    assert rep.normalized is not None and len(rep.ids) == 7


def test_matrix_ged_budget_is_not_an_error(capsys, tmp_path, files):
    big = MacroGraph(("Glc",) * 13, tuple((i, i + 1, "b1-4") for i in range(12)))
    (files["L"].parent / "big.txt").write_text(write_macrofile(big, testlib.MONOMER_LIBRARY))
    report = tmp_path / "r.json"
    code, out, err = run(capsys, "matrix", files["L"], files["M"], files["L"].parent / "big.txt",
                         "--ged", "--report", report)
    assert code == 0 and "exceeded" in err
    data = json.loads(report.read_text())
    assert data["pairs"]["budget-exceeded"] == 2


def test_matrix_usage_errors(capsys, files):
    assert run(capsys, "matrix", files["L"], "--ged", "--kernel")[0] == 2
    assert run(capsys, "matrix", files["L"])[0] == 2
    assert run(capsys, "matrix", files["L"], "--kernel", "--workers", 0)[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "ged", files["L"], files["M"], "--indel", 0)[0] == 2


def test_config_file(capsys, files, injected, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# preset\nindel = 3\nsub = 3\nsubmatrix = {injected[0]}\n")
    code, out, _ = run(capsys, "ged", files["L"], files["L-glc-xyl"], "--config", cfg)
    assert round(json.loads(out)["distance"], 2) == 2.05
    code, out, _ = run(capsys, "ged", files["L"], files["L-glc-xyl"], "--config", cfg, "--sub", 1)
    assert round(json.loads(out)["distance"], 2) == 0.68
    cfg.write_text("kernel = true\niters = 3\n")
    code, out, _ = run(capsys, "matrix", files["L"], "--config", cfg)
    assert code == 0 and read_matrix_csv(out)[1][0, 0] == 3 * 36
    cfg.write_text("no_such_option = 1\n")
    assert run(capsys, "ged", files["L"], files["M"], "--config", cfg)[0] == 2


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "macrosim.cli", "ged", str(files["L"]), str(files["B1"]),
                           "--indel", "5"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["distance"] == 10.0


def test_directories_expand_to_txt_files(capsys, files, tmp_path):
    corpus = files["L"].parent
    (corpus / "notes.md").write_text("not a macrofile")
    code, out, _ = run(capsys, "validate", corpus)
    assert code == 0 and out.count(": OK") == len(testlib.ROWS)
    code, out, _ = run(capsys, "stats", corpus, "--format", "csv")
    assert len(out.splitlines()) == 1 + len(testlib.ROWS)
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run(capsys, "stats", empty)[0] == 1
