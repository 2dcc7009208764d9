"""
A similarity matrix for a small corpus
======================================

Random glycan-like graphs are written as macrofiles, then the command-line
`matrix` command computes all pairwise edit distances over four worker
processes. The report carries per-pair status and summary statistics.
"""

import json
import tempfile
from pathlib import Path

from macrosim import testlib
from macrosim.cli import main
from macrosim.macrofile import write_macrofile

workdir = Path(tempfile.mkdtemp())
corpus = workdir / "corpus"
corpus.mkdir()

for k in range(8):
    g = testlib.generate_random_macrograph(k, 4 + k % 4, 0.4, vocab=("Glc", "Gal", "Man", "Fuc"),
                                           edge_vocab=("a1-4", "b1-4"))
    (corpus / f"glycan{k}.txt").write_text(write_macrofile(g, testlib.MONOMER_LIBRARY))

code = main(["matrix", str(corpus), "--ged", "--workers", "4",
             "-o", str(workdir / "ged.csv"), "--report", str(workdir / "ged.json")])
print("exit code:", code)
print((workdir / "ged.csv").read_text())

report = json.loads((workdir / "ged.json").read_text())
print("pairs:", report["pairs"])
print("mean distance:", round(report["stats"]["mean"], 3))

# the kernel engine scales to larger corpora; here it reuses the same files
main(["matrix", str(corpus), "--kernel", "--normalize", "-o", str(workdir / "kernel.csv")])
print((workdir / "kernel.csv").read_text())
