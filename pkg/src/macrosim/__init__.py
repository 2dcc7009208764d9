"""Similarity of macromolecules represented as chemistry-attributed monomer graphs."""

from macrosim.fingerprint import Fingerprint, FingerprintParams, ecfp, fingerprint_smiles, tanimoto
from macrosim.ged import BudgetExceeded, EditCostConfig, EditPath, ged_brute, ged_exact
from macrosim.kernel import GramMatrix, KernelConfig, kernel_matrix, propagation_kernel
from macrosim.macrofile import (
    FingerprintScheme,
    MacroGraph,
    OneHotScheme,
    featurize,
    graph_stats,
    load_graph,
    parse_macrofile,
    to_graph,
    write_macrofile,
)
from macrosim.simmatrix import Corpus, GedEngine, KernelEngine, load_corpus, pairwise, row_max_normalize
from macrosim.smiles import MolecularGraph, parse_smiles
from macrosim.substitution import SubstitutionMatrix, build_substitution_matrix

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "Corpus",
    "EditCostConfig",
    "EditPath",
    "Fingerprint",
    "FingerprintParams",
    "FingerprintScheme",
    "GedEngine",
    "GramMatrix",
    "KernelConfig",
    "KernelEngine",
    "MacroGraph",
    "MolecularGraph",
    "OneHotScheme",
    "SubstitutionMatrix",
    "build_substitution_matrix",
    "ecfp",
    "featurize",
    "fingerprint_smiles",
    "ged_brute",
    "ged_exact",
    "graph_stats",
    "kernel_matrix",
    "load_corpus",
    "load_graph",
    "pairwise",
    "parse_macrofile",
    "parse_smiles",
    "propagation_kernel",
    "row_max_normalize",
    "tanimoto",
    "to_graph",
    "write_macrofile",
]
