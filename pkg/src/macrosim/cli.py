"""Command-line entry point: ``macrosim <command> ...``.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 compute error.
Any long option may also be given in a ``--config`` file of ``key = value``
lines (``#`` starts a comment); options on the command line win.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from macrosim.fingerprint import FingerprintParams, LibraryError, similarity_stats
from macrosim.ged import COST_GRID, DEFAULT_BUDGET, BudgetExceeded, EditCostConfig, ged_exact
from macrosim.kernel import AttributeLengthMismatch, KernelConfig, UnfeaturizedGraph, propagation_kernel
from macrosim.macrofile import (
    FeaturizationError,
    FingerprintScheme,
    MacroFileError,
    OneHotScheme,
    featurize,
    graph_stats,
    load_graph,
    load_macrofile,
    to_graph,
)
from macrosim.simmatrix import CorpusError, GedEngine, KernelEngine, expand_paths, load_corpus, pairwise
from macrosim.smiles import SmilesError, parse_smiles
from macrosim.substitution import (
    LibraryFormatError,
    MatrixFormatError,
    build_substitution_matrix,
    load_library,
    load_matrix,
)

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2, 3

# errors that mean "the input is wrong" rather than "the computation failed"
_INPUT_ERRORS = (MacroFileError, SmilesError, LibraryError, LibraryFormatError, MatrixFormatError,
                 FeaturizationError, CorpusError, OSError, UnicodeDecodeError)


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_fp(p: argparse.ArgumentParser, edges: bool = False) -> None:
    p.add_argument("--radius", type=int, default=3, help="fingerprint radius (default 3)")
    p.add_argument("--bits", type=int, default=128, help="node fingerprint length (default 128)")
    if edges:
        p.add_argument("--edge-bits", type=int, default=16, help="bond fingerprint length (default 16)")
    p.add_argument("--no-stereo", action="store_true", help="ignore tetrahedral chirality")


def _add_ged(p: argparse.ArgumentParser) -> None:
    p.add_argument("--indel", type=_positive_float, default=1.0, help="insertion/deletion cost (default 1)")
    p.add_argument("--sub", type=_positive_float, default=1.0, help="node substitution multiplier (default 1)")
    p.add_argument("--sub-edge", type=_positive_float, default=None,
                   help="edge substitution multiplier (default: same as --sub)")
    p.add_argument("--submatrix", type=Path, help="node substitution matrix (CSV or JSON)")
    p.add_argument("--edge-submatrix", type=Path, help="edge substitution matrix (CSV or JSON)")
    p.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET,
                   help=f"largest graph size for exact search (default {DEFAULT_BUDGET})")


def _add_kernel(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bin-width", type=_positive_float, default=1.0, help="LSH bin width (default 1)")
    p.add_argument("--metric", choices=("L1", "L2"), default="L1", help="preserved distance (default L1)")
    p.add_argument("--iters", type=_positive_int, default=30, help="propagation iterations (default 30)")
    p.add_argument("--seed", type=_seed, default=0, help="random seed (default 0)")
    p.add_argument("--features", choices=("fingerprint", "onehot"), default="fingerprint",
                   help="node attributes (default fingerprint)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value file supplying option defaults")
    parser = argparse.ArgumentParser(prog="macrosim", description="Similarity of chemistry-attributed monomer graphs.")
    sub = parser.add_subparsers(dest="command", required=True)
    add = lambda name, **kw: sub.add_parser(name, parents=[common], **kw)  # noqa: E731

    p = add("validate", help="check macromolecule files")
    p.add_argument("files", nargs="*", type=Path)

    p = add("stats", help="node/edge counts and density")
    p.add_argument("files", nargs="*", type=Path)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = add("fpstats", help="Tanimoto statistics of a SMILES library over a parameter grid")
    p.add_argument("library", type=Path)
    p.add_argument("--radii", type=_int_list, default=[3])
    p.add_argument("--bits", type=_int_list, default=[128])
    p.add_argument("--no-stereo", action="store_true")
    p.add_argument("-o", "--output", type=Path)

    p = add("submatrix", help="Tanimoto substitution matrix of a SMILES library")
    p.add_argument("library", type=Path)
    _add_fp(p)
    p.add_argument("-o", "--output", type=Path)

    p = add("ged", help="exact edit distance between two files")
    p.add_argument("file_a", type=Path)
    p.add_argument("file_b", type=Path)
    _add_ged(p)
    _add_fp(p, edges=True)
    p.add_argument("--grid", action="store_true", help="evaluate the 4x4 preset cost grid")
    p.add_argument("-o", "--output", type=Path)

    p = add("kernel", help="propagation kernel value between two files")
    p.add_argument("file_a", type=Path)
    p.add_argument("file_b", type=Path)
    _add_kernel(p)
    _add_fp(p, edges=True)
    p.add_argument("-o", "--output", type=Path)

    p = add("matrix", help="pairwise matrix over a corpus")
    p.add_argument("inputs", nargs="+", type=Path, help="files or directories")
    engine = p.add_mutually_exclusive_group()
    engine.add_argument("--ged", dest="engine", action="store_const", const="ged",
                        help="exact edit distance engine")
    engine.add_argument("--kernel", dest="engine", action="store_const", const="kernel",
                        help="propagation kernel engine")
    _add_ged(p)
    _add_kernel(p)
    _add_fp(p, edges=True)
    p.add_argument("--workers", type=_positive_int, default=1, help="worker processes (default 1)")
    p.add_argument("--normalize", action="store_true", help="row-max normalize the CSV output")
    p.add_argument("-o", "--output", type=Path, help="CSV path (default stdout)")
    p.add_argument("--report", type=Path, help="JSON report path")
    return parser


def read_config(path: Path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, command: str, config: dict[str, str]) -> None:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[command]
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    defaults = {}
    for key, value in config.items():
        if key in ("ged", "kernel") and "engine" in actions:
            # "ged = true" selects an engine like the flag does
            if value.lower() in ("true", "1", "yes"):
                defaults["engine"] = key
            continue
        action = actions.get(key)
        if action is None:
            raise UsageError(f"unknown config key {key!r} for {command}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} needs a boolean")
            defaults[key] = value.lower() in ("true", "1", "yes")
        elif isinstance(action, argparse._StoreConstAction):
            if value not in ("ged", "kernel"):
                raise UsageError(f"config key {key!r} must be 'ged' or 'kernel'")
            defaults[key] = value
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        else:
            defaults[key] = value
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"config key {key!r} must be one of {list(action.choices)}")
    sub.set_defaults(**defaults)


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _fp(args, bits: int | None = None) -> FingerprintParams:
    try:
        return FingerprintParams(args.radius, bits if bits is not None else args.bits, not args.no_stereo)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _inputs(paths: Sequence[Path]) -> list[Path]:
    files = expand_paths(paths)
    if not files:
        raise CorpusError("no macromolecule files found")
    return files


def cmd_validate(args) -> int:
    if not args.files:
        raise UsageError("validate needs at least one file")
    status = EXIT_OK
    for path in _inputs(args.files):
        try:
            f = load_macrofile(path)
            to_graph(f)
            for name, smi in f.smiles.items():
                try:
                    parse_smiles(smi)
                except SmilesError as exc:
                    raise LibraryError(name, exc) from exc
            print(f"{path}: OK ({f.n} monomers, {len(f.bonds)} bonds)")
        except MacroFileError as exc:
            print(f"{path}: {type(exc).__name__}: {exc}")
            status = EXIT_INVALID
        except LibraryError as exc:
            print(f"{path}: {type(exc).__name__}: {exc}")
            status = EXIT_INVALID
        except (OSError, UnicodeDecodeError) as exc:
            print(f"{path}: I/O error: {exc}")
            status = EXIT_INVALID
    return status


def _histogram(values: Sequence[float], integer: bool) -> dict:
    values = np.asarray(values, dtype=float)
    if integer:
        edges = np.arange(values.min(), values.max() + 2) - 0.5
        counts, edges = np.histogram(values, bins=edges)
    else:
        counts, edges = np.histogram(values, bins=10, range=(0.0, 1.0))
    return {"counts": counts.tolist(), "edges": edges.tolist()}


def cmd_stats(args) -> int:
    if not args.files:
        raise UsageError("stats needs at least one file")
    rows = []
    for path in _inputs(args.files):
        graph, _ = load_graph(path)
        s = graph_stats(graph)
        rows.append({"id": path.stem, "n_nodes": s.n_nodes, "n_edges": s.n_edges,
                     "density": round(s.density, 6), "dense": s.dense})
    if args.format == "csv":
        lines = ["id,n_nodes,n_edges,density,dense"]
        lines += [f"{r['id']},{r['n_nodes']},{r['n_edges']},{r['density']:.6f},{int(r['dense'])}" for r in rows]
        sys.stdout.write("\n".join(lines) + "\n")
        return EXIT_OK
    aggregate = {
        "n_graphs": len(rows),
        "dense_fraction": sum(r["dense"] for r in rows) / len(rows),
        "n_nodes": _histogram([r["n_nodes"] for r in rows], True),
        "n_edges": _histogram([r["n_edges"] for r in rows], True),
        "density": _histogram([r["density"] for r in rows], False),
    }
    sys.stdout.write(json.dumps({"graphs": rows, "aggregate": aggregate}, indent=1) + "\n")
    return EXIT_OK


def cmd_fpstats(args) -> int:
    library = load_library(args.library)
    try:
        grid = [FingerprintParams(r, b, not args.no_stereo) for r in args.radii for b in args.bits]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not grid:
        raise UsageError("empty --radii or --bits list")
    stats = similarity_stats(library, grid)
    lines = ["radius,n_bits,use_stereo,mean,std,n_pairs,histogram"]
    for p in grid:
        s = stats[p]
        hist = " ".join(map(str, s.counts.tolist()))
        lines.append(f"{p.radius},{p.n_bits},{int(p.use_stereo)},{s.mean:.6f},{s.std:.6f},{s.n_pairs},{hist}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_submatrix(args) -> int:
    matrix = build_substitution_matrix(load_library(args.library), _fp(args))
    _emit(matrix.to_csv(), args.output)
    return EXIT_OK


def _ged_engine_parts(args, library: dict[str, str], labels: set[str], bonds: set[str]):
    if args.submatrix is not None:
        node = load_matrix(args.submatrix)
    else:
        node = build_substitution_matrix({n: library[n] for n in sorted(labels)}, _fp(args))
    if args.edge_submatrix is not None:
        edge = load_matrix(args.edge_submatrix)
    else:
        edge = build_substitution_matrix({n: library[n] for n in sorted(bonds)}, _fp(args, args.edge_bits))
    for name in labels:
        node.index(name)
    for name in bonds:
        edge.index(name)
    return node, edge


def _two_graphs(args):
    g1, lib1 = load_graph(args.file_a)
    g2, lib2 = load_graph(args.file_b)
    library = dict(lib1)
    for name, smi in lib2.items():
        if library.setdefault(name, smi) != smi:
            raise CorpusError(f"SMILES for {name!r} differs between the two files")
    return g1, g2, library


def cmd_ged(args) -> int:
    g1, g2, library = _two_graphs(args)
    labels = set(g1.labels) | set(g2.labels)
    bonds = {lab for g in (g1, g2) for _, _, lab in g.edges}
    node, edge = _ged_engine_parts(args, library, labels, bonds)
    if args.grid:
        cells = [EditCostConfig(i, s, s) for i in COST_GRID for s in COST_GRID]
    else:
        cells = [EditCostConfig(args.indel, args.sub, args.sub if args.sub_edge is None else args.sub_edge)]
    results = []
    for costs in cells:
        value, path = ged_exact(g1, g2, costs, node.distance, edge.distance, args.budget)
        results.append({"c_indel": costs.c_indel, "c_sub_node": costs.c_sub_node,
                        "c_sub_edge": costs.c_sub_edge, "distance": value, "path": path.to_json()})
    out = {"grid": results} if args.grid else results[0]
    _emit(json.dumps(out, indent=1) + "\n", args.output)
    return EXIT_OK


def _scheme(args, graphs) -> object:
    if args.features == "onehot":
        return OneHotScheme.from_graphs(graphs)
    return FingerprintScheme(_fp(args), _fp(args, args.edge_bits))


def cmd_kernel(args) -> int:
    g1, g2, library = _two_graphs(args)
    scheme = _scheme(args, [g1, g2])
    f1, f2 = featurize(g1, scheme, library), featurize(g2, scheme, library)
    cfg = KernelConfig(args.bin_width, args.metric, args.iters, args.seed)
    value = propagation_kernel(f1, f2, cfg)
    _emit(json.dumps({"value": value, "bin_width": cfg.bin_width, "metric": cfg.metric,
                      "t_max": cfg.t_max, "seed": cfg.seed}) + "\n", args.output)
    return EXIT_OK


def cmd_matrix(args) -> int:
    if args.engine is None:
        raise UsageError("matrix needs --ged or --kernel")
    if args.engine == "ged":
        corpus = load_corpus(args.inputs, features=None)
        labels = {lab for g in corpus.graphs for lab in g.labels}
        bonds = {lab for g in corpus.graphs for _, _, lab in g.edges}
        node, edge = _ged_engine_parts(args, corpus.library, labels, bonds)
        costs = EditCostConfig(args.indel, args.sub, args.sub if args.sub_edge is None else args.sub_edge)
        engine = GedEngine(costs, args.budget, node, edge)
    else:
        raw = load_corpus(args.inputs, features=None)
        corpus = raw.featurized(_scheme(args, raw.graphs))
        engine = KernelEngine(KernelConfig(args.bin_width, args.metric, args.iters, args.seed))
    report = pairwise(corpus, engine, workers=args.workers, normalize=args.normalize)
    _emit(report.to_csv(normalized=args.normalize), args.output)
    if args.report is not None:
        args.report.write_text(json.dumps(report.to_json(), indent=1) + "\n")
    for (i, j), msg in sorted(report.errors.items()):
        print(f"pair {report.ids[i]} / {report.ids[j]}: {msg}", file=sys.stderr)
    counts = report.counts()
    if counts["budget-exceeded"]:
        print(f"{counts['budget-exceeded']} pair(s) exceeded the exact-search budget and were set to 0",
              file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_COMPUTE


COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "fpstats": cmd_fpstats,
    "submatrix": cmd_submatrix,
    "ged": cmd_ged,
    "kernel": cmd_kernel,
    "matrix": cmd_matrix,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", type=Path)
        known, _ = pre.parse_known_args(argv)
        if known.config is not None:
            command = next((a for a in argv if a in COMMANDS), None)
            if command is None:
                raise UsageError("--config needs a subcommand")
            _apply_config(parser, command, read_config(known.config))
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"macrosim: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"macrosim: {exc}; use the kernel engine for graphs this large", file=sys.stderr)
        return EXIT_COMPUTE
    except _INPUT_ERRORS as exc:
        print(f"macrosim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (AttributeLengthMismatch, UnfeaturizedGraph, ValueError) as exc:
        print(f"macrosim: compute error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
