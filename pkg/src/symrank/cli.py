"""Command-line front end.

Subcommands: gen-features, score, select, experiment, p12, oracle-partition,
tree grow, tree predict. Exit codes: 0 success, 1 runtime/method failure,
2 usage or config error. Every subcommand that takes --seed writes a
byte-deterministic primary JSON document; wall-clock timings go to a
sidecar file.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .core import FeatureMatrix, load_csv, var
from .errors import SymrankError, TooLarge
from .evalsel import (
    CandidatesExperimentConfig,
    SCORE_METHODS,
    SignalExperimentConfig,
    TreeParams,
    run_candidates_experiment,
    run_csv_experiment,
    run_signal_experiment,
    score_features,
    select_top,
    selection_boundary_tie,
)
from .monotonic import TabulatedCDF, load_piecewise, preference_probability
from .partition import brute_force_best_2partition, oracle_fixed_size
from .symgen import (
    Architecture,
    build_operator_set,
    generate_report,
    sin_affine,
    unary_from_expr,
)
from .tree import grow_tree, predict_rows, tree_from_json, tree_to_json

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

P12_NOTE = ("p is signed in [-1, 1]: positive prefers the first transform, "
            "negative the second; |p| is the preference magnitude.")


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _unary_entries(entries):
    """Config unary ops: builtin names, {"op": "sin", "a": .., "b": ..} for
    the parameterized sine family, or {"expr": "..."} expression strings."""
    out = []
    for entry in entries:
        if isinstance(entry, dict):
            if entry.get("op") == "sin":
                out.append(sin_affine(float(entry["a"]), float(entry.get("b", 0.0))))
            elif "expr" in entry:
                out.append(unary_from_expr(entry["expr"]))
            else:
                raise SymrankError(f"unsupported unary operator entry {entry}")
        else:
            out.append(entry)
    return tuple(out)


def _methods_arg(raw: str) -> list[str]:
    if raw == "all":
        return list(SCORE_METHODS)
    methods = [m.strip() for m in raw.split(",") if m.strip()]
    unknown = [m for m in methods if m not in SCORE_METHODS]
    if unknown:
        raise SymrankError(f"unknown methods {unknown}; choose from {SCORE_METHODS}")
    return methods


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen_features(args) -> int:
    ds = load_csv(args.input, args.response)
    ops = build_operator_set(args.unary.split(","), args.binary.split(","))
    report = generate_report(ds, Architecture(args.arch), ops, args.value_dedup)
    fm = report.features
    out = Path(args.out_dir)
    _write_csv(out / "features.csv", fm.column_names(),
               (list(row) for row in fm.z))
    _write_json(out / "manifest.json", {
        "architecture": args.arch,
        "input_columns": list(ds.column_names),
        "layer_counts": [dict(c) for c in report.layer_counts],
        "q": fm.q,
        "dropped": [dict(d) for d in report.dropped],
        "constant_columns": list(report.constant_columns),
    })
    print(f"wrote {fm.q} features to {out / 'features.csv'}")
    return EXIT_OK


def cmd_score(args) -> int:
    ds = load_csv(args.input, args.response)
    fm = _dataset_as_features(ds)
    methods = _methods_arg(args.methods)
    table: dict[str, list] = {}
    warnings: list[str] = []
    failed = False
    for method in methods:
        try:
            ms = score_features(fm, ds.y, method, seed=args.seed,
                                tree_params=TreeParams(depth=args.depth))
            table[method] = [float(v) for v in ms.scores]
        except SymrankError as exc:
            warnings.append(f"{method}: {exc}")
            table[method] = None
            failed = True
    for j in range(fm.q):
        col = fm.z[:, j]
        if np.all(col == col[0]):
            warnings.append(
                f"column {ds.column_names[j]!r} has zero variance; "
                "correlation methods report their worst sentinel")
    out = Path(args.out_dir)
    _write_json(out / "scores.json", {
        "columns": list(ds.column_names),
        "methods": table,
        "warnings": warnings,
    })
    rows = [[ds.column_names[j]] + [table[m][j] if table[m] else "" for m in methods]
            for j in range(fm.q)]
    _write_csv(out / "scores.csv", ["feature"] + methods, rows)
    print(f"scored {fm.q} columns with {len(methods)} methods -> {out / 'scores.json'}")
    return EXIT_RUNTIME if failed else EXIT_OK


def _dataset_as_features(ds):
    return FeatureMatrix(ds.x, tuple(var(j) for j in range(ds.d)))


def cmd_select(args) -> int:
    ds = load_csv(args.input, args.response)
    fm = _dataset_as_features(ds)
    methods = _methods_arg(args.methods)
    doc = {"n_selected": args.n_selected, "methods": []}
    for method in methods:
        ms = score_features(fm, ds.y, method, seed=args.seed,
                            tree_params=TreeParams(depth=args.depth))
        sel = select_top(ms, args.n_selected)
        doc["methods"].append({
            "method": method,
            "selected_columns": sel,
            "selected_names": [ds.column_names[j] for j in sel],
            "boundary_tie": selection_boundary_tie(ms, args.n_selected),
        })
    _write_json(Path(args.out_dir) / "selection.json", doc)
    print(f"wrote {Path(args.out_dir) / 'selection.json'}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _load_config(args.config)
    mode = cfg.get("mode", "signal")
    seed = int(cfg.get("seed", args.seed if args.seed is not None else 0))
    tree_params = TreeParams(**cfg.get("tree", {}))
    methods = tuple(cfg.get("methods", ("t0", "pearson", "kendall")))
    if mode == "signal":
        report = run_signal_experiment(SignalExperimentConfig(
            n=int(cfg.get("n", 100)),
            noise_vars=tuple(cfg.get("noise_vars", (0.0, 0.01, 0.1))),
            architectures=tuple(cfg.get("architectures", ("bu", "ub"))),
            unary_ops=_unary_entries(cfg.get("unary_ops", ("id", "cube"))),
            binary_ops=tuple(cfg.get("binary_ops", ("+", "*"))),
            methods=methods,
            repeats=int(cfg.get("repeats", 50)),
            n_selected=int(cfg.get("n_selected", 3)),
            seed=seed,
            value_dedup=bool(cfg.get("value_dedup", False)),
            tree=tree_params,
        ), workers=args.workers)
    elif mode == "candidates":
        report = run_candidates_experiment(CandidatesExperimentConfig(
            truth=cfg["truth"],
            candidates=tuple(cfg["candidates"]),
            n=int(cfg.get("n", 500)),
            noise_var=float(cfg.get("noise_var", 0.1)),
            repeats=int(cfg.get("repeats", 50)),
            n_selected=int(cfg.get("n_selected", 1)),
            methods=methods,
            seed=seed,
            tree=tree_params,
        ), workers=args.workers)
    elif mode == "csv":
        ds = load_csv(cfg["input"], cfg["response"])
        active = cfg.get("active_variables")
        if active is not None:
            active = [ds.column_names.index(a) if isinstance(a, str) else int(a)
                      for a in active]
        report = run_csv_experiment(
            ds,
            architectures=cfg.get("architectures", ("bu", "ub")),
            unary_ops=_unary_entries(cfg.get("unary_ops", ("id", "cube"))),
            binary_ops=cfg.get("binary_ops", ("+", "*")),
            methods=methods,
            n_selected=int(cfg.get("n_selected", 3)),
            seed=seed,
            active_variables=active,
            repeats=int(cfg.get("repeats", 1)),
            tree=tree_params,
            value_dedup=bool(cfg.get("value_dedup", False)),
            workers=args.workers,
        )
    else:
        raise SymrankError(f"unknown experiment mode {mode!r}")

    out = Path(args.out_dir)
    _write_json(out / "report.json", report.primary_document())
    _write_json(out / "timings.json", report.runtimes)
    for run in report.runs:
        for m in run.get("methods", []):
            if "pr_curves" not in m:
                continue
            label = f"{run.get('architecture', 'run')}_{run.get('noise_var', 0):g}_{m['method']}"
            rows = [(rec, prec, r)
                    for r, curve in enumerate(m["pr_curves"])
                    for rec, prec in curve]
            _write_csv(out / f"pr_{label}.csv", ["recall", "precision", "repeat"], rows)
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


def cmd_p12(args) -> int:
    doc = _load_config(args.maps)
    t1 = load_piecewise(doc["transform_1"])
    t2 = load_piecewise(doc["transform_2"])
    measure = None
    if "cdf" in doc:
        measure = TabulatedCDF(doc["cdf"]["x"], doc["cdf"]["p"])
    c_values = [float(c) for c in args.c.split(",")]
    rows = []
    for c in c_values:
        rep = preference_probability(t1, t2, c, measure)
        rows.append({
            "c": c,
            "p": rep.p_value,
            "pref_1": [[iv.lo, iv.hi] for iv in rep.intervals_pref_1],
            "pref_2": [[iv.lo, iv.hi] for iv in rep.intervals_pref_2],
        })
    out = Path(args.out_dir)
    _write_json(out / "p12.json", {"rows": rows, "note": P12_NOTE})
    _write_csv(out / "p12.csv", ["c", "p"], [(r["c"], r["p"]) for r in rows])
    for r in rows:
        pref = "first" if r["p"] > 0 else ("second" if r["p"] < 0 else "neither")
        print(f"C={r['c']:g}: p={r['p']:+.6g} (prefers {pref}, |p|={abs(r['p']):g})")
    print(P12_NOTE)
    return EXIT_OK


def cmd_oracle_partition(args) -> int:
    ds = load_csv(args.input, args.response)
    y = ds.y
    result = oracle_fixed_size(y, args.i)
    doc = {
        "n": int(y.shape[0]),
        "i": args.i,
        "prefix": _partition_doc(result.prefix, y),
        "suffix": _partition_doc(result.suffix, y),
        "winner": result.winner,
        "tie": result.tie,
    }
    if args.brute_force:
        best = brute_force_best_2partition(y, args.i)  # raises TooLarge past n=16
        size_i_side = best.left if len(best.left) == args.i else best.right
        winner_side = result.best.left
        doc["brute_force"] = {
            **_partition_doc(best, y),
            "matches_winner": sorted(size_i_side) == sorted(winner_side),
        }
    _write_json(Path(args.out_dir) / "oracle_partition.json", doc)
    print(f"winner: {result.winner}"
          + (" (tie)" if result.tie else "")
          + f", loss {result.best.total_sse:.12g}")
    return EXIT_OK


def _partition_doc(p, y) -> dict:
    return {
        "left_indices": list(p.left),
        "right_indices": list(p.right),
        "left_values": [float(y[j]) for j in p.left],
        "right_values": [float(y[j]) for j in p.right],
        "loss": p.total_sse,
    }


def cmd_tree_grow(args) -> int:
    ds = load_csv(args.input, args.response)
    tree = grow_tree(ds.x, ds.y, args.depth, args.min_leaf)
    doc = tree_to_json(tree)
    doc["columns"] = list(ds.column_names)
    _write_json(Path(args.out), doc)
    print(f"grew depth<={args.depth} tree with {len(tree.leaves())} leaves -> {args.out}")
    return EXIT_OK


def cmd_tree_predict(args) -> int:
    doc = _load_config(args.tree)
    tree = tree_from_json(doc)
    ds = load_csv(args.input, args.response)
    preds = predict_rows(tree, ds.x)
    _write_csv(Path(args.out), ["prediction"], [(float(p),) for p in preds])
    print(f"wrote {len(preds)} predictions -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symrank",
        description="Rank-based split analysis and symbolic feature selection.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-features", help="expand symbolic features from a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--arch", default="bu", help="layer order over u/b, e.g. bu, ub, ubb")
    p.add_argument("--unary", default="id,cube", help="comma-separated unary ops")
    p.add_argument("--binary", default="+,*", help="comma-separated binary ops")
    p.add_argument("--value-dedup", action="store_true")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_gen_features)

    p = sub.add_parser("score", help="score feature columns against the response")
    p.add_argument("--input", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--methods", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=3, help="tree-importance depth")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("select", help="pick the top features per method")
    p.add_argument("--input", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--methods", default="t0")
    p.add_argument("--n-selected", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_select)

    p = sub.add_parser("experiment", help="run a JSON-configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="fallback seed when the config omits one")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (SYMRANK_THREADS caps this)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("p12", help="signed preference probability over a C grid")
    p.add_argument("--maps", required=True,
                   help="JSON file with transform_1/transform_2 (and optional cdf)")
    p.add_argument("--c", required=True, help="comma-separated splitting values")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_p12)

    p = sub.add_parser("oracle-partition", help="fixed-size oracle 2-partition of y")
    p.add_argument("--input", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--i", type=int, required=True, help="first group size")
    p.add_argument("--brute-force", action="store_true",
                   help="cross-check by enumeration (n <= 16)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_oracle_partition)

    p = sub.add_parser("tree", help="grow or apply a regression tree")
    tree_sub = p.add_subparsers(dest="tree_command", required=True)
    g = tree_sub.add_parser("grow")
    g.add_argument("--input", required=True)
    g.add_argument("--response", required=True)
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--min-leaf", type=int, default=1)
    g.add_argument("--out", default="tree.json")
    g.set_defaults(fn=cmd_tree_grow)
    r = tree_sub.add_parser("predict")
    r.add_argument("--tree", required=True)
    r.add_argument("--input", required=True)
    r.add_argument("--response", required=True)
    r.add_argument("--out", default="predictions.csv")
    r.set_defaults(fn=cmd_tree_predict)

    return parser


USAGE_ERRORS = (
    "DimensionMismatch", "NonFiniteData", "TiesInResponse", "SizeOutOfRange",
    "TooLarge", "TooSmall", "KTooLarge", "DomainMismatch", "MergeableSegments",
    "NotMonotone",
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SymrankError as exc:
        kind = type(exc).__name__
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if kind in USAGE_ERRORS else EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
