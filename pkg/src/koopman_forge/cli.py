"""Command-line front end.

Subcommands: realize, koopman, approx, rangedist, metric.  Inputs are
JSON files (schemas in the library modules) or builtin names; outputs
are aligned-text tables by default or JSON with --format json.  All
output is deterministic: identical inputs and flags give identical
bytes.

Exit codes: 0 success, 2 invalid input, 3 resource limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .core import (
    ResourceLimitError,
    StepFunction,
    ValidationError,
    decimal_str,
    dyadic_cell,
    dyadic_partition,
    format_rat,
    parse_rat,
    sqrt_float,
)
from .operators import (
    DoublyStochasticMatrix,
    MetricBasis,
    koopman_matrix,
    op_metric,
    range_distance_sq,
)
from .realize import approximation_sequence, realize_iet
from .transforms import builtin_map, map_from_json_obj

ENV_MAX_LEVEL = "KOOPMAN_FORGE_MAX_LEVEL"

BUILTIN_MAP_NAMES = ("identity", "halfswap", "doubling", "tent")


def _resolve_max_level(args: argparse.Namespace) -> int | None:
    if args.max_level is not None:
        return args.max_level
    env = os.environ.get(ENV_MAX_LEVEL)
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ValidationError(f"{ENV_MAX_LEVEL} must be an integer, got {env!r}")


def _load_json_file(path: str) -> object:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}")


def _load_map(spec: str):
    """A builtin name (identity, halfswap, doubling, tent, rotation:p/q)
    or a path to a map JSON file."""
    low = spec.strip().lower()
    if low in BUILTIN_MAP_NAMES or low.startswith("rotation:"):
        return builtin_map(low), low
    if not os.path.exists(spec):
        raise ValidationError(
            f"unknown map {spec!r}: not a builtin (identity, halfswap, "
            f"doubling, tent, rotation:p/q) and no such file"
        )
    return map_from_json_obj(_load_json_file(spec)), spec


def _load_function(spec: str) -> tuple[list[tuple[str, StepFunction]], bool]:
    """Resolve --function: 'rademacher', 'dyadic:j:n' (single indicator,
    1-based cell j at level n), 'dyadic:L' (family: all indicators up to
    level L), or a step-function JSON file.  Returns labeled functions
    and whether this is a family table."""
    low = spec.strip().lower()
    if low == "rademacher":
        return [("rademacher", StepFunction.rademacher())], False
    parts = low.split(":")
    if parts[0] == "dyadic" and len(parts) in (2, 3):
        try:
            numbers = [int(p) for p in parts[1:]]
        except ValueError:
            raise ValidationError(f"bad dyadic function spec {spec!r}")
        if len(numbers) == 2:
            j, n = numbers
            cell = dyadic_cell(j, n)
            return [(f"1_{cell}", StepFunction.indicator(cell))], False
        (level,) = numbers
        fam = []
        for lvl in range(level + 1):
            for cell in dyadic_partition(lvl):
                fam.append((f"1_{cell}", StepFunction.indicator(cell)))
        return fam, True
    f = StepFunction.from_json_obj(_load_json_file(spec))
    return [(spec, f)], False


def _write_json(path: str, obj: object) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}")


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    for row in [header] + rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def _print_json(obj: object) -> None:
    print(json.dumps(obj, indent=2))


# -- subcommands ------------------------------------------------------


def cmd_realize(args: argparse.Namespace) -> int:
    limit = _resolve_max_level(args)
    matrix = DoublyStochasticMatrix.from_json_obj(_load_json_file(args.matrix), limit)
    T = realize_iet(matrix, limit)
    extracted = koopman_matrix(T, matrix.n, limit)
    verdict = "exact" if extracted == matrix else "MISMATCH"
    if args.out:
        _write_json(args.out, T.to_json_obj())
    if args.format == "json":
        _print_json(
            {
                "command": "realize",
                "level": matrix.n,
                "pieces": len(T),
                "round_trip": verdict,
                "map": T.to_json_obj(),
            }
        )
    else:
        print(f"level: {matrix.n}")
        print(f"pieces: {len(T)}")
        print(f"round-trip: {verdict}")
        rows = [
            [str(p.source), str(p.image), format_rat(p.offset)] for p in T.pieces
        ]
        print(_table(["source", "image", "offset"], rows))
        if args.out:
            print(f"map written to {args.out}")
    return 0 if verdict == "exact" else 1


def cmd_koopman(args: argparse.Namespace) -> int:
    limit = _resolve_max_level(args)
    T, _ = _load_map(args.map)
    matrix = koopman_matrix(T, args.level, limit)
    if args.out:
        _write_json(args.out, matrix.to_json_obj())
    if args.format == "json":
        _print_json(
            {
                "command": "koopman",
                "level": matrix.n,
                "stochastic": "exact",
                "matrix": matrix.to_json_obj(),
            }
        )
    else:
        print(f"level: {matrix.n}")
        print("row sums: all 1 (exact)")
        print("column sums: all 1 (exact)")
        print("matrix (cell-overlap masses, normalized by 2^n):")
        rows = [[format_rat(e) for e in row] for row in matrix.entries]
        widths = [max(len(r[k]) for r in rows) for k in range(matrix.size)]
        for row in rows:
            print("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
        if args.out:
            print(f"matrix written to {args.out}")
    return 0


def cmd_approx(args: argparse.Namespace) -> int:
    limit = _resolve_max_level(args)
    if args.target not in ("doubling", "tent"):
        raise ValidationError(
            f"unknown builtin {args.target!r}: approx targets are doubling, tent"
        )
    S = builtin_map(args.target)
    basis = MetricBasis.dyadic(args.basis_level)
    steps = approximation_sequence(S, args.n_max, basis, limit)
    report = {
        "command": "approx",
        "target": args.target,
        "basis_functions": len(basis),
        "metric_tail_bound": format_rat(basis.tail_bound()),
        "rows": [
            {
                "n": s.n,
                "pieces": s.piece_count,
                "weak_defects": [format_rat(d) for d in s.weak_defects],
                "metric": s.metric.value,
            }
            for s in steps
        ],
    }
    if args.out:
        _write_json(args.out, report)
    if args.format == "json":
        _print_json(report)
    else:
        print(f"target: {args.target}")
        print(
            f"basis: dyadic indicators, levels 0..{args.basis_level} "
            f"({len(basis)} functions)"
        )
        rows = [
            [
                str(s.n),
                str(s.piece_count),
                " ".join(str(d) for d in s.weak_defects),
                decimal_str(s.metric.value),
            ]
            for s in steps
        ]
        print(_table(["n", "pieces", "weak-defect(m=1..n)", "metric"], rows))
        print(
            f"metric tail bound: {format_rat(basis.tail_bound())} "
            f"(= {decimal_str(basis.tail_bound())})"
        )
    if args.plot:
        _write_plot(args.plot, steps, args.target)
        if args.format != "json":
            print(f"plot written to {args.plot}")
    return 0


def _write_plot(path: str, steps, target: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [s.n for s in steps]
    ds = [s.metric.value for s in steps]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, ds, marker="o")
    ax.set_xlabel("dyadic level n")
    ax.set_ylabel(f"d(T_n, {target})")
    ax.set_title(f"Invertible approximants of the {target} map")
    ax.set_xticks(ns)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    try:
        fig.savefig(path)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}")
    finally:
        plt.close(fig)


def cmd_rangedist(args: argparse.Namespace) -> int:
    limit = _resolve_max_level(args)
    del limit  # no dyadic level involved; kept for flag uniformity
    T, map_label = _load_map(args.map)
    functions, is_family = _load_function(args.function)
    results = []
    for label, f in functions:
        d_sq = range_distance_sq(T, f)
        results.append((label, d_sq, sqrt_float(d_sq)))
    if args.format == "json":
        _print_json(
            {
                "command": "rangedist",
                "map": map_label,
                "rows": [
                    {"function": label, "dist_sq": format_rat(d_sq), "dist": d}
                    for label, d_sq, d in results
                ],
            }
        )
    elif is_family:
        print(f"map: {map_label}")
        rows = [
            [label, format_rat(d_sq), decimal_str(d)]
            for label, d_sq, d in results
        ]
        print(_table(["function", "dist^2", "dist"], rows))
    else:
        label, d_sq, d = results[0]
        print(f"map: {map_label}")
        print(f"function: {label}")
        print(f"dist^2: {format_rat(d_sq)} (= {decimal_str(d_sq)})")
        print(f"dist: {decimal_str(d)}")
    return 0


def cmd_metric(args: argparse.Namespace) -> int:
    limit = _resolve_max_level(args)
    del limit
    A, label_a = _load_map(args.map_a)
    B, label_b = _load_map(args.map_b)
    basis = MetricBasis.dyadic(args.basis_level)
    report = op_metric(A, B, basis)
    if args.format == "json":
        _print_json(
            {
                "command": "metric",
                "maps": [label_a, label_b],
                "terms": [
                    {"j": t.index, "ratio_sq": format_rat(t.ratio_sq), "value": t.value}
                    for t in report.terms
                ],
                "value": report.value,
                "tail_bound": format_rat(report.tail_bound),
            }
        )
    else:
        print(f"maps: {label_a} vs {label_b}")
        rows = [
            [
                str(t.index),
                f"2^-{t.index}",
                format_rat(t.ratio_sq),
                decimal_str(t.value),
            ]
            for t in report.terms
        ]
        print(_table(["j", "weight", "ratio^2", "term"], rows))
        print(f"metric: {decimal_str(report.value)}")
        print(
            f"tail bound: {format_rat(report.tail_bound)} "
            f"(= {decimal_str(report.tail_bound)})"
        )
    return 0


# -- parser -----------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--format",
        choices=("table", "json"),
        default="table",
        help="output format (default: table)",
    )
    sub.add_argument(
        "--max-level",
        type=int,
        default=None,
        metavar="N",
        help=f"resource limit on dyadic levels (default 16; env {ENV_MAX_LEVEL})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopman-forge",
        description=(
            "Exact Koopman block matrices of measure-preserving maps of "
            "[0,1), invertible realizations of doubly stochastic matrices, "
            "and operator-metric diagnostics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "realize",
        help="turn a doubly stochastic matrix into an invertible interval exchange",
    )
    p.add_argument("matrix", help="path to matrix JSON {'n': ..., 'entries': [[...]]}")
    p.add_argument("--out", metavar="PATH", help="write the map JSON here")
    _add_common(p)
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("koopman", help="extract the dyadic block matrix of a map")
    p.add_argument("map", help="map JSON file or builtin name")
    p.add_argument(
        "--level", "-n", type=int, required=True, help="dyadic level n (2^n cells)"
    )
    p.add_argument("--out", metavar="PATH", help="write the matrix JSON here")
    _add_common(p)
    p.set_defaults(func=cmd_koopman)

    p = sub.add_parser(
        "approx",
        help="realize the level-n matrices of a builtin map and report convergence",
    )
    p.add_argument("target", help="builtin target map: doubling or tent")
    p.add_argument("--n-max", type=int, required=True, help="largest dyadic level")
    p.add_argument(
        "--basis-level",
        type=int,
        default=5,
        help="metric basis: dyadic indicators up to this level (default 5)",
    )
    p.add_argument("--out", metavar="PATH", help="write the JSON report here")
    p.add_argument("--plot", metavar="PATH", help="write a metric-vs-n plot here")
    _add_common(p)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser(
        "rangedist",
        help="distance from a test function to the range of a Koopman operator",
    )
    p.add_argument("map", help="map JSON file or builtin name")
    p.add_argument(
        "--function",
        required=True,
        help=(
            "step function: JSON file, 'rademacher', 'dyadic:j:n' (cell j "
            "of level n, 1-based), or 'dyadic:L' for the whole family up "
            "to level L"
        ),
    )
    _add_common(p)
    p.set_defaults(func=cmd_rangedist)

    p = sub.add_parser(
        "metric", help="operator metric between the Koopman operators of two maps"
    )
    p.add_argument("map_a", help="map JSON file or builtin name")
    p.add_argument("map_b", help="map JSON file or builtin name")
    p.add_argument(
        "--basis-level",
        type=int,
        default=5,
        help="metric basis: dyadic indicators up to this level (default 5)",
    )
    _add_common(p)
    p.set_defaults(func=cmd_metric)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
