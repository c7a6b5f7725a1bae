import argparse
import csv
import json
import sys
from typing import TYPE_CHECKING, Any, Dict, List, Optional

from . import __version__
from .boardgame import (
    CollapseMap,
    EchelonClass,
    EchelonForm,
    applicable_moves,
    class_table,
    enumerate_collapse_maps,
    partition_classes,
    reduce_to_echelon,
)
from .config import CHECK_NAMES, RunConfig, load_config
from .errors import ConfigError, GPBoardError
from .harness import Report, run_suite
from .kernels import assemble_jk, substitute_psi_tilde
from .ledger import critical_horizon, final_bound, ledger_for
from .logutil import set_verbosity
from .sinks import FORMATS, emit
from .trees import build_forest, extract_labelings

if TYPE_CHECKING:  # pragma: no cover - typing only
    from rich.console import Console as _Console
    from rich.text import Text as _Text
else:  # runtime optional import
    try:  # noqa: SIM105
        from rich.console import Console as _Console  # type: ignore
        from rich.text import Text as _Text  # type: ignore
    except Exception:  # noqa: BLE001
        _Console = None  # type: ignore
        _Text = None  # type: ignore

ConsoleType = Optional["_Console"]

VERIFY_CHECKS = ("moves", "resum", "factorize", "mild", "definetti", "trace")


def _err(message: str) -> None:
    print(f"[gpboard] {message}", file=sys.stderr)


def _maybe_console(args: argparse.Namespace) -> ConsoleType:
    if getattr(args, "no_color", False):
        return None
    if _Console is None:
        return None
    # force_terminal ensures ANSI codes even when output is being captured (for tests)
    return _Console(color_system="truecolor", stderr=False, force_terminal=True)


def _parse_map(args: argparse.Namespace) -> CollapseMap:
    return CollapseMap.parse(args.k, args.rho)


def _write_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as jf:
        json.dump(obj, jf, indent=2)


def cmd_enumerate(args: argparse.Namespace) -> int:
    rows: List[Dict[str, Any]] = []
    console = _maybe_console(args)
    for m in enumerate_collapse_maps(args.k, args.r, args.cap):
        form, trace = reduce_to_echelon(m)
        rows.append(
            {
                "rho": list(m.rho),
                "echelon": list(form.rho),
                "moves": list(trace.moves),
                "pi": list(trace.pi),
                "applicable": applicable_moves(m),
            }
        )
    if args.json:
        _write_json(args.json, rows)
        print(f"Wrote JSON {args.json} ({len(rows)} maps)")
        return 0
    for row in rows:
        if console is not None:
            text = _Text()
            text.append(f"rho={row['rho']} ", style="cyan")
            text.append(f"-> {row['echelon']} ", style="green")
            text.append(f"pi={tuple(row['pi'])} moves={row['moves']}", style="dim")
            console.print(text)
        else:
            print(
                f"rho={row['rho']} -> {row['echelon']} "
                f"pi={tuple(row['pi'])} moves={row['moves']}"
            )
    print(f"{len(rows)} maps")
    return 0


def _classes_json(k: int, r: int, classes: Dict[EchelonForm, EchelonClass]) -> Dict[str, Any]:
    return {
        "k": k,
        "r": r,
        "maps": sum(len(cls) for cls in classes.values()),
        "classes": len(classes),
        "bound": 2 ** (k + r),
        "forms": [
            {
                "rho": list(form.rho),
                "size": len(cls),
                "members": [
                    {"rho": list(mb.source.rho), "pi": list(mb.pi), "moves": list(mb.moves)}
                    for mb in cls.members
                ],
            }
            for form, cls in classes.items()
        ],
    }


def cmd_classes(args: argparse.Namespace) -> int:
    if (args.k is None) != (args.r is None):
        _err("--k and --r must be given together")
        return 2
    if args.k is not None:
        classes = partition_classes(args.k, args.r, args.cap)
        if args.json:
            _write_json(args.json, _classes_json(args.k, args.r, classes))
            print(f"Wrote JSON {args.json} ({len(classes)} classes)")
            return 0
        for form, cls in classes.items():
            perms = " ".join("".join(str(p) for p in pi) for pi in cls.perms)
            print(f"{list(form.rho)}  members={len(cls)}  perms={perms}")
        print(f"{len(classes)} classes, bound {2 ** (args.k + args.r)}")
        return 0
    rows = class_table(args.k_max, args.r_max, args.cap)
    header = ["k", "r", "maps", "classes", "bound"]
    if args.json:
        _write_json(args.json, {"rows": [dict(zip(header, row)) for row in rows]})
        print(f"Wrote JSON {args.json} ({len(rows)} rows)")
        return 0
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        print(f"Wrote {args.out} ({len(rows)} rows)")
        return 0
    print("   k    r     maps  classes    bound")
    for row in rows:
        print("".join(f"{value:>{w}}" for value, w in zip(row, (4, 5, 9, 9, 9))))
    return 0


def cmd_trees(args: argparse.Namespace) -> int:
    m = _parse_map(args)
    forest = build_forest(m)
    if args.format == "dot":
        text = forest.to_dot()
    elif args.format == "json":
        labelings = extract_labelings(forest)
        obj = {
            "k": m.k,
            "rho": list(m.rho),
            "distinguished_tree": forest.distinguished_tree,
            "trees": [
                {
                    "j": j,
                    "bare": j not in labelings,
                    **(
                        {
                            "m": labelings[j].m,
                            "sigma": list(labelings[j].sigma),
                            "columns": list(labelings[j].time_binding),
                            "kept": list(labelings[j].kept),
                            "contracted": list(labelings[j].contracted),
                            "kappa_minus": list(labelings[j].kappa_minus),
                            "kappa_plus": list(labelings[j].kappa_plus),
                        }
                        if j in labelings
                        else {}
                    ),
                }
                for j in range(1, m.k + 1)
            ],
        }
        text = json.dumps(obj, indent=2) + "\n"
    else:
        text = "\n".join(forest.adjacency_lines()) + "\n"
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(forest.to_dot())
        print(f"Wrote {args.dot}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"Wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_expand(args: argparse.Namespace) -> int:
    m = _parse_map(args)
    expansion = assemble_jk(m)
    out: List[Dict[str, Any]] = []
    for factor in expansion.factors:
        if args.tree is not None and factor.j != args.tree:
            continue
        expr = substitute_psi_tilde(factor.expr) if args.substitute else factor.expr
        thetas = {str(alpha): len(theta) for alpha, theta in sorted(factor.thetas.items())}
        out.append(
            {"tree": factor.j, "m": factor.m, "theta_terms": thetas, "terms": expr.to_rows()}
        )
    if args.json:
        _write_json(args.json, {"k": m.k, "rho": list(m.rho), "trees": out})
        print(f"Wrote JSON {args.json} ({len(out)} trees)")
        return 0
    for tree in out:
        print(f"tree {tree['tree']} (m={tree['m']}, {len(tree['terms'])} terms)")
        for row in tree["terms"]:
            sign = "+" if row["sign"] > 0 else "-"
            print(f"  {sign} {row['left']}  x  conj[{row['right']}]")
    return 0


def cmd_ledger(args: argparse.Namespace) -> int:
    T = args.T if args.T is not None else 0.9 * critical_horizon(args.M, args.C)
    obj: Dict[str, Any] = {"T": T, "M": args.M, "C": args.C}
    if args.rho:
        ledger = ledger_for(_parse_map(args))
        closed = ledger.closing_integral()
        obj["trees"] = ledger.rows()
        obj["shape"] = closed.shape()
        obj["value"] = closed.value(T, args.M, args.C)
    obj["final_bound"] = [
        {"r": r, "bound": final_bound(args.k, r, T, args.M, args.C)} for r in range(args.r + 1)
    ]
    if args.json:
        _write_json(args.json, obj)
        print(f"Wrote JSON {args.json}")
        return 0
    for row in obj.get("trees", []):
        print(
            f"tree {row['tree']:<5} {row['kind']:<13} 2^{row['pow2']} C^{row['powC']} "
            f"T^{row['powT']} M^{row['phi_exp']}"
        )
    if "shape" in obj:
        print(f"closed: {obj['shape']} = {obj['value']:.6g}")
    print(f"final bound (k={args.k}, T={T:.6g}, M={args.M}, C={args.C}):")
    for row in obj["final_bound"]:
        print(f"  r={row['r']:<3} {row['bound']:.6e}")
    return 0


def _load_cfg(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    return cfg


def _finish(report: Report, cfg: RunConfig) -> int:
    if cfg.json_out:
        with open(cfg.json_out, "w", encoding="utf-8") as fh:
            emit(report, "json", fh)
    if cfg.csv_out:
        with open(cfg.csv_out, "w", newline="", encoding="utf-8") as fh:
            emit(report, "csv", fh)
    return 0 if report.passed else 1


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    cfg.checks = [args.check]
    if args.k is not None or args.r is not None:
        k = args.k if args.k is not None else 1
        r = args.r if args.r is not None else 3
        cfg.move_cases = [[k, r]]
        cfg.resum_cases = [[k, r]]
        cfg.factorize_k_max, cfg.factorize_r_max = k, r
    if args.n is not None:
        cfg.grid.n = args.n
        cfg.trace_n = args.n
    if args.d is not None:
        cfg.grid.d = args.d
    if args.t is not None:
        cfg.t = args.t
    if args.json:
        cfg.json_out = args.json
    report = run_suite(cfg)
    emit(report, "text", sys.stdout, _maybe_console(args))
    rc = _finish(report, cfg)
    if args.json:
        print(f"Wrote JSON {args.json}")
    return rc


def cmd_suite(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    if args.check:
        cfg.checks = list(args.check)
    report = run_suite(cfg)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            emit(report, args.format, fh)
        print(f"Wrote {args.out} ({len(report.records)} checks)")
    else:
        console = _maybe_console(args) if args.format == "text" else None
        emit(report, args.format, sys.stdout, console)
    return _finish(report, cfg)


def _add_map_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, required=True, help="Number of root particles")
    p.add_argument("--rho", required=True, help="Comma-separated contraction rows, e.g. 2,2,3,5")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpboard", description="Boardgame combinatorics and Duhamel expansion checks."
    )
    # Global --version (argparse will exit 0 before validating subcommands)
    parser.add_argument(
        "--version",
        action="version",
        version=f"gpboard {__version__}",
        help="Show version and exit",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging (-vv)")
    parser.add_argument("--no-color", action="store_true", help="Disable rich color output")
    sub = parser.add_subparsers(dest="cmd")

    enum_parser = sub.add_parser("enumerate", help="List collapse maps with their echelon forms")
    enum_parser.add_argument("--k", type=int, required=True)
    enum_parser.add_argument("--r", type=int, required=True)
    enum_parser.add_argument("--cap", type=int, default=10**7, help="Refuse larger enumerations")
    enum_parser.add_argument("--json", help="Write the listing as JSON to this path")
    enum_parser.set_defaults(func=cmd_enumerate)

    classes_parser = sub.add_parser("classes", help="Echelon classes and the class-count table")
    classes_parser.add_argument("--k", type=int, help="List classes of one (k, r) pair")
    classes_parser.add_argument("--r", type=int)
    classes_parser.add_argument("--k-max", type=int, default=3)
    classes_parser.add_argument("--r-max", type=int, default=5)
    classes_parser.add_argument("--cap", type=int, default=10**7)
    classes_parser.add_argument("--out", help="Write the table as CSV")
    classes_parser.add_argument("--json", help="Write classes (or the table) as JSON to this path")
    classes_parser.set_defaults(func=cmd_classes)

    trees_parser = sub.add_parser("trees", help="Contraction forest of a collapse map")
    _add_map_args(trees_parser)
    trees_parser.add_argument("--format", choices=["text", "dot", "json"], default="text")
    trees_parser.add_argument("--out", help="Write to this path instead of stdout")
    trees_parser.add_argument("--dot", help="Also write the Graphviz rendering to this path")
    trees_parser.set_defaults(func=cmd_trees)

    expand_parser = sub.add_parser("expand", help="Symbolic kernel of every tree")
    _add_map_args(expand_parser)
    expand_parser.add_argument("--tree", type=int, help="Only this tree")
    expand_parser.add_argument(
        "--substitute", action="store_true", help="Replace psi~ by the cubic product"
    )
    expand_parser.add_argument("--json", help="Write term rows as JSON to this path")
    expand_parser.set_defaults(func=cmd_expand)

    ledger_parser = sub.add_parser("ledger", help="Bound ledger and the closing bound")
    ledger_parser.add_argument("--k", type=int, required=True)
    ledger_parser.add_argument("--r", type=int, default=10, help="Tabulate the bound up to r")
    ledger_parser.add_argument("--rho", help="Also show the per-tree ledger of this map")
    ledger_parser.add_argument("--T", type=float, help="Horizon (default 0.9/(2 C M^4))")
    ledger_parser.add_argument("--M", type=float, default=1.0)
    ledger_parser.add_argument("--C", type=float, default=1.0)
    ledger_parser.add_argument("--json", help="Write the ledger as JSON to this path")
    ledger_parser.set_defaults(func=cmd_ledger)

    verify_parser = sub.add_parser("verify", help="Run one numerical certification")
    verify_parser.add_argument("--check", choices=VERIFY_CHECKS, required=True)
    verify_parser.add_argument("--k", type=int)
    verify_parser.add_argument("--r", type=int)
    verify_parser.add_argument("--n", type=int, help="Grid points per axis")
    verify_parser.add_argument("--d", type=int, help="Spatial dimension")
    verify_parser.add_argument("--t", type=float, help="Time horizon")
    verify_parser.add_argument("--seed", type=int)
    verify_parser.add_argument("--config", help="JSON config (default: $GPBOARD_CONFIG)")
    verify_parser.add_argument("--json", help="Write the report as JSON to this path")
    verify_parser.set_defaults(func=cmd_verify)

    suite_parser = sub.add_parser("suite", help="Run the configured verification suite")
    suite_parser.add_argument("--config", help="JSON config (default: $GPBOARD_CONFIG)")
    suite_parser.add_argument(
        "--check", action="append", choices=CHECK_NAMES, help="Run only this check (repeatable)"
    )
    suite_parser.add_argument("--workers", type=int, help="Run checks on N threads")
    suite_parser.add_argument("--seed", type=int)
    suite_parser.add_argument("--format", choices=FORMATS, default="text")
    suite_parser.add_argument("--out", help="Write the report to this path")
    suite_parser.set_defaults(func=cmd_suite)

    # Simple 'version' subcommand for shells/users preferring explicit command
    version_parser = sub.add_parser("version", help="Show version and exit")
    version_parser.set_defaults(func=lambda _: (print(f"gpboard {__version__}"), 0)[1])

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_verbosity(args.verbose)
    if not getattr(args, "cmd", None):  # No subcommand provided
        parser.print_help()
        return 0
    try:
        result: int = args.func(args)
        return result
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return 2
    except (GPBoardError, ValueError) as exc:
        _err(f"error: {exc}")
        return 2
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
