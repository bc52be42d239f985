"""Command-line interface.

Subcommands: ``analyze`` (one dataset, one procedure), ``simulate`` (Monte
Carlo sweeps to CSV), ``check`` (verification suites), and ``graph-info``
(structure summary of an edge list).  Exit codes: 0 success, 2 input error,
3 check failure.
"""

from __future__ import annotations

import argparse
import inspect
import json
import sys

from . import io as fio
from .checks import SUITES, UnknownSuiteError, run_suite
from .dag import build_dag, compute_depths, group_index
from .simulate import (GRAPH_FAMILIES, SIGNAL_SETUPS, MethodSpec, SimConfig,
                       run_simulation)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CHECK = 3


def _add_analysis_knobs(sp):
    sp.add_argument("--q", type=float, default=0.05, help="target FDR level")
    sp.add_argument("--lambda-policy", default="fixed:0.5",
                    help='"fixed:<v>" or "q" (sets lambda = q)')
    sp.add_argument("--c", type=int, default=1,
                    help="group-size threshold for within-group estimation")
    sp.add_argument("--dw", default="auto",
                    help='"auto", "none", or comma list of depths')


def _parse_dw(text):
    if text in ("auto", "none"):
        return text
    try:
        return frozenset(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad depth list {text!r}") from None


def _parse_methods(text):
    specs = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            proc, filt = tok.split(":", 1)
        else:
            proc, filt = tok, "trivial"
        specs.append(MethodSpec(proc, filt))
    if not specs:
        raise argparse.ArgumentTypeError("no methods given")
    return tuple(specs)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="focusfdr",
        description="FDR-controlling multiple testing on DAG-structured "
                    "hypotheses, with data-adaptive weights, filters, and "
                    "p-value smoothing.")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run one procedure on an edge list "
                                       "and a p-value file")
    a.add_argument("--dag", required=True, help="edge CSV (parent,child)")
    a.add_argument("--pvalues", required=True,
                   help="node,p CSV (item,p in intersection mode)")
    a.add_argument("--method", default="wfbh", choices=fio.PROCEDURES)
    a.add_argument("--filter", default="ds",
                   help='"trivial" | "ds" | "outer" | "screen:<s>"')
    _add_analysis_knobs(a)
    a.add_argument("--smoothing", default=None,
                   help="combiner name for all-descendant smoothing "
                        "(fisher|stouffer|simes|tippett|orderstat:i|bonferroni)")
    a.add_argument("--reshaping", default=None, choices=["by"],
                   help="apply the harmonic-sum reshaping")
    a.add_argument("--items", default=None,
                   help="node,item annotation CSV (intersection-DAG mode)")
    a.add_argument("--yk-divisor", type=float, default=2.88)
    a.add_argument("--json-out", default=None, help="report path (default stdout)")
    a.add_argument("--csv-out", default=None, help="discoveries CSV path")

    s = sub.add_parser("simulate", help="Monte Carlo FDR/power sweep")
    s.add_argument("--family", default=None, choices=GRAPH_FAMILIES,
                   help="graph family (default wide-tree)")
    s.add_argument("--setup", default=None, choices=SIGNAL_SETUPS,
                   help="signal setup (default global)")
    s.add_argument("--p", default=None,
                   help="comma list of non-null leaf proportions "
                        "(default 0.1,0.3,0.5)")
    s.add_argument("--rho", type=float, default=None,
                   help="equicorrelation of the test statistics (default 0)")
    s.add_argument("--q", type=float, default=None,
                   help="target FDR level (default 0.05)")
    s.add_argument("--lambda-policy", default=None,
                   help='"fixed:<v>" or "q" (default fixed:0.5)')
    s.add_argument("--c", type=int, default=None,
                   help="group-size threshold (default 1)")
    s.add_argument("--dw", default=None,
                   help='"auto", "none", or comma list of depths')
    s.add_argument("--reps", type=int, default=None,
                   help="replications per cell (default 200)")
    s.add_argument("--seed", type=int, default=None, help="default 0")
    s.add_argument("--smoothing", default=None, help="combiner name")
    s.add_argument("--methods", default=None,
                   help='comma list of procedure[:filter] entries '
                        "(default wfbh:ds,fbh:ds)")
    s.add_argument("--yk-divisor", type=float, default=None)
    s.add_argument("--config", default=None,
                   help="JSON file of simulation fields (flags override)")
    s.add_argument("--out", default=None, help="CSV path (default stdout)")

    c = sub.add_parser("check", help="run a verification suite")
    c.add_argument("suite", help=f"one of {', '.join(sorted(SUITES))}")
    c.add_argument("--reps", type=int, default=None,
                   help="Monte Carlo replications (suite default otherwise)")
    c.add_argument("--trials", type=int, default=None,
                   help="random trials (suite default otherwise)")
    c.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("graph-info", help="structure summary of an edge list")
    g.add_argument("--dag", required=True)
    g.add_argument("--json-out", default=None)
    return parser


def _cmd_analyze(args):
    request = fio.AnalysisRequest(
        dag_file=args.dag, pvalues_file=args.pvalues, method=args.method,
        filter=args.filter, q=args.q, lambda_policy=args.lambda_policy,
        c=args.c, dw=_parse_dw(args.dw), combiner=args.smoothing,
        reshaping=args.reshaping, items_file=args.items,
        yk_divisor=args.yk_divisor)
    report = fio.analyze(request)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fio.write_report_json(report, fh)
    else:
        fio.write_report_json(report, sys.stdout)
    if args.csv_out:
        with open(args.csv_out, "w", newline="", encoding="utf-8") as fh:
            fio.write_discoveries_csv(report, fh)
    return EXIT_OK


def _cmd_simulate(args):
    merged = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            merged = json.load(fh)
        if "methods" in merged:
            merged["methods"] = tuple(MethodSpec(**m) if isinstance(m, dict)
                                      else MethodSpec(*m)
                                      for m in merged["methods"])
        if "p_nonnull" in merged:
            merged["p_nonnull"] = tuple(merged["p_nonnull"])
        if "dw" in merged and not isinstance(merged["dw"], str):
            merged["dw"] = frozenset(merged["dw"])
    flags = {
        "family": args.family, "setup": args.setup,
        "p_nonnull": (None if args.p is None else
                      tuple(float(t) for t in args.p.split(",") if t.strip())),
        "rho": args.rho, "q": args.q, "lambda_policy": args.lambda_policy,
        "c": args.c, "dw": None if args.dw is None else _parse_dw(args.dw),
        "n_reps": args.reps, "seed": args.seed, "smoothing": args.smoothing,
        "methods": (None if args.methods is None
                    else _parse_methods(args.methods)),
        "yk_divisor": args.yk_divisor,
    }
    merged.update({k: v for k, v in flags.items() if v is not None})
    config = SimConfig(**merged)
    summary = run_simulation(config)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            fio.write_simulation_csv(summary, fh)
    else:
        fio.write_simulation_csv(summary, sys.stdout)
    return EXIT_OK


def _cmd_check(args):
    kwargs = {"seed": args.seed}
    if args.reps is not None:
        kwargs["n_mc"] = args.reps
    if args.trials is not None:
        kwargs["trials"] = args.trials
    fn = SUITES.get(args.suite)
    if fn is None:
        raise UnknownSuiteError(f"unknown suite {args.suite!r}; "
                                f"choose from {sorted(SUITES)}")
    accepted = set(inspect.signature(fn).parameters)
    kwargs = {k: v for k, v in kwargs.items() if k in accepted}
    ok, lines = run_suite(args.suite, **kwargs)
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {args.suite}")
    for line in lines:
        print(f"  {line}")
    return EXIT_OK if ok else EXIT_CHECK


def _cmd_graph_info(args):
    names, _, edges = fio.read_edge_csv(args.dag)
    dag = build_dag(len(names), edges)
    depths = compute_depths(dag)
    groups = group_index(dag, depths)
    info = fio.structure_summary(dag, depths, groups)
    text = json.dumps(info, indent=2) + "\n"
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"analyze": _cmd_analyze, "simulate": _cmd_simulate,
                "check": _cmd_check, "graph-info": _cmd_graph_info}
    try:
        return handlers[args.command](args)
    except UnknownSuiteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
