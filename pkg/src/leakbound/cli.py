"""Command-line interface.

    leakbound validate NET.json
    leakbound measures NET.json --node Y1
    leakbound bound NET.json --targets Y1,Y2 [--source X]
                    [--method recursive|coupling|doeblin] [--compare-exact]
                    [--csv OUT.csv]
    leakbound couple PMFS.json --mode lp|n4|simul [--diag]
    leakbound sweep NET.json --param d --range 0:1/2:1/8 --targets Y2
                    [--source X] [--out OUT.csv]

Exit codes: 0 success, 1 validation or precondition failure, 2 capacity
refused, 3 I/O failure. Rationals print as num/den; logarithms with 12
significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

from . import bayesnet, bounds, netfile
from .couplings import (
    build_n4_coupling,
    n4_condition,
    union_mass,
    verify_intersection_property,
)
from .errors import (
    CapacityError,
    LeakboundError,
    NetworkFormatError,
    PreconditionError,
)
from .lp import min_union_coupling, min_union_coupling_diag
from .measures import (
    DiscreteChannel,
    format_fraction,
    log_fraction,
    measure_set,
    tau_max,
)
from .simultaneous import build_simultaneous_coupling, f_quantity, y_union_mass

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CAPACITY = 2
EXIT_IO = 3

REPORT_COLUMNS = [
    "node",
    "tau",
    "tau_max",
    "tau_max2",
    "bound_method",
    "bound_value",
    "exact_value",
    "gap",
    "preconditions",
]


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _load_net(path: str, source: str | None):
    net = netfile.parse_network(_read(path))
    if source is not None:
        if source not in net.by_id:
            raise NetworkFormatError(f"--source {source!r} is not a node")
        net = net.with_source(source)
    problems = bayesnet.validate(net)
    if problems:
        raise NetworkFormatError("; ".join(problems))
    return net


def _fmt_log(value: float) -> str:
    return f"{value:.12g}"


def cmd_validate(args) -> int:
    try:
        net = netfile.parse_network(_read(args.path))
    except NetworkFormatError as err:
        print(f"parse error: {err}")
        return EXIT_INVALID
    problems = bayesnet.validate(net)
    if problems:
        for p in problems:
            print(p)
        return EXIT_INVALID
    print(f"ok: {len(net.nodes)} nodes, source {net.source}")
    return EXIT_OK


def cmd_measures(args) -> int:
    net = _load_net(args.path, None)
    if args.node not in net.by_id:
        print(f"unknown node {args.node!r}")
        return EXIT_INVALID
    if args.node == net.source:
        print("the source node carries no distribution")
        return EXIT_INVALID
    channel = net.cpt(args.node)
    ms = measure_set(channel)
    print(f"node {args.node} ({channel.n} rows, {len(channel.output_alphabet)} outputs)")
    print(f"tau       = {format_fraction(ms.tau)}")
    print(f"tau_max   = {format_fraction(ms.tau_max)}")
    if ms.tau_max2 is None:
        print("tau_max2  = undefined (single row)")
    else:
        print(f"tau_max2  = {format_fraction(ms.tau_max2)}")
    print(f"leakage   = {_fmt_log(ms.leakage_log)}")
    return EXIT_OK


def _measure_rows(net) -> list[dict]:
    rows = []
    for node in net.nodes:
        if node.node_id == net.source or node.rows is None:
            continue
        ms = measure_set(net.cpt(node.node_id))
        rows.append(
            {
                "node": node.node_id,
                "tau": format_fraction(ms.tau),
                "tau_max": format_fraction(ms.tau_max),
                "tau_max2": "" if ms.tau_max2 is None else format_fraction(ms.tau_max2),
                "bound_method": "",
                "bound_value": "",
                "exact_value": "",
                "gap": "",
                "preconditions": "",
            }
        )
    return rows


def _bound_rows(report: bounds.BoundReport) -> list[dict]:
    rows = []
    check_text = "; ".join(
        f"{name}={value}:{'pass' if ok else 'FAIL'}"
        for name, value, ok in report.precondition_log
    )
    for method, value in (
        ("coupling", report.coupling_bound_value),
        ("doeblin", report.doeblin_bound_value),
        ("subadditivity", report.subadditivity_value),
    ):
        rows.append(
            {
                "node": "",
                "tau": "",
                "tau_max": "",
                "tau_max2": "",
                "bound_method": method,
                "bound_value": "inapplicable" if value is None else format_fraction(value),
                "exact_value": format_fraction(report.exact_tau_max),
                "gap": "" if value is None else format_fraction(value - report.exact_tau_max),
                "preconditions": check_text,
            }
        )
    return rows


def cmd_bound(args) -> int:
    net = _load_net(args.path, args.source)
    targets = [t for t in args.targets.split(",") if t]
    report = bounds.query_report(
        net, targets, method=args.method, max_states=args.max_states
    )

    rows = _measure_rows(net) + _bound_rows(report)
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=REPORT_COLUMNS)
    writer.writeheader()
    writer.writerows(rows)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as handle:
            handle.write(out.getvalue())
    else:
        sys.stdout.write(out.getvalue())

    wanted = {
        "recursive": ("coupling", "doeblin", "subadditivity"),
        "coupling": ("coupling", "subadditivity"),
        "doeblin": ("doeblin", "subadditivity"),
    }[args.method]
    shown = {
        "coupling": ("coupling bound", report.coupling_bound_value),
        "doeblin": ("doeblin bound", report.doeblin_bound_value),
        "subadditivity": ("subadditivity", report.subadditivity_value),
    }

    print(f"query: {report.query}")
    print(f"exact tau_max      = {format_fraction(report.exact_tau_max)}")
    print(f"exact leakage      = {_fmt_log(log_fraction(report.exact_tau_max))}")
    inapplicable = False
    for key in wanted:
        label, value = shown[key]
        if value is None:
            print(f"{label:<18} = inapplicable")
            inapplicable = True
        else:
            print(
                f"{label:<18} = {format_fraction(value)}"
                f" (log {_fmt_log(log_fraction(value))})"
            )
    if report.log_form_bound is not None:
        print(f"log-form bound     = {_fmt_log(report.log_form_bound)}")
    for name, value, ok in report.precondition_log:
        print(f"precondition {name}: {value} [{'pass' if ok else 'FAIL'}]")

    if args.compare_exact:
        sound = all(
            value is None or value >= report.exact_tau_max
            for value in (
                report.coupling_bound_value,
                report.doeblin_bound_value,
                report.subadditivity_value,
            )
        )
        print(f"soundness: {'OK' if sound else 'VIOLATED'}")
        if not sound:
            return EXIT_INVALID
    return EXIT_INVALID if inapplicable else EXIT_OK


def cmd_couple(args) -> int:
    items = netfile.parse_pmf_file(_read(args.path))

    if args.mode == "simul":
        from .simultaneous import JointPmf

        if not items or not isinstance(items[0], JointPmf):
            print('simul mode needs a "joints" document')
            return EXIT_INVALID
        coupling = build_simultaneous_coupling(items, max_states=args.max_states)
        print(f"simultaneous coupling of {coupling.arity} joint PMFs")
        print(f"c_XY = {format_fraction(coupling.c_xy)}; c_Y = {format_fraction(coupling.c_y)}")
        target = tau_max(DiscreteChannel([s.y_marginal() for s in items]))
        got = y_union_mass(coupling)
        print(f"y-union mass = {format_fraction(got)}; tau_max = {format_fraction(target)}"
              f" [{'OK' if got == target else 'MISMATCH'}]")
        print(f"f quantity   = {format_fraction(f_quantity(coupling))}")
        print(f"support size = {len(coupling.mass)} (joint marginals verified exactly)")
        if args.dump:
            for (xs, ys), q in sorted(coupling.mass.items()):
                print(f"x={','.join(map(str, xs))} y={','.join(map(str, ys))} : {format_fraction(q)}")
        return EXIT_OK

    from .measures import Pmf

    if not items or not isinstance(items[0], Pmf):
        print(f'{args.mode} mode needs a "pmfs" document')
        return EXIT_INVALID
    channel = DiscreteChannel(items)
    target = tau_max(channel)

    if args.mode == "lp":
        solver = min_union_coupling_diag if args.diag else min_union_coupling
        result = solver(items, max_variables=args.max_states)
        coupling = result.witness
        print(f"LP optimum  = {format_fraction(result.optimal_value)}")
        print(f"tau_max     = {format_fraction(target)}")
        print("achieves tau_max" if result.achieves_tau_max
              else "optimum exceeds tau_max (no minimal coupling at this arity)")
    elif args.mode == "n4":
        holds, ing = n4_condition(items)
        print(f"condition slack = {format_fraction(ing.condition_slack())}"
              f" [{'holds' if holds else 'fails'}]")
        if not holds:
            print(f"tau_max2 = {format_fraction(ing.tau_max2)}; no construction")
            return EXIT_INVALID
        coupling = build_n4_coupling(items)
        got = union_mass(coupling)
        print("marginals OK (verified exactly)")
        print(f"union mass = {format_fraction(got)}; tau_max = {format_fraction(target)}"
              f" [{'OK' if got == target else 'MISMATCH'}]")
        ok = verify_intersection_property(coupling, items)
        print(f"intersection property: {'OK' if ok else 'VIOLATED'}")
    else:
        print(f"unknown mode {args.mode!r}")
        return EXIT_INVALID

    print(f"support size = {len(coupling.mass)}")
    if args.dump:
        for tup, q in coupling.sorted_items():
            print(f"{','.join(map(str, tup))} : {format_fraction(q)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    text = _read(args.path)
    values = netfile.parse_range(args.range)
    targets = [t for t in args.targets.split(",") if t]

    rows = []
    for value in values:
        net = netfile.parse_network(text, bindings={args.param: value})
        if args.source is not None:
            net = net.with_source(args.source)
        problems = bayesnet.validate(net)
        if problems:
            raise NetworkFormatError(
                f"{args.param}={value}: " + "; ".join(problems)
            )
        report = bounds.query_report(
            net, targets, method="recursive", max_states=args.max_states
        )
        rows.append(
            {
                args.param: str(value),
                "exact": format_fraction(report.exact_tau_max),
                "coupling_bound": ""
                if report.coupling_bound_value is None
                else format_fraction(report.coupling_bound_value),
                "doeblin_bound": ""
                if report.doeblin_bound_value is None
                else format_fraction(report.doeblin_bound_value),
                "baseline": ""
                if report.subadditivity_value is None
                else format_fraction(report.subadditivity_value),
            }
        )

    columns = [args.param, "exact", "coupling_bound", "doeblin_bound", "baseline"]
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns)
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            handle.write(out.getvalue())
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(out.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leakbound",
        description="Exact leakage measures, couplings, and bounds for "
        "discrete Bayesian networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network file")
    p.add_argument("path")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("measures", help="leakage measures of one node's CPT")
    p.add_argument("path")
    p.add_argument("--node", required=True)
    p.set_defaults(fn=cmd_measures)

    def add_capacity(sp):
        sp.add_argument(
            "--max-states",
            type=int,
            default=10**6,
            help="state/variable budget for exact enumerations (default 1e6)",
        )

    p = sub.add_parser("bound", help="bound the composite leakage exponent")
    add_capacity(p)
    p.add_argument("path")
    p.add_argument("--targets", required=True, help="comma-separated node ids")
    p.add_argument("--source", default=None)
    p.add_argument(
        "--method",
        default="recursive",
        choices=["recursive", "coupling", "doeblin"],
    )
    p.add_argument("--compare-exact", action="store_true")
    p.add_argument("--csv", default=None, help="write the report table here")
    p.set_defaults(fn=cmd_bound)

    p = sub.add_parser("couple", help="build and verify couplings of PMFs")
    add_capacity(p)
    p.add_argument("path")
    p.add_argument("--mode", required=True, choices=["lp", "n4", "simul"])
    p.add_argument("--diag", action="store_true",
                   help="lp mode: pin the diagonal to the column minimum")
    p.add_argument("--dump", action="store_true", help="print the support")
    p.set_defaults(fn=cmd_couple)

    p = sub.add_parser("sweep", help="evaluate bounds over a parameter range")
    add_capacity(p)
    p.add_argument("path")
    p.add_argument("--param", required=True)
    p.add_argument("--range", required=True, help="start:stop:step, exact")
    p.add_argument("--targets", required=True)
    p.add_argument("--source", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except CapacityError as err:
        print(f"capacity: {err}", file=sys.stderr)
        return EXIT_CAPACITY
    except (NetworkFormatError, PreconditionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except LeakboundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
