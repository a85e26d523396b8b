"""Command line: ``petrired verify|reduce|oracle``.

Reports go to standard output, diagnostics to standard error. Exit status is
0 on success (UNKNOWN verdicts included), 1 on an internal or input error and
2 on bad flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from petrired import oracle
from petrired.formats import (FormatError, ReportLine, VerdictReport, emit_report,
                              export_net, export_properties, parse_pnml, parse_properties)
from petrired.orchestrator import SolveConfig, solve
from petrired.props import deadlock_as_safety
from petrired.reduce.context import DEADLOCK_MODE, SAFETY, Reduction
from petrired.reduce.passes import full_reduction
from petrired.smt.over import SmtConfig

log = logging.getLogger("petrired")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics")
    p.add_argument("--net", required=True, type=Path, help="PNML file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--props", type=Path, help="MCC XML or text property file")
    group.add_argument("--deadlock", action="store_true", help="check for reachable deadlocks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="petrired",
                                     description="Reachability and deadlock checking for P/T nets.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="decide properties and print a report")
    _common(v)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--timeout", type=float, default=720.0, help="wall clock seconds")
    v.add_argument("--solver", help="SMT solver command (default: z3 or $PETRIRED_SOLVER)")
    v.add_argument("--one-safe", action="store_true", help="assume every place holds at most 1")
    v.add_argument("--no-smt", action="store_true")
    v.add_argument("--no-walk", action="store_true")
    v.add_argument("--no-reduce", action="store_true")
    v.add_argument("--max-iterations", type=int, default=50)
    v.add_argument("--residual-net", type=Path, help="write the reduced net as PNML")
    v.add_argument("--residual-props", type=Path, help="write the open properties as text")

    r = sub.add_parser("reduce", help="apply reductions only and export the result")
    _common(r)
    r.add_argument("-o", "--output", type=Path, required=True, help="reduced PNML")
    r.add_argument("--trace", type=Path, help="reduction log")
    r.add_argument("--props-out", type=Path, help="rewritten properties as text")
    r.add_argument("--solver")
    r.add_argument("--no-smt", action="store_true", help="skip rules 21 and 22")

    o = sub.add_parser("oracle", help="exhaustive ground truth for small nets")
    _common(o)
    o.add_argument("--max-states", type=int, default=oracle.DEFAULT_CAP)
    return parser


def _load(args):
    net = parse_pnml(args.net.read_bytes())
    if args.deadlock:
        ps = deadlock_as_safety(net)
    else:
        ps = parse_properties(args.props.read_bytes(), net)
    return net, ps


def cmd_verify(args) -> int:
    net, ps = _load(args)
    cfg = SolveConfig(seed=args.seed, timeout=args.timeout, solver=args.solver,
                      one_safe=args.one_safe, walk=not args.no_walk, reduce=not args.no_reduce,
                      smt=not args.no_smt, max_iterations=args.max_iterations)
    result = solve(net, ps, cfg)
    sys.stdout.write(emit_report(result.report()))
    for name, cex in sorted(result.counterexamples.items()):
        where = "original net" if cex.on_original else "reduced net"
        log.info("%s: counterexample of %d steps on the %s", name, len(cex.trace), where)
    if args.residual_net:
        args.residual_net.write_bytes(export_net(result.net, result.ps))
    if args.residual_props:
        args.residual_props.write_text(export_properties(result.ps, result.net))
    return 0


def cmd_reduce(args) -> int:
    net, ps = _load(args)
    mode = DEADLOCK_MODE if ps.is_deadlock else SAFETY
    red = Reduction(net, ps, mode=mode)
    full_reduction(red, smt=not args.no_smt, config=SmtConfig(solver=args.solver))
    args.output.write_bytes(export_net(net, ps))
    if args.trace:
        args.trace.write_text(red.trace.serialize())
    if args.props_out:
        args.props_out.write_text(export_properties(ps, net))
    log.info("%d places, %d transitions left; %s", net.num_places, net.num_transitions,
             " ".join(f"{k}x{v}" for k, v in sorted(red.applied.items())))
    sys.stdout.write(emit_report(VerdictReport.from_properties(ps)))
    return 0


def cmd_oracle(args) -> int:
    net, ps = _load(args)
    truth = oracle.verdicts(net, ps, args.max_states)
    lines = [ReportLine(p.name, "TRUE" if truth[p.name] else "FALSE", "ORACLE") for p in ps]
    sys.stdout.write(emit_report(VerdictReport(lines)))
    return 0


COMMANDS = {"verify": cmd_verify, "reduce": cmd_reduce, "oracle": cmd_oracle}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(name)s: %(message)s",
                        level=logging.WARNING - 10 * min(args.verbose, 2))
    try:
        return COMMANDS[args.command](args)
    except (FormatError, OSError, oracle.StateCapExceeded) as exc:
        print(f"petrired: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - reported, not hidden
        log.exception("internal error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
