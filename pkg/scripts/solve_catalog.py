#!/usr/bin/env python3
"""Run the full verification loop on every catalog net and check it against the oracle.

Each net gets one bound and one reachability property per place plus a
deadlock query. Prints the verdict, technique and oracle agreement per query.
"""
from __future__ import annotations

import argparse
import sys
from collections import Counter

from petrired import oracle
from petrired.catalog import catalog
from petrired.formats import parse_properties
from petrired.orchestrator import SolveConfig, solve
from petrired.props import deadlock_as_safety


def props_for(net):
    names = [net.place_names[p] for p in net.places()]
    return "".join(f"g{i}: AG {n} <= 1\nf{i}: EF {n} >= 2\n" for i, n in enumerate(names))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--timeout", type=float, default=60.0, help="per query set")
    ap.add_argument("-q", "--quiet", action="store_true")
    args = ap.parse_args(argv)

    techniques = Counter()
    wrong = unknown = 0
    for name, net in catalog().items():
        for ps in (parse_properties(props_for(net), net), deadlock_as_safety(net)):
            truth = oracle.verdicts(net, ps)
            solve(net, ps, SolveConfig(seed=args.seed, timeout=args.timeout))
            for prop in ps:
                if prop.status is None:
                    unknown += 1
                    mark = "?"
                else:
                    techniques[prop.technique] += 1
                    agree = prop.outcome() == truth[prop.name]
                    wrong += not agree
                    mark = "ok" if agree else "WRONG"
                if not args.quiet:
                    verdict = {True: "TRUE", False: "FALSE", None: "UNKNOWN"}[prop.outcome()]
                    print(f"{name:<16} {prop.name:<22} {verdict:<8} {prop.technique or 'NONE':<10} {mark}")
    print(f"decided by technique: {dict(techniques)}; unknown {unknown}; wrong {wrong}")
    return 1 if wrong else 0


if __name__ == "__main__":
    sys.exit(main())
