#!/usr/bin/env python3
"""Reduce seeded random nets and compare them with the original by exhaustive search.

    python3 scripts/random_differential.py --nets 500 --mode both
"""
from __future__ import annotations

import argparse
import random
import sys
import time

from petrired import oracle
from petrired.catalog import random_net
from petrired.props import Property, PropertySet, atom, deadlock_as_safety
from petrired.reduce.context import DEADLOCK_MODE, SAFETY, Reduction
from petrired.reduce.passes import full_reduction
from petrired.reduce.trace import ReductionTrace
from petrired.smt.over import SmtConfig


def run_one(seed, mode, args):
    net = random_net(seed, max_places=args.places, max_transitions=args.transitions,
                     max_weight=args.weight, growth=args.growth,
                     marked=args.marked)
    original = net.copy()
    supp = []
    if mode == DEADLOCK_MODE:
        red = Reduction(net, deadlock_as_safety(net), mode=mode)
    else:
        rng = random.Random(seed)
        names = [net.place_names[p] for p in net.places()]
        supp = rng.sample(names, rng.randint(1, min(3, len(names))))
        idx = net.place_index()
        ps = PropertySet([Property(f"w_{n}", atom({idx[n]: 1}, ">=", 0)) for n in supp])
        red = Reduction(net, ps)
        red.keep = {idx[n] for n in supp}
    full_reduction(red, smt=args.smt, config=SmtConfig() if args.smt else None)
    replayed = ReductionTrace.parse(red.trace.serialize()).replay(original)
    if replayed.structure() != net.structure():
        return False, "trace replay differs"
    try:
        if mode == DEADLOCK_MODE:
            truth = oracle.has_deadlock(original, args.cap)
            same = truth == (red.deadlock if red.deadlock is not None
                             else oracle.has_deadlock(net, args.cap))
        else:
            same = oracle.equivalent(original, net, supp, oracle.SAFETY, args.cap, red.fixed)
    except oracle.StateCapExceeded:
        return None, "state cap"
    if same is None:
        return None, "state cap"
    return same, f"{original.num_places}->{net.num_places} places, " \
                 f"{original.num_transitions}->{net.num_transitions} transitions"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nets", type=int, default=500)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--mode", choices=["safety", "deadlock", "both"], default="both")
    ap.add_argument("--places", type=int, default=12)
    ap.add_argument("--transitions", type=int, default=15)
    ap.add_argument("--weight", type=int, default=3)
    ap.add_argument("--growth", type=float, default=0.0,
                    help="chance of a token-increasing transition (may make nets unbounded)")
    ap.add_argument("--marked", type=float, default=0.8,
                    help="chance that a place starts with tokens")
    ap.add_argument("--cap", type=int, default=50_000, help="oracle state cap")
    ap.add_argument("--smt", action="store_true", help="also run the SMT-backed rules")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)

    modes = {"safety": [SAFETY], "deadlock": [DEADLOCK_MODE],
             "both": [SAFETY, DEADLOCK_MODE]}[args.mode]
    start = time.monotonic()
    failed = 0
    for mode in modes:
        tally = {True: 0, False: 0, None: 0}
        for seed in range(args.first_seed, args.first_seed + args.nets):
            ok, detail = run_one(seed, mode, args)
            tally[ok] += 1
            if ok is False or args.verbose:
                print(f"{mode} seed {seed}: {ok} ({detail})")
        failed += tally[False]
        print(f"{mode}: {tally[True]} equivalent, {tally[False]} different, "
              f"{tally[None]} skipped (cap)")
    print(f"{time.monotonic() - start:.1f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
