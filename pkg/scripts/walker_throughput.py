#!/usr/bin/env python3
"""Firings per second of the random walker on the benchmark net, per heuristic."""
from __future__ import annotations

import argparse
import time

from petrired.catalog import throughput_net
from petrired.walker import HEURISTICS, STATS, WalkConfig, random_walk


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seconds", type=float, default=10.0, help="per heuristic")
    ap.add_argument("--places", type=int, default=100)
    ap.add_argument("--transitions", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--heuristic", choices=HEURISTICS, action="append")
    args = ap.parse_args(argv)

    net = throughput_net(n_places=args.places, n_transitions=args.transitions)
    print(f"net: {net.num_places} places, {net.num_transitions} transitions")
    for h in args.heuristic or HEURISTICS:
        before = STATS["steps"]
        start = time.monotonic()
        cfg = WalkConfig(seed=args.seed, max_steps=10**12, max_restarts=1, heuristic=h,
                         deadline=start + args.seconds)
        random_walk(net, lambda m: False, cfg, visible_places=())
        elapsed = time.monotonic() - start
        steps = STATS["steps"] - before
        print(f"{h:<14} {steps:>12,} firings in {elapsed:5.1f}s  {steps / elapsed:>12,.0f}/s")


if __name__ == "__main__":
    main()
