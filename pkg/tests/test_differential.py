"""Random nets: full structural reduction must keep oracle verdicts."""
from __future__ import annotations

import random

import pytest

from petrired import oracle
from petrired.catalog import random_net
from petrired.reduce.context import DEADLOCK_MODE, SAFETY
from petrired.reduce.passes import full_reduction

from conftest import check_equivalent, reduction

N_NETS = 500
CAP = 50_000
# most places start marked so that few nets are dead from the start
MARKED = 0.8


def differential(seed, mode, growth=0.0):
    """None when the oracle cannot enumerate the net, else the equivalence verdict."""
    net = random_net(seed, max_places=12, max_transitions=15, max_weight=3, growth=growth,
                     marked=MARKED)
    original = net.copy()
    supp = ()
    if mode == SAFETY:
        rng = random.Random(seed)
        names = [net.place_names[p] for p in net.places()]
        supp = tuple(rng.sample(names, rng.randint(1, min(3, len(names)))))
    red = reduction(net, mode, supp)
    full_reduction(red)
    try:
        return check_equivalent(original, net, red, mode, supp, cap=CAP)
    except oracle.StateCapExceeded:
        return None


@pytest.mark.parametrize("mode", [SAFETY, DEADLOCK_MODE])
def test_bounded_random_nets(mode):
    bad = [s for s in range(N_NETS) if differential(s, mode) is not True]
    assert bad == []


@pytest.mark.parametrize("mode", [SAFETY, DEADLOCK_MODE])
def test_growing_random_nets(mode):
    # some nets are unbounded here; those are skipped, never counted as passes
    results = [differential(s, mode, growth=0.1) for s in range(N_NETS, N_NETS + 200)]
    decided = [r for r in results if r is not None]
    assert len(decided) >= 150
    assert all(decided)
