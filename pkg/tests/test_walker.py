from __future__ import annotations

import pytest

from petrired import oracle
from petrired.catalog import catalog, catalog_net, throughput_net
from petrired.net import is_deadlocked
from petrired.props import atom, compile_predicate
from petrired.walker import (HEURISTICS, LEAST_ENABLED, STATS, CompiledNet, WalkConfig,
                             deadlock_walk, parikh_replay, random_walk, replay)


def _pred(net, name, op, bound):
    p = net.place_index()[name]
    return compile_predicate(atom({p: 1}, op, bound)), [p]


def test_line_reaches_c():
    net = catalog_net("NET-LINE")
    pred, vis = _pred(net, "c", ">=", 1)
    res = random_walk(net, pred, WalkConfig(seed=1), visible_places=vis)
    assert res is not None
    t = net.trans_index()
    assert res.trace == [t["t1"], t["t2"]]
    assert replay(net, res.trace) == res.marking


def test_loop_never_reaches_two_tokens():
    net = catalog_net("NET-LOOP")
    pred, vis = _pred(net, "a", ">=", 2)
    assert random_walk(net, pred, WalkConfig(seed=2, max_steps=500, max_restarts=2),
                       visible_places=vis) is None


@pytest.mark.parametrize("seed", range(10))
def test_fork_deadlock_found_fast(seed):
    net = catalog_net("NET-FORK")
    res = deadlock_walk(net, WalkConfig(seed=seed, max_steps=1000, max_restarts=1,
                                        heuristic=LEAST_ENABLED))
    assert res is not None and res.steps <= 1000
    assert is_deadlocked(res.marking, net)
    assert replay(net, res.trace) == res.marking


def test_loop_has_no_deadlock():
    net = catalog_net("NET-LOOP")
    assert deadlock_walk(net, WalkConfig(seed=0, max_steps=200, max_restarts=2)) is None


@pytest.mark.parametrize("heuristic", HEURISTICS)
def test_same_seed_same_trace(heuristic):
    net = throughput_net()
    runs = []
    for _ in range(2):
        cfg = WalkConfig(seed=42, max_steps=2000, max_restarts=1, heuristic=heuristic)
        runs.append(random_walk(net, lambda m: sum(m[:3]) >= 9, cfg))
    assert runs[0] == runs[1]


def test_walk_markings_are_reachable():
    for name, net in catalog().items():
        space = oracle.enumerate_states(net)
        reach = {frozenset(m.items()) for m in space.as_dicts(space.markings)}
        for seed in range(3):
            res = deadlock_walk(net, WalkConfig(seed=seed, max_steps=300, max_restarts=2))
            if res is not None:
                assert frozenset(res.marking.items()) in reach, name
                assert bool(space.deadlocks)


def test_compiled_enabled_matches_net():
    net = catalog_net("NET-BORROW")
    cn = CompiledNet(net)
    m = cn.initial()
    assert not any(cn.is_enabled(m, t) for t in net.transitions())


def test_parikh_replay_line():
    net = catalog_net("NET-LINE")
    t = net.trans_index()
    pred, vis = _pred(net, "c", ">=", 1)
    res = parikh_replay(net, {t["t1"]: 1, t["t2"]: 1}, pred, visible_places=vis)
    assert res is not None and res.trace == [t["t1"], t["t2"]]


def test_parikh_replay_respects_counts():
    net = catalog_net("NET-LINE")
    t = net.trans_index()
    pred, vis = _pred(net, "c", ">=", 1)
    assert parikh_replay(net, {t["t1"]: 1}, pred, visible_places=vis) is None


def test_parikh_replay_class_budget():
    net = catalog_net("NET-DUP")
    t = net.trans_index()
    pred, vis = _pred(net, "b", ">=", 2)
    classes = {t["t1"]: [t["t1"]], t["t2"]: [t["t2"]]}
    res = parikh_replay(net, {t["t2"]: 1}, pred, classes=classes, visible_places=vis)
    assert res is not None and res.trace == [t["t2"]]


def test_steps_counter_moves():
    net = throughput_net()
    before = STATS["steps"]
    random_walk(net, lambda m: False, WalkConfig(seed=0, max_steps=1000, max_restarts=1))
    assert STATS["steps"] - before == 1000


def test_bad_config():
    with pytest.raises(ValueError):
        WalkConfig(max_steps=0)
    with pytest.raises(ValueError):
        WalkConfig(heuristic="Sideways")
