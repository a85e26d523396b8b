from __future__ import annotations

import pytest

from petrired import oracle
from petrired.catalog import catalog, catalog_net
from petrired.formats import parse_properties
from petrired.net import fire
from petrired.orchestrator import (SolveConfig, progress_meter, simplify_atoms, snapshot, solve)
from petrired.props import Const, deadlock_as_safety
from petrired.reduce.trace import ReductionTrace
from petrired.smt import solver as smt_solver
from petrired.walker import STATS

from conftest import needs_solver

FAST = dict(walk_steps=2000, walk_runs=2, replay_steps=500, replay_runs=4, timeout=60.0)


def _replay_names(net, trace, marking):
    t = net.trans_index()
    m = net.initial_marking()
    for name in trace:
        m = fire(m, t[name], net)
    names = net.place_names
    assert {names[p]: v for p, v in m.items() if v} == {k: v for k, v in marking.items() if v}


def test_line_refuted_by_walk():
    net = catalog_net("NET-LINE")
    ps = parse_properties("c0: AG c = 0", net)
    res = solve(net, ps, SolveConfig(smt=False, **FAST))
    prop = ps.properties[0]
    assert prop.outcome() is False and prop.technique == "WALK"
    cex = res.counterexamples["c0"]
    assert cex.on_original
    _replay_names(net, cex.trace, cex.marking)


@needs_solver
def test_borrow_proved_by_smt():
    net = catalog_net("NET-BORROW")
    ps = parse_properties("c0: AG c = 0", net)
    solve(net, ps, SolveConfig(reduce=False, **FAST))
    prop = ps.properties[0]
    assert prop.outcome() is True and prop.technique == "SMT"


def test_borrow_closed_by_reduction_alone():
    net = catalog_net("NET-BORROW")
    ps = parse_properties("c0: AG c = 0", net)
    solve(net, ps, SolveConfig(smt=False, walk=False, **FAST))
    assert ps.properties[0].outcome() is True


def test_line_deadlock_quick_conclusion():
    net = catalog_net("NET-LINE")
    ps = deadlock_as_safety(net)
    calls, steps = smt_solver.STATS["check_sat"], STATS["steps"]
    res = solve(net, ps, SolveConfig(**FAST))
    assert ps.properties[0].outcome() is True
    assert ps.properties[0].technique == "REDUCTION"
    assert smt_solver.STATS["check_sat"] == calls and STATS["steps"] == steps
    assert "r19" in res.reduction.trace.rules()


def test_stuck_no_deadlock_by_reduction():
    net = catalog_net("NET-STUCK")
    ps = deadlock_as_safety(net)
    solve(net, ps, SolveConfig(walk=False, smt_prove=False, **FAST))
    assert ps.properties[0].outcome() is False


def test_fork_deadlock_by_walk():
    net = catalog_net("NET-FORK")
    ps = deadlock_as_safety(net)
    res = solve(net, ps, SolveConfig(reduce=False, smt=False, **FAST))
    assert ps.properties[0].outcome() is True
    assert ps.properties[0].technique == "WALK"
    assert res.counterexamples


def test_net_argument_untouched():
    net = catalog_net("NET-STUCK")
    before = net.structure()
    solve(net, deadlock_as_safety(net), SolveConfig(**FAST))
    assert net.structure() == before


@needs_solver
def test_simplify_atoms_loop():
    net = catalog_net("NET-LOOP")
    ps = parse_properties("x: AG a + b = 1 | a >= 3\ny: AG a <= 1 & a + b >= 2", net)
    assert simplify_atoms(net, ps) == 2
    x, y = ps.properties
    assert x.outcome() is True and x.technique == "SMT"
    assert y.outcome() is False
    assert all(isinstance(p.formula, Const) for p in ps)


@needs_solver
def test_simplify_atoms_partial():
    net = catalog_net("NET-LINE")
    ps = parse_properties("x: AG a + b + c = 1 & c = 0", net)
    assert simplify_atoms(net, ps) == 1
    assert ps.properties[0].is_open
    tried = set()
    assert simplify_atoms(net, ps, tried=tried) == 0
    assert tried and simplify_atoms(net, ps, tried=tried) == 0


def test_progress_meter():
    net = catalog_net("NET-LINE")
    ps = parse_properties("x: AG c = 0", net)
    a = snapshot(net, ps)
    assert not progress_meter(a, snapshot(net, ps))
    ps.properties[0].close(False, "WALK")
    assert progress_meter(a, snapshot(net, ps))
    b = snapshot(net, ps)
    net.drop_transition(0)
    assert progress_meter(b, snapshot(net, ps))


def _catalog_props(net):
    names = [net.place_names[p] for p in net.places()]
    lines = []
    for i, n in enumerate(names):
        lines.append(f"g{i}: AG {n} <= 1")
        lines.append(f"f{i}: EF {n} >= 2")
    if len(names) > 1:
        lines.append(f"s: AG {names[0]} + {names[1]} >= 1")
    return "\n".join(lines)


@needs_solver
def test_verdicts_agree_with_oracle():
    for name, net in catalog().items():
        ps = parse_properties(_catalog_props(net), net)
        truth = oracle.verdicts(net, ps)
        res = solve(net, ps, SolveConfig(seed=1, **FAST))
        for prop in ps:
            if prop.status is not None:
                assert prop.outcome() == truth[prop.name], (name, prop.name)
        for cex in res.counterexamples.values():
            if cex.on_original:
                _replay_names(net, cex.trace, cex.marking)
            else:
                reduced = ReductionTrace.parse(cex.reduction).replay(net)
                _replay_names(reduced, cex.trace, cex.marking)


@needs_solver
@pytest.mark.parametrize("name", sorted(catalog()))
def test_deadlock_verdicts(name):
    net = catalog()[name]
    ps = deadlock_as_safety(net)
    solve(net, ps, SolveConfig(seed=3, **FAST))
    prop = ps.properties[0]
    if prop.status is not None:
        assert prop.outcome() == oracle.has_deadlock(net)
