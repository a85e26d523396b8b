from __future__ import annotations

import pytest

from petrired import oracle
from petrired.catalog import catalog_net
from petrired.formats import parse_properties
from petrired.props import atom, deadlock_as_safety

from conftest import net_of


def _named(net, space, tuples):
    names = net.place_names
    return {frozenset((names[p], v) for p, v in m.items()) for m in space.as_dicts(tuples)}


@pytest.mark.parametrize("name,states,deadlocks", [
    ("NET-LINE", 3, [{"c": 1}]),
    ("NET-LOOP", 2, []),
    ("NET-FORK", 3, [{"r": 1}]),
])
def test_state_counts(name, states, deadlocks):
    net = catalog_net(name)
    space = oracle.enumerate_states(net)
    assert len(space.markings) == states
    assert _named(net, space, space.deadlocks) == {frozenset(d.items()) for d in deadlocks}


def test_borrow_is_dead():
    space = oracle.enumerate_states(catalog_net("NET-BORROW"))
    assert len(space.markings) == 1 and space.deadlocks == space.markings


def test_cap():
    with pytest.raises(oracle.StateCapExceeded):
        oracle.enumerate_states(catalog_net("NET-TRAP"), cap=50)


def test_holds_and_violation():
    net = catalog_net("NET-LINE")
    c = net.place_index()["c"]
    assert not oracle.holds_invariant(net, atom({c: 1}, "=", 0))
    assert oracle.find_violation(net, atom({c: 1}, "=", 0)) == {c: 1}
    assert oracle.holds_invariant(net, atom({c: 1}, "<=", 1))


def test_equivalent_projection():
    line = catalog_net("NET-LINE")
    shortcut = net_of("t: a -> c", {"a": 1}, places=["a", "c"])
    # the line passes through a=0, c=0 (token on b); the shortcut never does
    assert not oracle.equivalent(line, shortcut, ["a", "c"])
    assert oracle.equivalent(line, shortcut, ["c"])
    assert oracle.projection(line, ["a", "c"]) == {(1, 0), (0, 0), (0, 1)}


def test_equivalent_fixed_constant():
    original = net_of("t: a -> b", {"a": 1, "k": 2})
    reduced = net_of("t: a -> b", {"a": 1})
    assert oracle.equivalent(original, reduced, ["a", "k"], fixed={"k": 2})
    with pytest.raises(KeyError):
        oracle.projection(reduced, ["k"])


def test_equivalent_deadlock_mode():
    assert oracle.equivalent(catalog_net("NET-LINE"), catalog_net("NET-FORK"), [],
                             oracle.DEADLOCK)
    assert not oracle.equivalent(catalog_net("NET-LINE"), catalog_net("NET-LOOP"), [],
                                 oracle.DEADLOCK)


def test_equivalent_inconclusive_on_cap():
    trap = catalog_net("NET-TRAP")
    assert oracle.equivalent(trap, trap, ["a"], cap=20) is None


def test_verdicts_flip():
    net = catalog_net("NET-LINE")
    ps = parse_properties("g: AG c = 0\ne: EF c >= 1\nd: deadlock", net)
    assert oracle.verdicts(net, ps) == {"g": False, "e": True, "d": True}
    loop = catalog_net("NET-LOOP")
    assert oracle.verdicts(loop, deadlock_as_safety(loop)) == {"ReachabilityDeadlock": False}
