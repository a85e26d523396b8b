from __future__ import annotations

import shutil

import pytest

from petrired import oracle
from petrired.catalog import parse_net
from petrired.props import Property, PropertySet, atom, deadlock_as_safety
from petrired.reduce.context import DEADLOCK_MODE, SAFETY, Reduction
from petrired.reduce.trace import ReductionTrace

HAS_Z3 = shutil.which("z3") is not None
needs_solver = pytest.mark.skipif(not HAS_Z3, reason="z3 not on PATH")


def net_of(text, m0=None, places=None):
    return parse_net(text, m0 or {}, places=places)


def watch(net, *names):
    """Safety property set whose support is exactly ``names``."""
    idx = net.place_index()
    return PropertySet([Property(f"w_{n}", atom({idx[n]: 1}, ">=", 0)) for n in names])


def reduction(net, mode=SAFETY, supp=()):
    if mode == DEADLOCK_MODE:
        return Reduction(net, deadlock_as_safety(net), mode=mode)
    red = Reduction(net, watch(net, *supp))
    idx = net.place_index()
    red.keep = {idx[n] for n in supp}
    return red


def apply_rule(rule, text, m0=None, mode=SAFETY, supp=(), places=None):
    """Run one rule on a fresh net; return (original, reduced, Reduction, applied)."""
    net = net_of(text, m0, places)
    original = net.copy()
    red = reduction(net, mode, supp)
    applied = rule(red)
    return original, net, red, applied


def check_equivalent(original, reduced, red, mode, supp=(), cap=50_000):
    """Oracle verdict plus exact trace replay."""
    replayed = ReductionTrace.parse(red.trace.serialize()).replay(original)
    assert replayed.structure() == reduced.structure()
    if mode == DEADLOCK_MODE:
        truth = oracle.has_deadlock(original, cap)
        if red.deadlock is not None:
            return red.deadlock == truth
        return truth == oracle.has_deadlock(reduced, cap)
    return oracle.equivalent(original, reduced, supp, oracle.SAFETY, cap, fixed=red.fixed)


# acceptance lines, printed once at the end of the session
ACCEPTANCE: dict = {}


def record_acceptance(n, ok, detail):
    ACCEPTANCE[n] = (ok, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tag = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2}: {tag}  {detail}")
