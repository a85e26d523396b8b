from __future__ import annotations

import random
from fractions import Fraction

import pytest

from petrired import oracle
from petrired.catalog import catalog, catalog_net, random_net
from petrired.props import atom, conj, disj
from petrired.smt.over import (BASE, CANDIDATE, CAUSALITY, FLOWS, INT, LAYERS, PROVED,
                               READ_FEED, REAL, STATE_EQ, TRAPS, SmtConfig, check_predicate,
                               check_safety, find_contradicting_trap)
from petrired.smt.solver import SolverError, parse_model, parse_sexprs, value_of

from conftest import needs_solver, net_of


# -- solver output parsing (no solver needed) ---------------------------

def test_value_of_terms():
    assert value_of("3") == 3
    assert value_of("1.5") == Fraction(3, 2)
    assert value_of(["-", "2"]) == -2
    assert value_of(["/", "1", "3"]) == Fraction(1, 3)
    assert value_of(["-", ["/", "1", "2"]]) == Fraction(-1, 2)


def test_parse_model():
    text = ("(model\n  (define-fun m_0 () Real (/ 1.0 2.0))\n"
            "  (define-fun n_3 () Int 4)\n  (define-fun |odd name| () Int (- 1))\n"
            "  (define-fun f ((x Int)) Int x))")
    assert parse_model(text) == {"m_0": Fraction(1, 2), "n_3": 4, "odd name": -1}


def test_parse_model_without_model_head():
    assert parse_model("((define-fun b_1 () Bool true))") == {"b_1": 1}


def test_unbalanced_output():
    with pytest.raises(SolverError):
        parse_sexprs("(a (b)")
    with pytest.raises(SolverError):
        parse_sexprs("a)")


# -- layered queries ----------------------------------------------------

def _p(net, name):
    return net.place_index()[name]


@needs_solver
def test_loop_proved_by_flows():
    net = catalog_net("NET-LOOP")
    inv = atom({_p(net, "a"): 1, _p(net, "b"): 1}, "=", 1)
    v = check_safety(net, inv)
    assert v.outcome == PROVED and v.layer == FLOWS


@needs_solver
def test_line_candidate_parikh():
    net = catalog_net("NET-LINE")
    v = check_safety(net, atom({_p(net, "c"): 1}, "=", 0))
    assert v.outcome == CANDIDATE
    t = net.trans_index()
    assert v.parikh == {t["t1"]: 1, t["t2"]: 1}
    assert v.marking[_p(net, "c")] == 1


@needs_solver
def test_borrow_needs_causality():
    net = catalog_net("NET-BORROW")
    inv = atom({_p(net, "c"): 1}, "=", 0)
    up_to_feed = check_safety(net, inv, layers=(BASE, FLOWS, STATE_EQ, READ_FEED))
    assert up_to_feed.outcome == CANDIDATE
    assert [a for _, a in up_to_feed.profile] == ["sat"] * 4
    full = check_safety(net, inv, layers=(BASE, FLOWS, STATE_EQ, READ_FEED, CAUSALITY))
    assert full.outcome == PROVED and full.layer == CAUSALITY


@needs_solver
def test_trap_refinement_on_demo_net():
    net = catalog_net("NET-TRAP")
    a, b, c = (_p(net, n) for n in "abc")
    inv = disj([atom({c: 1}, "=", 0), atom({a: 1, b: 1}, ">=", 1)])
    v = check_safety(net, inv, layers=(BASE, TRAPS))
    assert v.outcome == PROVED and v.layer == TRAPS
    assert v.traps == [frozenset({a, b})]
    assert v.profile == [(BASE, "sat"), (TRAPS, "unsat")]


@needs_solver
def test_find_contradicting_trap():
    net = catalog_net("NET-TRAP")
    a, b, c = (_p(net, n) for n in "abc")
    assert find_contradicting_trap(net, {c: 1}) == frozenset({a, b})
    assert find_contradicting_trap(net, {a: 1}) is None


@needs_solver
def test_one_safe_bound():
    net = net_of("t: a -> b", {"a": 1})
    viol = atom({_p(net, "b"): 1}, ">=", 2)
    layers = (BASE,)
    assert check_predicate(net, viol, layers=layers).outcome == CANDIDATE
    assert check_predicate(net, viol, SmtConfig(one_safe=True), layers=layers).outcome == PROVED


@needs_solver
def test_real_relaxation_escalates_to_int():
    net = net_of("t: a -> 2b", {"a": 1})
    b = _p(net, "b")
    inv = disj([atom({b: 1}, "=", 0), atom({b: 1}, ">=", 2)])
    v = check_safety(net, inv, layers=(BASE, FLOWS))
    assert v.outcome == PROVED and v.domain == INT
    relaxed = check_safety(net, inv, SmtConfig(escalate=False), layers=(BASE, FLOWS))
    assert relaxed.outcome == CANDIDATE and relaxed.domain == REAL


@needs_solver
def test_stop_early_false_reports_first_unsat_layer():
    net = catalog_net("NET-LOOP")
    inv = atom({_p(net, "a"): 1, _p(net, "b"): 1}, "=", 1)
    v = check_safety(net, inv, stop_early=False)
    assert v.outcome == PROVED and v.layer == FLOWS
    assert [layer for layer, _ in v.profile] == list(LAYERS)


# -- soundness against the oracle ---------------------------------------

def _random_invariant(net, rng):
    places = list(net.places())
    atoms = []
    for _ in range(rng.randint(1, 2)):
        chosen = rng.sample(places, rng.randint(1, min(3, len(places))))
        coeffs = {p: rng.choice((1, 1, 2, -1)) for p in chosen}
        atoms.append(atom(coeffs, rng.choice(("<=", ">=", "=", "<", ">")), rng.randint(0, 3)))
    return conj(atoms) if rng.random() < 0.5 else disj(atoms)


def _soundness_sweep(nets, per_net, seed):
    rng = random.Random(seed)
    proved = 0
    for net in nets:
        for _ in range(per_net):
            inv = _random_invariant(net, rng)
            v = check_safety(net, inv)
            if v.outcome == PROVED:
                proved += 1
                assert oracle.holds_invariant(net, inv), (net.name, inv)
            elif v.outcome == CANDIDATE and v.layer == LAYERS[-1]:
                # an integral candidate must at least respect the flows
                assert all(x >= 0 for x in v.marking.values())
    return proved


@needs_solver
def test_smt_soundness_catalog():
    assert _soundness_sweep(catalog().values(), 12, 3) > 0


@needs_solver
def test_smt_soundness_random_nets():
    nets = [random_net(s, max_places=8, max_transitions=10, growth=0.0) for s in range(40)]
    _soundness_sweep(nets, 3, 11)


@needs_solver
def test_layers_are_monotone():
    rng = random.Random(5)
    for net in catalog().values():
        for _ in range(4):
            inv = _random_invariant(net, rng)
            seen_proof = False
            for k in range(1, len(LAYERS) + 1):
                v = check_safety(net, inv, layers=LAYERS[:k])
                if seen_proof:
                    assert v.outcome == PROVED
                seen_proof = seen_proof or v.outcome == PROVED
