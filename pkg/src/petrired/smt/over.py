"""Layered SMT over-approximation of the reachable markings.

A query asserts the *violation* of an invariant, then adds constraint layers
in a fixed order, checking satisfiability as it goes:

    BASE       m_p >= 0 (and <= 1 for one-safe nets), plus the violation
    FLOWS      sum(a_p * m_p) = constant for every generalized flow
    TRAPS      "this initially marked trap stays marked", only for traps that
               contradict the current candidate marking
    STATE_EQ   m_p = m0(p) + sum(n_c * We(p, c)), one n_c per effect class
    READ_FEED  a reader of an initially short place needs a feeder with n > 0
    CAUSALITY  ... and that feeder fires first (o_t' < o_t)

The first UNSAT proves the invariant. A final SAT model in the real domain
that is not integral triggers a restart with integer sorts.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, TextIO, Tuple

from petrired.algebra import FlowVector, compute_flows, dedup_effects
from petrired.net import SparseNet
from petrired.props import Atom, And, Const, Formula, Not, formula_support, negate
from petrired.smt.solver import SmtSession, SolverError

log = logging.getLogger(__name__)

BASE, FLOWS, TRAPS, STATE_EQ, READ_FEED, CAUSALITY = (
    "BASE", "FLOWS", "TRAPS", "STATE_EQ", "READ_FEED", "CAUSALITY")
LAYERS: Tuple[str, ...] = (BASE, FLOWS, TRAPS, STATE_EQ, READ_FEED, CAUSALITY)

PROVED, CANDIDATE, UNKNOWN = "ProvedInvariant", "Candidate", "Unknown"
REAL, INT = "Real", "Int"


@dataclass
class SmtConfig:
    real_timeout_ms: int = 5000
    int_timeout_ms: int = 15000
    trap_cap: int = 20
    cadence: int = 256
    one_safe: bool = False
    escalate: bool = True
    solver: Optional[str] = None
    transcript: Optional[TextIO] = None
    deadline: Optional[float] = None     # time.monotonic() value

    def budget(self, domain: str) -> int:
        ms = self.real_timeout_ms if domain == REAL else self.int_timeout_ms
        if self.deadline is not None:
            left = int((self.deadline - time.monotonic()) * 1000)
            ms = max(1, min(ms, left))
        return ms


@dataclass
class SmtVerdict:
    outcome: str
    layer: Optional[str] = None
    domain: str = REAL
    marking: Optional[Dict[int, Fraction]] = None
    parikh: Dict[int, int] = field(default_factory=dict)
    classes: Dict[int, List[int]] = field(default_factory=dict)
    traps: List[frozenset] = field(default_factory=list)
    profile: List[Tuple[str, str]] = field(default_factory=list)
    diagnostic: str = ""

    @property
    def proved(self) -> bool:
        return self.outcome == PROVED


@dataclass
class Analysis:
    """Net facts reused across queries on the same net snapshot."""
    flows: List[FlowVector]
    classes: List[List[int]]

    @classmethod
    def of(cls, net: SparseNet) -> "Analysis":
        return cls(compute_flows(net), dedup_effects(net))


class _Unsat(Exception):
    pass


class _Unknown(Exception):
    pass


def _num(v: int, domain: str) -> str:
    s = f"{abs(v)}.0" if domain == REAL else str(abs(v))
    return f"(- {s})" if v < 0 else s


def _lin(terms: Sequence[Tuple[int, str]], domain: str) -> str:
    parts = []
    for c, var in terms:
        if c == 1:
            parts.append(var)
        elif c:
            parts.append(f"(* {_num(c, domain)} {var})")
    if not parts:
        return _num(0, domain)
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def _or(parts: Sequence[str]) -> str:
    if not parts:
        return "false"
    return parts[0] if len(parts) == 1 else "(or " + " ".join(parts) + ")"


def _and(parts: Sequence[str]) -> str:
    if not parts:
        return "true"
    return parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"


class SmtContext:
    """One main-solver session over a net snapshot."""

    def __init__(self, net: SparseNet, domain: str = REAL,
                 config: Optional[SmtConfig] = None, analysis: Optional[Analysis] = None):
        self.net = net
        self.domain = domain
        self.config = config or SmtConfig()
        self.analysis = analysis or Analysis.of(net)
        logic = "QF_LRA" if domain == REAL else "QF_LIA"
        self.session = SmtSession(logic, self.config.budget(domain), self.config.solver,
                                  self.config.transcript)
        self.layer: Optional[str] = None
        self.class_of: Dict[int, int] = {}
        for cls in self.analysis.classes:
            for t in cls:
                self.class_of[t] = cls[0]
        self.profile: List[Tuple[str, str]] = []
        self._since_check = 0
        self.stop_early = True
        self.unsat_layer: Optional[str] = None

    # -- variables ----------------------------------------------------

    def m(self, p: int) -> str:
        name = f"m_{p}"
        self.session.declare(name, self.domain)
        return name

    def n(self, t: int) -> str:
        name = f"n_{self.class_of[t]}"
        self.session.declare(name, self.domain)
        return name

    def o(self, t: int) -> str:
        name = f"o_{t}"
        self.session.declare(name, self.domain)
        return name

    # -- assertion plumbing -------------------------------------------

    def formula(self, f: Formula) -> str:
        if isinstance(f, Const):
            return "true" if f.value else "false"
        if isinstance(f, Atom):
            lhs = _lin([(c, self.m(p)) for p, c in f.coeffs], self.domain)
            return f"({f.op} {lhs} {_num(f.bound, self.domain)})"
        if isinstance(f, Not):
            return f"(not {self.formula(f.arg)})"
        parts = [self.formula(a) for a in f.args]
        return _and(parts) if isinstance(f, And) else _or(parts)

    def add(self, expr: str) -> None:
        self.session.add(expr)
        self._since_check += 1
        if self._since_check >= self.config.cadence:
            self.check()

    def check(self) -> str:
        self._since_check = 0
        try:
            ans = self.session.check()
        except SolverError as exc:
            raise _Unknown(str(exc)) from exc
        if ans == "unknown":
            raise _Unknown("solver answered unknown")
        if ans == "unsat":
            if self.unsat_layer is None:
                self.unsat_layer = self.layer
            if self.stop_early:
                raise _Unsat()
        return ans

    def end_layer(self, layer: str) -> str:
        ans = self.check()
        self.profile.append((layer, ans))
        return ans

    # -- layers ---------------------------------------------------------

    def assert_base(self, violation: Formula) -> None:
        self.layer = BASE
        for p in self.net.places():
            self.add(f"(>= {self.m(p)} {_num(0, self.domain)})")
            if self.config.one_safe:
                self.add(f"(<= {self.m(p)} {_num(1, self.domain)})")
        self.add(self.formula(violation))

    def assert_flows(self, flows: Optional[Sequence[FlowVector]] = None) -> None:
        self.layer = FLOWS
        flows = self.analysis.flows if flows is None else flows
        # semi-flows first (compute_flows already sorts them ahead)
        for f in sorted(flows, key=lambda f: not f.is_semiflow):
            lhs = _lin([(c, self.m(p)) for p, c in f.coeffs], self.domain)
            self.add(f"(= {lhs} {_num(f.constant, self.domain)})")

    def candidate_marking(self) -> Dict[int, Fraction]:
        model = self.session.model()
        return {p: model.get(f"m_{p}", Fraction(0)) for p in self.net.places()}

    def add_trap(self, trap: Sequence[int]) -> None:
        self.add(_or([f"(> {self.m(p)} {_num(0, self.domain)})" for p in sorted(trap)]))

    def refine_with_traps(self, known: Optional[List[frozenset]] = None,
                          found: Optional[List[frozenset]] = None) -> int:
        """Add trap constraints until UNSAT, no useful trap, or the cap.

        ``known`` traps (from an earlier run) are asserted first. Returns the
        number of traps searched for and added in this call.
        """
        self.layer = TRAPS
        for trap in known or ():
            self.add_trap(trap)
        added = 0
        while added < self.config.trap_cap:
            if self.check() != "sat":
                break
            m_c = self.candidate_marking()
            trap = find_contradicting_trap(self.net, m_c, self.config)
            if trap is None:
                break
            self.add_trap(trap)
            added += 1
            if found is not None:
                found.append(trap)
        return added

    def assert_state_equation(self, supp: Optional[Set[int]] = None) -> None:
        self.layer = STATE_EQ
        net = self.net
        for cls in self.analysis.classes:
            self.add(f"(>= {self.n(cls[0])} {_num(0, self.domain)})")
        supp = supp or set()
        order = sorted(net.places(), key=lambda p: (p not in supp, p))
        for p in order:
            terms = []
            seen = set()
            for t in list(net.pre_t[p]) + list(net.post_t[p]):
                c = self.class_of[t]
                if c in seen:
                    continue
                seen.add(c)
                w = net.effect_at(p, c)
                if w:
                    terms.append((w, self.n(c)))
            rhs = _lin(terms, self.domain)
            if terms:
                rhs = f"(+ {_num(net.m0[p], self.domain)} {rhs})"
            else:
                rhs = _num(net.m0[p], self.domain)
            self.add(f"(= {self.m(p)} {rhs})")

    def _feeders(self, p: int, t: int) -> List[int]:
        net = self.net
        return [u for u in net.post_t[p] if u != t and net.effect_at(p, u) > 0]

    def _class_constraints(self, condition) -> None:
        zero = _num(0, self.domain)
        for cls in self.analysis.classes:
            options = []
            trivial = False
            for t in cls:
                cond = condition(t)
                if cond is None:
                    trivial = True
                    break
                options.append(cond)
            if trivial:
                continue
            self.add(f"(=> (> {self.n(cls[0])} {zero}) {_or(options)})")

    def assert_read_feed(self) -> None:
        self.layer = READ_FEED
        net = self.net
        zero = _num(0, self.domain)

        def condition(t):
            reqs = []
            for p, w in net.pre[t].items():
                if net.effect_at(p, t) == 0 and w > net.m0[p]:
                    reqs.append(_or([f"(> {self.n(u)} {zero})" for u in self._feeders(p, t)]))
            return _and(reqs) if reqs else None

        self._class_constraints(condition)

    def assert_causality(self) -> None:
        self.layer = CAUSALITY
        net = self.net
        zero = _num(0, self.domain)

        def condition(t):
            reqs = []
            for p, w in net.pre[t].items():
                if w > net.m0[p]:
                    reqs.append(_or([f"(and (> {self.n(u)} {zero}) (< {self.o(u)} {self.o(t)}))"
                                     for u in self._feeders(p, t)]))
            return _and(reqs) if reqs else None

        self._class_constraints(condition)

    def extract_parikh(self) -> Dict[int, int]:
        """Positive class counts keyed by the class representative."""
        model = self.session.model()
        out = {}
        for cls in self.analysis.classes:
            v = model.get(f"n_{cls[0]}")
            if v is None:
                continue
            if v > 0:
                out[cls[0]] = int(round(v)) if v.denominator != 1 else int(v)
        return out

    def close(self) -> None:
        self.session.close()


def find_contradicting_trap(net: SparseNet, m_c: Dict[int, Fraction],
                            config: Optional[SmtConfig] = None) -> Optional[frozenset]:
    """Search an initially marked trap that is empty in ``m_c``.

    Runs in its own solver session over Boolean selectors ``b_p``.
    """
    config = config or SmtConfig()
    places = list(net.places())
    marked0 = [p for p in places if net.m0[p] > 0]
    if not marked0:
        return None
    try:
        with SmtSession(None, config.budget(REAL), config.solver, config.transcript) as s:
            for p in places:
                s.declare(f"b_{p}", "Bool")
            s.add(_or([f"b_{p}" for p in marked0]))
            for p in places:
                if m_c.get(p, 0) > 0:
                    s.add(f"(not b_{p})")
            for p in places:
                reqs = [_or([f"b_{q}" for q in net.post[t]]) for t in net.pre_t[p]]
                if reqs:
                    s.add(f"(=> b_{p} {_and(reqs)})")
            if s.check() != "sat":
                return None
            model = s.model()
    except SolverError as exc:
        log.debug("trap search failed: %s", exc)
        return None
    return frozenset(p for p in places if model.get(f"b_{p}", 0) == 1)


def _integral(values) -> bool:
    return all(abs(v - round(v)) <= Fraction(1, 10**9) for v in values)


def _run(net: SparseNet, violation: Formula, domain: str, layers: Sequence[str],
         config: SmtConfig, analysis: Analysis, traps: List[frozenset],
         stop_early: bool, supp: Set[int]) -> SmtVerdict:
    ctx = SmtContext(net, domain, config, analysis)
    ctx.stop_early = stop_early
    known = list(traps)
    try:
        for layer in layers:
            if layer == BASE:
                ctx.assert_base(violation)
            elif layer == FLOWS:
                ctx.assert_flows()
            elif layer == TRAPS:
                ctx.refine_with_traps(known, traps)
            elif layer == STATE_EQ:
                ctx.assert_state_equation(supp)
            elif layer == READ_FEED:
                ctx.assert_read_feed()
            elif layer == CAUSALITY:
                ctx.assert_causality()
            else:
                raise ValueError(f"unknown layer {layer}")
            ctx.end_layer(layer)
        if ctx.unsat_layer is not None:
            return SmtVerdict(PROVED, ctx.unsat_layer, domain, traps=traps, profile=ctx.profile)
        model = ctx.session.model()
        marking = {p: model.get(f"m_{p}", Fraction(0)) for p in net.places()}
        verdict = SmtVerdict(CANDIDATE, layers[-1] if layers else None, domain,
                             marking=marking, traps=traps, profile=ctx.profile)
        verdict.classes = {c[0]: list(c) for c in analysis.classes}
        if STATE_EQ in layers or READ_FEED in layers or CAUSALITY in layers:
            verdict.parikh = {c: v for c, v in
                              ((cls[0], model.get(f"n_{cls[0]}", Fraction(0)))
                               for cls in analysis.classes) if v > 0}
        return verdict
    except _Unsat:
        ctx.profile.append((ctx.layer, "unsat"))
        return SmtVerdict(PROVED, ctx.unsat_layer, domain, traps=traps, profile=ctx.profile)
    except (_Unknown, SolverError) as exc:
        return SmtVerdict(UNKNOWN, ctx.layer, domain, traps=traps, profile=ctx.profile,
                          diagnostic=str(exc))
    finally:
        ctx.close()


def check_predicate(net: SparseNet, violation: Formula, config: Optional[SmtConfig] = None,
                    layers: Sequence[str] = LAYERS, analysis: Optional[Analysis] = None,
                    stop_early: bool = True, supp: Optional[Set[int]] = None) -> SmtVerdict:
    """Is ``violation`` satisfiable in the over-approximation?

    UNSAT at any layer gives ProvedInvariant. A SAT answer at the last layer
    gives a Candidate, with the Parikh counts when the state equation was used.
    """
    config = config or SmtConfig()
    analysis = analysis or Analysis.of(net)
    if supp is None:
        supp = formula_support(violation)
    traps: List[frozenset] = []
    verdict = _run(net, violation, REAL, layers, config, analysis, traps, stop_early, supp)
    if verdict.outcome != CANDIDATE:
        return verdict
    values = list(verdict.marking.values()) + [Fraction(v) for v in verdict.parikh.values()]
    if _integral(values):
        verdict.marking = {p: int(round(v)) for p, v in verdict.marking.items()}
        verdict.parikh = {c: int(round(v)) for c, v in verdict.parikh.items()}
        return verdict
    if not config.escalate:
        return verdict
    verdict = _run(net, violation, INT, layers, config, analysis, traps, stop_early, supp)
    if verdict.outcome == CANDIDATE:
        verdict.marking = {p: int(v) for p, v in verdict.marking.items()}
        verdict.parikh = {c: int(v) for c, v in verdict.parikh.items()}
    return verdict


def check_safety(net: SparseNet, invariant: Formula, config: Optional[SmtConfig] = None,
                 layers: Sequence[str] = LAYERS, analysis: Optional[Analysis] = None,
                 stop_early: bool = True) -> SmtVerdict:
    """Try to prove ``invariant`` on every reachable marking."""
    return check_predicate(net, negate(invariant), config, layers, analysis, stop_early,
                           supp=formula_support(invariant))
