"""The verification loop: walk, reduce, prove, replay, SMT rules, simplify.

Each iteration runs the steps in that order and the loop goes on while some
step made progress. Properties are closed in place on the PropertySet; the
net is reduced in place on a private copy.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from petrired.formats import VerdictReport
from petrired.net import SparseNet
from petrired.props import (DEADLOCK, Atom, Const, Formula, Property, PropertySet,
                            atoms, compile_predicate, deadlock_invariant, evaluate, map_atoms,
                            negate)
from petrired.reduce import graph, structural
from petrired.reduce.context import DEADLOCK_MODE, SAFETY, Reduction
from petrired.reduce.passes import smt_pass, structural_pass
from petrired.smt.over import CANDIDATE, Analysis, SmtConfig, check_safety
from petrired.walker import (LEAST_ENABLED, WalkConfig, WalkResult, deadlock_walk,
                             parikh_replay, random_walk)

log = logging.getLogger(__name__)

# rules after which places may hold more tokens than in any original marking
_UNSAFE_RULES = frozenset({"r13", "r18"})


@dataclass
class SolveConfig:
    seed: int = 0
    timeout: float = 720.0
    max_iterations: int = 50
    walk: bool = True
    reduce: bool = True
    smt: bool = True
    # step 3 alone; the SMT reduction rules and atom simplification stay on
    smt_prove: bool = True
    one_safe: bool = False
    solver: Optional[str] = None
    walk_steps: int = 100_000
    walk_runs: int = 4
    replay_steps: int = 10_000
    replay_runs: int = 16
    real_timeout_ms: int = 5000
    int_timeout_ms: int = 15000
    max_product: int = 32
    fork_depth: int = 5


@dataclass
class Counterexample:
    """A violating execution, stated on the net as it was when found.

    ``reduction`` is the serialized reduction log at that moment; an empty
    log means the trace runs on the original net.
    """
    prop: str
    trace: List[str]
    marking: Dict[str, int]
    reduction: str = ""

    @property
    def on_original(self) -> bool:
        return not self.reduction


@dataclass
class SolveResult:
    ps: PropertySet
    net: SparseNet
    reduction: Reduction
    counterexamples: Dict[str, Counterexample] = field(default_factory=dict)
    iterations: int = 0
    events: List[Tuple[int, str, str]] = field(default_factory=list)
    timed_out: bool = False

    def report(self) -> VerdictReport:
        return VerdictReport.from_properties(self.ps)


def invariant_of(prop: Property, net: SparseNet) -> Formula:
    """Deadlock invariants follow the current transitions of the net."""
    if prop.kind == DEADLOCK:
        return deadlock_invariant(net)
    return prop.formula


def snapshot(net: SparseNet, ps: PropertySet) -> tuple:
    return (net.structure(), len(net.place_names), len(net.trans_names),
            tuple((p.name, p.status, p.formula) for p in ps))


def progress_meter(before: tuple, after: tuple) -> bool:
    """True iff a property closed, a node changed, or an atom was rewritten."""
    return before != after


def simplify_atoms(net: SparseNet, ps: PropertySet, config: Optional[SmtConfig] = None,
                   analysis: Optional[Analysis] = None,
                   tried: Optional[set] = None) -> int:
    """Replace atoms that keep their initial value by that value.

    ``tried`` collects atoms already queried on this net snapshot so that a
    later call can skip them.
    """
    analysis = analysis or Analysis.of(net)
    m0 = net.initial_marking()
    proved: Dict[Atom, bool] = {}
    for prop in ps.open():
        if prop.kind == DEADLOCK:
            continue
        for a in atoms(prop.formula):
            if a in proved or (tried is not None and a in tried):
                continue
            if tried is not None:
                tried.add(a)
            v0 = evaluate(a, m0)
            verdict = check_safety(net, a if v0 else negate(a), config, analysis=analysis)
            if verdict.proved:
                proved[a] = v0
    if not proved:
        return 0
    count = 0
    for prop in ps.open():
        if prop.kind == DEADLOCK:
            continue
        new = map_atoms(prop.formula, lambda a: Const(proved[a]) if a in proved else a)
        if new != prop.formula:
            count += 1
            prop.formula = new
            if isinstance(new, Const):
                prop.close(new.value, "SMT")
    return count


class Solver:
    def __init__(self, net: SparseNet, ps: PropertySet, config: SolveConfig):
        self.config = config
        self.net = net.copy()
        self.ps = ps
        mode = DEADLOCK_MODE if ps.is_deadlock else SAFETY
        self.red = Reduction(self.net, ps, mode=mode, max_product=config.max_product,
                             fork_depth=config.fork_depth)
        self.deadline = time.monotonic() + config.timeout
        self.result = SolveResult(ps, self.net, self.red)
        self.iteration = 0
        self._tried_atoms: set = set()
        self._tried_key = None

    # ------------------------------------------------------------------
    # helpers

    def event(self, step: str, detail: str) -> None:
        self.result.events.append((self.iteration, step, detail))
        log.info("iter %d %s: %s", self.iteration, step, detail)

    def expired(self) -> bool:
        if time.monotonic() > self.deadline:
            self.result.timed_out = True
            return True
        return False

    def done(self) -> bool:
        return not self.ps.open()

    def smt_config(self, escalate: bool = True) -> SmtConfig:
        one_safe = self.config.one_safe and not (_UNSAFE_RULES & set(self.red.trace.rules()))
        return SmtConfig(real_timeout_ms=self.config.real_timeout_ms,
                         int_timeout_ms=self.config.int_timeout_ms, one_safe=one_safe,
                         escalate=escalate, solver=self.config.solver,
                         deadline=self.deadline)

    def walk_config(self, salt: int = 0, replay: bool = False, **kw) -> WalkConfig:
        c = self.config
        steps, runs = (c.replay_steps, c.replay_runs) if replay else (c.walk_steps, c.walk_runs)
        seed = (c.seed * 1_000_003 + self.iteration * 7919 + salt) & (2**64 - 1)
        return WalkConfig(seed=seed, max_steps=steps, max_restarts=runs,
                          deadline=self.deadline, **kw)

    def refute(self, prop: Property, found: WalkResult, technique: str) -> None:
        prop.close(False, technique)
        net = self.net
        self.result.counterexamples[prop.name] = Counterexample(
            prop.name, [net.trans_names[t] for t in found.trace],
            {net.place_names[p]: v for p, v in sorted(found.marking.items())},
            self.red.trace.serialize())

    # ------------------------------------------------------------------
    # steps

    def quick_conclusion(self) -> None:
        """Deadlock mode: rules 6 and 19 can decide the query before any walk."""
        if self.red.deadlock_mode and self.config.reduce:
            if structural.r6_source_transition(self.red) or graph.r19_prefix_deadlock(self.red):
                self.event("reduce", "quick conclusion: " + " ".join(self.red.trace.rules()))

    def step_walk(self) -> None:
        if self.red.deadlock_mode:
            found = deadlock_walk(self.net, self.walk_config(heuristic=LEAST_ENABLED))
            if found is not None:
                for prop in self.ps.open():
                    self.refute(prop, found, "WALK")
                self.event("walk", f"deadlock after {len(found.trace)} steps")
            return
        salt = 0
        while not self.done() and not self.expired():
            open_props = self.ps.open()
            preds = [(p, compile_predicate(p.violation())) for p in open_props]
            supp = sorted(self.ps.support())
            found = random_walk(self.net, lambda m: any(f(m) for _, f in preds),
                                self.walk_config(salt), visible_places=supp)
            if found is None:
                return
            m = [0] * len(self.net.place_names)
            for p, v in found.marking.items():
                m[p] = v
            hit = [p for p, f in preds if f(m)]
            for prop in hit:
                self.refute(prop, found, "WALK")
            self.event("walk", "refuted " + " ".join(p.name for p in hit))
            salt += 1

    def step_reduce(self) -> None:
        n = structural_pass(self.red)
        if n:
            self.event("reduce", f"{n} rule applications")

    def step_prove(self) -> List[Tuple[Property, object]]:
        candidates = []
        cfg = self.smt_config()
        analysis = Analysis.of(self.net)
        for prop in self.ps.open():
            if self.expired():
                break
            inv = invariant_of(prop, self.net)
            verdict = check_safety(self.net, inv, cfg, analysis=analysis)
            if verdict.proved:
                prop.close(True, "SMT")
                self.event("prove", f"{prop.name} at {verdict.layer}")
            elif verdict.outcome == CANDIDATE:
                candidates.append((prop, verdict))
        return candidates

    def step_replay(self, candidates) -> None:
        for i, (prop, verdict) in enumerate(candidates):
            if not prop.is_open or self.expired():
                continue
            inv = invariant_of(prop, self.net)
            pred = compile_predicate(negate(inv))
            found = parikh_replay(self.net, verdict.parikh, pred,
                                  self.walk_config(i, replay=True), classes=verdict.classes)
            if found is not None:
                self.refute(prop, found, "WALK")
                self.event("replay", f"{prop.name} refuted")

    def step_smt_rules(self) -> None:
        n = smt_pass(self.red, self.smt_config(escalate=False))
        if n:
            self.event("smt-rules", f"{n} nodes discarded")

    def step_simplify(self) -> None:
        key = self.net.structure()
        if key != self._tried_key:
            self._tried_atoms = set()
            self._tried_key = key
        n = simplify_atoms(self.net, self.ps, self.smt_config(), tried=self._tried_atoms)
        if n:
            self.event("simplify", f"{n} properties rewritten")

    # ------------------------------------------------------------------

    def run(self) -> SolveResult:
        c = self.config
        self.quick_conclusion()
        while not self.done() and self.iteration < c.max_iterations and not self.expired():
            self.iteration += 1
            before = snapshot(self.net, self.ps)
            if c.walk:
                self.step_walk()
            if c.reduce and not self.done():
                self.step_reduce()
            candidates = []
            if c.smt and c.smt_prove and not self.done() and not self.expired():
                candidates = self.step_prove()
            if c.walk and candidates and not self.done():
                self.step_replay(candidates)
            if c.smt and c.reduce and not self.done() and not self.expired():
                self.step_smt_rules()
            if c.smt and not self.done() and not self.expired():
                self.step_simplify()
            if not progress_meter(before, snapshot(self.net, self.ps)):
                break
        self.result.iterations = self.iteration
        return self.result


def solve(net: SparseNet, ps: PropertySet, config: Optional[SolveConfig] = None) -> SolveResult:
    """Decide as many properties of ``ps`` as possible; ``net`` is not modified."""
    return Solver(net, ps, config or SolveConfig()).run()
