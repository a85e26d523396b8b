"""Fixpoint driver for the reduction rules."""

from __future__ import annotations

from typing import Callable, Optional, Sequence

from petrired.reduce import graph, structural as st
from petrired.reduce.context import Reduction
from petrired.reduce.smtrules import r21_implicit_place, r22_dead_transition
from petrired.smt.over import SmtConfig

Rule = Callable[[Reduction], bool]

STRUCTURAL_ORDER: Sequence[Rule] = (
    st.r9_constant_place, st.r10_unmarked_siphon, st.r11_bounded_place,
    st.r1_equal_transitions, st.r2_dominated_transition, st.r3_redundant_composition,
    st.r4_neutral_transition, st.r5_sink_transition,
    st.r7_equal_places, st.r8_sink_place,
    st.r12_fork_join, st.r13_future_equivalent,
    st.r14_pre_agglomeration, st.r15_post_agglomeration, st.r16_free_agglomeration,
    st.r17_controlling_marked_place,
)
GRAPH_ORDER: Sequence[Rule] = (graph.r18_free_scc, graph.r19_prefix_deadlock,
                               graph.r20_prefix_safety)

RULES = {f.__name__.split("_", 1)[0]: f for f in (st.r6_source_transition, *STRUCTURAL_ORDER,
                                                   *GRAPH_ORDER)}


def _settled(red: Reduction) -> bool:
    if red.deadlock_mode:
        return red.deadlock is not None
    return red.ps is not None and not red.ps.open()


def structural_pass(red: Reduction, rules: Optional[Sequence[Rule]] = None,
                    max_rounds: int = 10_000) -> int:
    """Apply rules 1 to 20 until none applies; returns the number of applications.

    After any successful application the scan restarts from the cheapest
    rule, so graph rules only run once rules 1 to 17 are at a fixpoint.
    """
    order = list(rules) if rules is not None else [*STRUCTURAL_ORDER, *GRAPH_ORDER]
    count = 0
    for _ in range(max_rounds):
        if _settled(red):
            break
        if red.deadlock_mode and st.r6_source_transition(red):
            count += 1
            break
        if red.deadlock_mode and red.net.num_transitions == 0:
            red.conclude_deadlock(True)
            break
        changed = False
        for rule in order:
            if _settled(red):
                break
            if rule(red):
                count += 1
                changed = True
                break
        if not changed:
            break
    return count


def smt_pass(red: Reduction, config: Optional[SmtConfig] = None) -> int:
    """Rules 21 and 22; returns the number of discarded nodes."""
    if _settled(red):
        return 0
    n = len(r22_dead_transition(red, config))
    n += len(r21_implicit_place(red, config))
    return n


def full_reduction(red: Reduction, smt: bool = False,
                   config: Optional[SmtConfig] = None) -> int:
    """Structural fixpoint, optionally interleaved with the SMT rules."""
    total = structural_pass(red)
    while smt and not _settled(red):
        n = smt_pass(red, config)
        if not n:
            break
        total += n + structural_pass(red)
    return total
