"""Rules 21 and 22: reductions whose condition is an SMT query.

Both use the short real-domain budget and the layers BASE, FLOWS and
STATE_EQ; an UNSAT answer in the reals is already sound, so there is no
integer escalation. Unknown answers skip the node.
"""

from __future__ import annotations

import dataclasses
from typing import List, Optional, Sequence

from petrired.net import SparseNet
from petrired.props import Formula, atom, conj, disj, enabled_formula
from petrired.reduce.context import Reduction
from petrired.smt.over import BASE, FLOWS, STATE_EQ, Analysis, SmtConfig, check_predicate

SMT_RULE_LAYERS = (BASE, FLOWS, STATE_EQ)
R21_BATCH = 50


def _config(config: Optional[SmtConfig]) -> SmtConfig:
    return dataclasses.replace(config or SmtConfig(), escalate=False)


def restriction_formula(net: SparseNet, p: int) -> Formula:
    """Some consumer of p is enabled except for a lack of tokens in p."""
    parts = []
    for t, w in sorted(net.pre_t[p].items()):
        others = [atom({q: 1}, ">=", wq) for q, wq in sorted(net.pre[t].items()) if q != p]
        parts.append(conj([atom({p: 1}, "<", w)] + others))
    return disj(parts)


def r21_implicit_place(red: Reduction, config: Optional[SmtConfig] = None,
                       layers: Sequence[str] = SMT_RULE_LAYERS,
                       batch: int = R21_BATCH) -> List[int]:
    """Discard places that never block any of their consumers.

    Candidates are tried by decreasing number of consumers, then by
    decreasing index; constraints are rebuilt after each removal since two
    places can be implicit only with respect to each other.
    """
    net = red.net
    cfg = _config(config)
    supp = red.supp()
    cands = sorted((p for p in net.places() if p not in supp),
                   key=lambda p: (-len(net.pre_t[p]), -p))[:batch]
    dropped: List[int] = []
    analysis = Analysis.of(net)
    for p in cands:
        if not net.p_alive[p]:
            continue
        verdict = check_predicate(net, restriction_formula(net, p), cfg, layers=layers,
                                  analysis=analysis, supp=set())
        if verdict.proved:
            with red.record("r21"):
                net.drop_place(p)
            dropped.append(p)
            analysis = Analysis.of(net)
    return dropped


def r22_dead_transition(red: Reduction, config: Optional[SmtConfig] = None,
                        layers: Sequence[str] = SMT_RULE_LAYERS) -> List[int]:
    """Discard transitions that are never enabled in the over-approximation.

    All queries run against the same snapshot: removing a never-enabled
    transition does not change the reachable markings.
    """
    net = red.net
    cfg = _config(config)
    analysis = Analysis.of(net)
    dead = []
    for t in list(net.transitions()):
        if not net.pre[t]:
            continue
        verdict = check_predicate(net, enabled_formula(net, t), cfg, layers=layers,
                                  analysis=analysis, supp=set())
        if verdict.proved:
            dead.append(t)
    for t in dead:
        with red.record("r22"):
            net.drop_transition(t)
    return dead
