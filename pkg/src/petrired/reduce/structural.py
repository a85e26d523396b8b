"""Structural reduction rules 1 to 17 and agglomeration.

Every rule takes a :class:`Reduction`, applies itself wherever its pattern
matches (one trace entry per application) and returns whether anything
changed. A rule that does not match leaves the net untouched.

Rules that only hold for one property kind check ``red.mode`` themselves:
rules 4, 5 and 16 are safety-only, rule 6 is deadlock-only.
"""

from __future__ import annotations

from math import gcd
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from petrired.net import SparseNet
from petrired.reduce.context import Reduction


def _alive_t(net: SparseNet, t: int) -> bool:
    return net.t_alive[t]


def _scaled_key(vecs: Tuple[Dict[int, int], ...]) -> Tuple[tuple, int]:
    """Canonical form of a tuple of sparse vectors up to a positive factor."""
    g = 0
    for v in vecs:
        for w in v.values():
            g = gcd(g, w)
    if g == 0:
        return tuple(() for _ in vecs), 0
    return tuple(tuple(sorted((k, w // g) for k, w in v.items())) for v in vecs), g


def _geq(big: Dict[int, int], small: Dict[int, int]) -> bool:
    return all(big.get(p, 0) >= w for p, w in small.items())


def _effect_key(net: SparseNet, t: int) -> tuple:
    return tuple(sorted(net.effect(t).items()))


# ----------------------------------------------------------------------
# transition rules


def r1_equal_transitions(red: Reduction, among: Optional[Set[int]] = None) -> bool:
    """Discard t when W-(t) = k W-(t') and W+(t) = k W+(t') for some k >= 1.

    ``among`` restricts the discarded transitions to a given set (used after
    agglomeration on the freshly created transitions).
    """
    net = red.net
    groups: Dict[tuple, List[Tuple[int, int]]] = {}
    for t in net.transitions():
        key, g = _scaled_key((net.pre[t], net.post[t]))
        groups.setdefault(key, []).append((g, t))
    changed = False
    for members in groups.values():
        if len(members) < 2:
            continue
        members.sort()
        for i, (g, t) in enumerate(members):
            if among is not None and t not in among:
                continue
            for g2, t2 in members[:i]:
                if not net.t_alive[t2]:
                    continue
                if g2 == 0 or g % g2 == 0:
                    with red.record("r1"):
                        net.drop_transition(t)
                    changed = True
                    break
    return changed


def r2_dominated_transition(red: Reduction) -> bool:
    """Discard t when t' has the same effect and needs no more tokens."""
    net = red.net
    groups: Dict[tuple, List[int]] = {}
    for t in net.transitions():
        groups.setdefault(_effect_key(net, t), []).append(t)
    changed = False
    for members in groups.values():
        if len(members) < 2:
            continue
        for t in members:
            for t2 in members:
                if t2 == t or not net.t_alive[t2] or not net.t_alive[t]:
                    continue
                if not _geq(net.pre[t], net.pre[t2]):
                    continue
                if net.pre[t] == net.pre[t2] and t < t2:
                    continue  # identical: the higher index goes
                with red.record("r2"):
                    net.drop_transition(t)
                changed = True
                break
    return changed


def r3_redundant_composition(red: Reduction) -> bool:
    """Discard t when t1.t2 has the same effect and t enables t1 then t2."""
    net = red.net
    by_effect: Dict[tuple, List[int]] = {}
    for t in net.transitions():
        by_effect.setdefault(_effect_key(net, t), []).append(t)
    changed = False
    for t in list(net.transitions()):
        eff = net.effect(t)
        done = False
        for t1 in list(net.transitions()):
            if t1 == t or not _geq(net.pre[t], net.pre[t1]):
                continue
            rest = dict(eff)
            for p, d in net.effect(t1).items():
                v = rest.get(p, 0) - d
                if v:
                    rest[p] = v
                else:
                    rest.pop(p, None)
            for t2 in by_effect.get(tuple(sorted(rest.items())), ()):
                if t2 == t or not net.t_alive[t2]:
                    continue
                if _geq(net.post[t1], net.pre[t2]):
                    with red.record("r3"):
                        net.drop_transition(t)
                    changed = done = True
                    break
            if done:
                break
    return changed


def r4_neutral_transition(red: Reduction) -> bool:
    """Safety only: discard t with W-(t) = W+(t)."""
    if red.deadlock_mode:
        return False
    net = red.net
    changed = False
    for t in list(net.transitions()):
        if net.pre[t] == net.post[t]:
            with red.record("r4"):
                net.drop_transition(t)
            changed = True
    return changed


def r5_sink_transition(red: Reduction) -> bool:
    """Safety only: discard a stuttering transition without outputs."""
    if red.deadlock_mode:
        return False
    net = red.net
    stutter = red.stutter()
    changed = False
    for t in list(net.transitions()):
        if not net.post[t] and t in stutter:
            with red.record("r5"):
                net.drop_transition(t)
            changed = True
    return changed


def r6_source_transition(red: Reduction) -> bool:
    """Deadlock only: a transition without inputs is always enabled.

    The net shrinks to that single transition and no places; the deadlock
    property is decided FALSE.
    """
    if not red.deadlock_mode or red.deadlock is not None:
        return False
    net = red.net
    src = next((t for t in net.transitions() if not net.pre[t]), None)
    if src is None:
        return False
    with red.record("r6"):
        for t in list(net.transitions()):
            if t != src:
                net.drop_transition(t)
        for p in list(net.places()):
            net.drop_place(p)
    red.conclude_deadlock(False)
    return True


# ----------------------------------------------------------------------
# place rules


def r7_equal_places(red: Reduction) -> bool:
    """Discard p when (m0, pre row, post row) of p is k times that of p'."""
    net = red.net
    supp = red.supp()
    groups: Dict[tuple, List[Tuple[int, int]]] = {}
    for p in net.places():
        if p in supp:
            continue
        key, g = _scaled_key(({0: net.m0[p]} if net.m0[p] else {},
                              net.pre_t[p], net.post_t[p]))
        groups.setdefault(key, []).append((g, p))
    changed = False
    for members in groups.values():
        if len(members) < 2:
            continue
        members.sort()
        for i, (g, p) in enumerate(members):
            for g2, p2 in members[:i]:
                if not net.p_alive[p2]:
                    continue
                if g2 == 0 or g % g2 == 0:
                    with red.record("r7"):
                        net.drop_place(p)
                    changed = True
                    break
    return changed


def r8_sink_place(red: Reduction) -> bool:
    """Discard a place outside the support that no transition consumes."""
    net = red.net
    supp = red.supp()
    changed = False
    for p in list(net.places()):
        if p not in supp and not net.pre_t[p]:
            with red.record("r8"):
                net.drop_place(p)
            changed = True
    return changed


def r9_constant_place(red: Reduction) -> bool:
    """A place with equal pre and post rows keeps its initial marking.

    Consumers needing more than m0(p) are dead; the place goes and property
    atoms read the constant instead.
    """
    net = red.net
    changed = False
    for p in list(net.places()):
        if net.pre_t[p] != net.post_t[p]:
            continue
        k = net.m0[p]
        with red.record("r9") as entry:
            for t in [t for t, w in net.pre_t[p].items() if w > k]:
                net.drop_transition(t)
            red.substitute({p: k}, entry)
            net.drop_place(p)
        changed = True
    return changed


def unmarked_siphon(net: SparseNet) -> Set[int]:
    """Largest siphon of initially empty places (two-step fixpoint)."""
    S = {p for p in net.places() if net.m0[p] == 0}
    T = set(net.transitions())
    while True:
        before = (len(S), len(T))
        T = {t for t in T if any(p in S for p in net.post[t])}
        for t in list(T):
            if not any(p in S for p in net.pre[t]):
                T.discard(t)
                S -= set(net.post[t])
        T = {t for t in T if any(p in S for p in net.post[t])}
        if (len(S), len(T)) == before:
            return S


def r10_unmarked_siphon(red: Reduction) -> bool:
    """Places of an unmarked siphon stay empty forever; drop them and their consumers."""
    net = red.net
    S = unmarked_siphon(net)
    if not S:
        return False
    with red.record("r10") as entry:
        for t in sorted({t for p in S for t in net.pre_t[p]}):
            net.drop_transition(t)
        red.substitute({p: 0 for p in S}, entry)
        for p in sorted(S):
            net.drop_place(p)
    return True


def r11_bounded_place(red: Reduction) -> bool:
    """A place never fed beyond m0(p) cannot enable consumers needing more."""
    net = red.net
    changed = False
    for p in list(net.places()):
        ts = set(net.pre_t[p]) | set(net.post_t[p])
        if any(net.effect_at(p, t) > 0 for t in ts):
            continue
        dead = [t for t, w in net.pre_t[p].items() if w > net.m0[p]]
        if dead:
            with red.record("r11"):
                for t in dead:
                    net.drop_transition(t)
            changed = True
    return changed


def _induced(net: SparseNet, q: int, tf: int, depth: int, limit: int,
             seen: FrozenSet[int]) -> bool:
    """Tokens ever put in q never exceed the number of tf firings.

    Clause 1: tf is the only feeder of q, weight 1. Clause 2: q's only feeder
    t' (weight 1) consumes some place that is itself induced by tf.
    Chain places must start empty.
    """
    if depth > limit or q in seen or net.m0[q] != 0:
        return False
    feeders = net.post_t[q]
    if len(feeders) != 1:
        return False
    (t1, w), = feeders.items()
    if w != 1:
        return False
    if t1 == tf:
        return True
    return any(_induced(net, p2, tf, depth + 1, limit, seen | {q})
               for p2 in net.pre[t1] if p2 != q)


def r12_fork_join(red: Reduction) -> bool:
    """Fork/join: p is implicit when its join partner p' is induced by the fork."""
    net = red.net
    supp = red.supp()
    for p in list(net.places()):
        if p in supp:
            continue
        if len(net.post_t[p]) != 1 or len(net.pre_t[p]) != 1:
            continue
        (tf, wf), = net.post_t[p].items()
        (tj, wj), = net.pre_t[p].items()
        if wf != 1 or wj != 1 or tf == tj:
            continue
        out = net.post[tf]
        if len(out) != 2 or any(w != 1 for w in out.values()):
            continue
        ins = net.pre[tj]
        if len(ins) != 2 or any(w != 1 for w in ins.values()):
            continue
        p1 = next(q for q in ins if q != p)
        if _induced(net, p1, tf, 1, red.fork_depth, frozenset({p})):
            with red.record("r12"):
                net.drop_place(p)
            return True
    return False


def _swap(vec: Dict[int, int], a: int, b: int) -> Dict[int, int]:
    out = {}
    for k, w in vec.items():
        out[b if k == a else a if k == b else k] = w
    return out


def _mirror(net: SparseNet, p: int, p2: int) -> bool:
    """Consumers of p and of p2 correspond one to one up to swapping p and p2."""
    c1, c2 = list(net.pre_t[p]), list(net.pre_t[p2])
    if len(c1) != len(c2) or not c1:
        return False
    if any(w != 1 for w in net.pre_t[p].values()) or any(w != 1 for w in net.pre_t[p2].values()):
        return False
    if set(c1) & set(c2):
        return False
    pool = list(c2)
    for t in c1:
        pre, post = _swap(net.pre[t], p, p2), _swap(net.post[t], p, p2)
        for i, t2 in enumerate(pool):
            if net.pre[t2] == pre and net.post[t2] == post:
                del pool[i]
                break
        else:
            return False
    return True


def r13_future_equivalent(red: Reduction) -> bool:
    """Merge p' into p when a token in either place enables mirrored behaviour."""
    net = red.net
    supp = red.supp()
    cands = [p for p in net.places() if p not in supp and net.pre_t[p]]
    for p in cands:
        for p2 in cands:
            if p2 <= p or not net.p_alive[p] or not net.p_alive[p2]:
                continue
            if not _mirror(net, p, p2):
                continue
            with red.record("r13"):
                for t, w in sorted(net.post_t[p2].items()):
                    net.set_post(p, t, net.post[t].get(p, 0) + w)
                if net.m0[p2]:
                    net.set_m0(p, net.m0[p] + net.m0[p2])
                for t in sorted(net.pre_t[p2]):
                    net.drop_transition(t)
                net.drop_place(p2)
            return True
    return False


# ----------------------------------------------------------------------
# agglomeration


def agglomeration_ratio(net: SparseNet, p: int) -> Optional[Dict[Tuple[int, int], int]]:
    """k = W+(p,h) / W-(p,f) for every feeder h and consumer f, if all natural."""
    ks = {}
    for h, wh in net.post_t[p].items():
        for f, wf in net.pre_t[p].items():
            if wh % wf:
                return None
            ks[(h, f)] = wh // wf
    return ks


def agglomerate(red: Reduction, p: int, rule: str,
                ks: Optional[Dict[Tuple[int, int], int]] = None) -> List[int]:
    """Replace feeders h and consumers f of p by every composition h.f^k.

    The caller has checked the rule's conditions (m0(p) = 0, natural ratios,
    product size). Returns the created transitions, after which rule 1 runs
    on them.
    """
    net = red.net
    if ks is None:
        ks = agglomeration_ratio(net, p)
        if ks is None:
            raise ValueError("agglomeration ratio is not a natural number")
    feeders = sorted(net.post_t[p])
    consumers = sorted(net.pre_t[p])
    created = []
    with red.record(rule):
        for h in feeders:
            for f in consumers:
                k = ks[(h, f)]
                pre = dict(net.pre[h])
                post = dict(net.post[h])
                for q, w in net.pre[f].items():
                    pre[q] = pre.get(q, 0) + k * w
                for q, w in net.post[f].items():
                    post[q] = post.get(q, 0) + k * w
                pre.pop(p, None)
                post.pop(p, None)
                name = net.fresh_trans_name(f"{net.trans_names[h]}.{net.trans_names[f]}")
                created.append(net.add_transition(name, pre, post))
        for t in feeders + consumers:
            net.drop_transition(t)
        net.drop_place(p)
    r1_equal_transitions(red, among=set(created))
    return [t for t in created if net.t_alive[t]]


def _agglomerable_place(net: SparseNet, p: int, supp: Set[int], limit: int) -> bool:
    feeders, consumers = net.post_t[p], net.pre_t[p]
    if p in supp or net.m0[p] != 0 or not feeders or not consumers:
        return False
    if set(feeders) & set(consumers):
        return False
    return len(feeders) * len(consumers) <= limit


def _pre_agglomerable(net: SparseNet, p: int, stutter: Set[int], strict: bool) -> bool:
    for h, w in net.post_t[p].items():
        if w != 1 or h not in stutter or net.post[h] != {p: 1}:
            return False
        if strict:
            # divergent free: h consumes some place (other than p) strictly
            if not any(net.post[h].get(q, 0) < w2 for q, w2 in net.pre[h].items() if q != p):
                return False
            # quasi-persistent: h is the only consumer of each of its inputs
            if any(list(net.pre_t[q]) != [h] for q in net.pre[h]):
                return False
    return all(w == 1 for w in net.pre_t[p].values())


def r14_pre_agglomeration(red: Reduction) -> bool:
    """Fire the feeder h only together with a consumer f (h is persistent)."""
    return _pre_agglo(red, strict=True)


def r16_free_agglomeration(red: Reduction) -> bool:
    """Safety only: as rule 14 without divergence and persistence conditions."""
    if red.deadlock_mode:
        return False
    return _pre_agglo(red, strict=False)


def _pre_agglo(red: Reduction, strict: bool) -> bool:
    net = red.net
    supp = red.supp()
    stutter = red.stutter(supp)
    for p in list(net.places()):
        if not _agglomerable_place(net, p, supp, red.max_product):
            continue
        if _pre_agglomerable(net, p, stutter, strict):
            agglomerate(red, p, "r14" if strict else "r16")
            return True
    return False


def r15_post_agglomeration(red: Reduction) -> bool:
    """Once p is marked its consumers (whose only input is p) can fire at once."""
    net = red.net
    supp = red.supp()
    stutter = red.stutter(supp)
    for p in list(net.places()):
        if not _agglomerable_place(net, p, supp, red.max_product):
            continue
        consumers = net.pre_t[p]
        if any(f not in stutter or list(net.pre[f]) != [p] for f in consumers):
            continue
        ks = agglomeration_ratio(net, p)
        if ks is None or min(ks.values()) < 1:
            continue
        if len(consumers) > 1 and any(k != 1 for k in ks.values()):
            continue
        agglomerate(red, p, "r15", ks)
        return True
    return False


def _reaches(net: SparseNet, sources: Set[int], target: int) -> bool:
    """Is ``target`` reachable from ``sources`` in the place flow graph?"""
    seen = set(sources)
    stack = list(sources)
    while stack:
        q = stack.pop()
        if q == target:
            return True
        for t in net.pre_t[q]:
            for q2 in net.post[t]:
                if q2 not in seen:
                    seen.add(q2)
                    stack.append(q2)
    return False


def r17_controlling_marked_place(red: Reduction) -> bool:
    """Empty a marked place whose only consumer t needs nothing else.

    m0 becomes m0 + k We(t) with m0(p) = k W-(p,t). Only applied when p is
    not reachable again from t's outputs, so tokens are never moved back and
    forth forever.
    """
    net = red.net
    stutter = red.stutter()
    for p in list(net.places()):
        if net.m0[p] == 0 or len(net.pre_t[p]) != 1:
            continue
        (t, w), = net.pre_t[p].items()
        if list(net.pre[t]) != [p] or p in net.post[t] or t not in stutter:
            continue
        if net.m0[p] % w:
            continue
        if _reaches(net, set(net.post[t]), p):
            continue
        k = net.m0[p] // w
        with red.record("r17"):
            for q, d in sorted(net.effect(t).items()):
                net.set_m0(q, net.m0[q] + k * d)
        return True
    return False


TRANSITION_RULES = (r1_equal_transitions, r2_dominated_transition, r3_redundant_composition,
                    r4_neutral_transition, r5_sink_transition)
PLACE_RULES = (r7_equal_places, r8_sink_place)
