"""Explicit-state ground truth for small nets.

Deliberately naive: breadth-first search over full markings, no symbolic
tricks. Every rule and verdict test leans on this module.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from petrired.net import SparseNet
from petrired.props import DEADLOCK as DEADLOCK_KIND, Formula, PropertySet, compile_predicate

DEFAULT_CAP = 10**6
SAFETY = "safety"
DEADLOCK = "deadlock"


class StateCapExceeded(RuntimeError):
    pass


@dataclass
class StateSpace:
    places: List[int]                 # alive place indices, marking tuple order
    markings: Set[Tuple[int, ...]]
    deadlocks: Set[Tuple[int, ...]]

    def as_dicts(self, tuples: Iterable[Tuple[int, ...]]) -> List[Dict[int, int]]:
        return [{p: v for p, v in zip(self.places, m) if v} for m in tuples]

    def dense(self, m: Tuple[int, ...], size: int) -> List[int]:
        out = [0] * size
        for p, v in zip(self.places, m):
            out[p] = v
        return out


def enumerate_states(net: SparseNet, cap: int = DEFAULT_CAP) -> StateSpace:
    """BFS from m0. Raises StateCapExceeded beyond ``cap`` markings."""
    places = list(net.places())
    pos = {p: i for i, p in enumerate(places)}
    trans = []
    for t in net.transitions():
        pre = tuple((pos[p], w) for p, w in net.pre[t].items())
        delta = tuple((pos[p], d) for p, d in net.effect(t).items())
        trans.append((pre, delta))
    start = tuple(net.m0[p] for p in places)
    seen = {start}
    dead = set()
    queue = deque([start])
    while queue:
        m = queue.popleft()
        succ = False
        for pre, delta in trans:
            if all(m[i] >= w for i, w in pre):
                succ = True
                nm = list(m)
                for i, d in delta:
                    nm[i] += d
                nt = tuple(nm)
                if nt not in seen:
                    if len(seen) >= cap:
                        raise StateCapExceeded(f"more than {cap} states")
                    seen.add(nt)
                    queue.append(nt)
        if not succ:
            dead.add(m)
    return StateSpace(places, seen, dead)


def successors(net: SparseNet, m: Mapping[int, int]) -> Set[FrozenSet]:
    """Successor markings of ``m`` (as frozensets of items) by brute force."""
    out = set()
    for t in net.transitions():
        if all(m.get(p, 0) >= w for p, w in net.pre[t].items()):
            nm = dict(m)
            for p, w in net.pre[t].items():
                nm[p] = nm.get(p, 0) - w
            for p, w in net.post[t].items():
                nm[p] = nm.get(p, 0) + w
            out.add(frozenset((p, v) for p, v in nm.items() if v))
    return out


def holds_invariant(net: SparseNet, formula: Formula, cap: int = DEFAULT_CAP) -> bool:
    space = enumerate_states(net, cap)
    pred = compile_predicate(formula)
    size = len(net.place_names)
    return all(pred(space.dense(m, size)) for m in space.markings)


def find_violation(net: SparseNet, formula: Formula,
                   cap: int = DEFAULT_CAP) -> Optional[Dict[int, int]]:
    space = enumerate_states(net, cap)
    pred = compile_predicate(formula)
    size = len(net.place_names)
    for m in sorted(space.markings):
        if not pred(space.dense(m, size)):
            return {p: v for p, v in zip(space.places, m) if v}
    return None


def has_deadlock(net: SparseNet, cap: int = DEFAULT_CAP) -> bool:
    return bool(enumerate_states(net, cap).deadlocks)


def projection(net: SparseNet, names: Iterable[str], cap: int = DEFAULT_CAP,
               fixed: Optional[Mapping[str, int]] = None) -> Set[Tuple[int, ...]]:
    """Reachable markings projected on the named places.

    Places absent from ``net`` must appear in ``fixed`` with their constant value.
    """
    names = list(names)
    fixed = dict(fixed or {})
    index = net.place_index()
    space = enumerate_states(net, cap)
    pos = {p: i for i, p in enumerate(space.places)}
    getters = []
    for n in names:
        if n in index:
            getters.append(("var", pos[index[n]]))
        elif n in fixed:
            getters.append(("const", fixed[n]))
        else:
            raise KeyError(f"place {n} missing from reduced net and not fixed")
    out = set()
    for m in space.markings:
        out.add(tuple(m[v] if kind == "var" else v for kind, v in getters))
    return out


def equivalent(original: SparseNet, reduced: SparseNet, supp: Iterable[str],
               mode: str = SAFETY, cap: int = DEFAULT_CAP,
               fixed: Optional[Mapping[str, int]] = None) -> Optional[bool]:
    """Compare two nets; None when the state cap is exceeded (inconclusive).

    ``supp`` holds place names. Safety mode compares reachable projections on
    the support, deadlock mode compares the existence of a reachable deadlock.
    """
    try:
        if mode == DEADLOCK:
            return has_deadlock(original, cap) == has_deadlock(reduced, cap)
        supp = sorted(set(supp))
        return projection(original, supp, cap) == projection(reduced, supp, cap, fixed)
    except StateCapExceeded:
        return None


def verdicts(net: SparseNet, ps: PropertySet, cap: int = DEFAULT_CAP) -> Dict[str, bool]:
    """Reported outcome of every property (EF and deadlock already flipped)."""
    space = enumerate_states(net, cap)
    size = len(net.place_names)
    dense = [space.dense(m, size) for m in space.markings]
    out = {}
    for prop in ps:
        if prop.kind == DEADLOCK_KIND:
            holds = not space.deadlocks
        else:
            pred = compile_predicate(prop.formula)
            holds = all(pred(m) for m in dense)
        out[prop.name] = holds != prop.flip
    return out
