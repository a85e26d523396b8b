"""Place-graph abstractions: SCCs, prefix closure and rules 18 to 20."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Set

from petrired.net import SparseNet
from petrired.reduce.context import Reduction
from petrired.reduce.structural import r1_equal_transitions, r4_neutral_transition


@dataclass
class PlaceGraph:
    nodes: Set[int] = field(default_factory=set)
    succ: Dict[int, Set[int]] = field(default_factory=dict)

    def add_edge(self, a: int, b: int) -> None:
        self.succ.setdefault(a, set()).add(b)

    def edges(self) -> Set[tuple]:
        return {(a, b) for a, bs in self.succ.items() for b in bs}

    def predecessors(self) -> Dict[int, Set[int]]:
        pred: Dict[int, Set[int]] = {n: set() for n in self.nodes}
        for a, bs in self.succ.items():
            for b in bs:
                pred.setdefault(b, set()).add(a)
        return pred


def scc(g: PlaceGraph) -> List[List[int]]:
    """Tarjan's algorithm, iterative; components in reverse topological order."""
    index: Dict[int, int] = {}
    low: Dict[int, int] = {}
    on_stack: Set[int] = set()
    stack: List[int] = []
    out: List[List[int]] = []
    counter = 0
    for root in sorted(g.nodes):
        if root in index:
            continue
        work = [(root, iter(sorted(g.succ.get(root, ()))))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in g.nodes:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(g.succ.get(w, ())))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def prefix_closure(g: PlaceGraph, s: Iterable[int]) -> Set[int]:
    """Smallest superset of ``s`` closed under graph predecessors."""
    pred = g.predecessors()
    out = set(s)
    stack = list(out)
    while stack:
        v = stack.pop()
        for u in pred.get(v, ()):
            if u not in out:
                out.add(u)
                stack.append(u)
    return out


# ----------------------------------------------------------------------
# graphs of a net


def free_graph(net: SparseNet, supp: Set[int]) -> PlaceGraph:
    """p -> p' when some t moves one token from p to p' and nothing else."""
    g = PlaceGraph({p for p in net.places() if p not in supp})
    for t in net.transitions():
        if len(net.pre[t]) == 1 and len(net.post[t]) == 1:
            (p, w1), = net.pre[t].items()
            (q, w2), = net.post[t].items()
            if w1 == 1 and w2 == 1 and p != q and p in g.nodes and q in g.nodes:
                g.add_edge(p, q)
    return g


def flow_graph(net: SparseNet) -> PlaceGraph:
    """Edge from every input place of a transition to each of its outputs."""
    g = PlaceGraph(set(net.places()))
    for t in net.transitions():
        for p in net.pre[t]:
            for q in net.post[t]:
                g.add_edge(p, q)
    return g


def effect_graph(net: SparseNet) -> PlaceGraph:
    """Edges p -> p' for p in pre(t), p' in post(t), p != p', t changing p'."""
    g = PlaceGraph(set(net.places()))
    for t in net.transitions():
        for q, w in net.post[t].items():
            if net.pre[t].get(q, 0) == w:
                continue
            for p in net.pre[t]:
                if p != q:
                    g.add_edge(p, q)
    return g


# ----------------------------------------------------------------------
# rules


def r18_free_scc(red: Reduction) -> bool:
    """Fuse each free SCC (size >= 2, outside the support) into one sum place."""
    net = red.net
    comps = [c for c in scc(free_graph(net, red.supp())) if len(c) >= 2]
    if not comps:
        return False
    for comp in comps:
        pre_row: Dict[int, int] = {}
        post_row: Dict[int, int] = {}
        for q in comp:
            for t, w in net.pre_t[q].items():
                pre_row[t] = pre_row.get(t, 0) + w
            for t, w in net.post_t[q].items():
                post_row[t] = post_row.get(t, 0) + w
        tokens = sum(net.m0[q] for q in comp)
        name = net.fresh_place_name("sum_" + net.place_names[comp[0]])
        with red.record("r18"):
            net.add_place(name, tokens, pre_row, post_row)
            for q in comp:
                net.drop_place(q)
    r1_equal_transitions(red)
    r4_neutral_transition(red)
    return True


def _prefix_reduce(red: Reduction, g: PlaceGraph, seed: Set[int], rule: str) -> bool:
    net = red.net
    S = set(seed)
    for p in list(S):
        for t in net.pre_t[p]:
            S.update(net.pre[t])
    S = prefix_closure(g, S)
    drop = [p for p in net.places() if p not in S]
    if not drop:
        return False
    with red.record(rule):
        for t in sorted({t for p in drop for t in net.pre_t[p]}):
            net.drop_transition(t)
        for p in drop:
            net.drop_place(p)
    return True


def r19_prefix_deadlock(red: Reduction) -> bool:
    """Deadlock only: keep the places that can feed a cycle, drop the rest.

    Everything downstream of no cycle eventually drains. When nothing is
    left the deadlock is certain.
    """
    if not red.deadlock_mode or red.deadlock is not None:
        return False
    net = red.net
    g = flow_graph(net)
    seed: Set[int] = set()
    for comp in scc(g):
        if len(comp) >= 2:
            seed.update(comp)
            continue
        p = comp[0]
        if any(p in net.post[t] and net.post[t][p] >= w for t, w in net.pre_t[p].items()):
            seed.add(p)
    changed = _prefix_reduce(red, g, seed, "r19")
    if not seed and net.num_transitions == 0:
        red.conclude_deadlock(True)
        return True
    return changed


def r20_prefix_safety(red: Reduction) -> bool:
    """Safety only: keep the support and the places that can influence it."""
    if red.deadlock_mode:
        return False
    supp = red.supp()
    if not supp:
        return False
    return _prefix_reduce(red, effect_graph(red.net), supp, "r20")
