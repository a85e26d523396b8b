"""Sparse place/transition nets and their firing semantics.

Places and transitions are addressed by stable integer indices. Removing a
node only marks it dead; :meth:`SparseNet.compact` renumbers on demand. Every
structural mutation goes through a handful of primitive methods so that a
reduction trace can record and replay it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set

# sparse map place -> token count; absent key means 0
Marking = Dict[int, int]


class NetError(ValueError):
    """Raised on contract violations (bad weights, disabled firings...)."""


@dataclass
class SparseNet:
    place_names: List[str] = field(default_factory=list)
    trans_names: List[str] = field(default_factory=list)
    # column view: per transition, place -> weight
    pre: List[Dict[int, int]] = field(default_factory=list)
    post: List[Dict[int, int]] = field(default_factory=list)
    # row view: per place, transition -> weight
    pre_t: List[Dict[int, int]] = field(default_factory=list)
    post_t: List[Dict[int, int]] = field(default_factory=list)
    m0: List[int] = field(default_factory=list)
    p_alive: List[bool] = field(default_factory=list)
    t_alive: List[bool] = field(default_factory=list)
    name: str = "net"
    # primitive edit log, populated while a reduction entry is open
    _recorder: Optional[list] = field(default=None, repr=False, compare=False)

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def build(cls, places: Mapping[str, int] | Sequence[str],
              transitions: Mapping[str, tuple], name: str = "net") -> "SparseNet":
        """Build a net from names.

        ``places`` maps place name to initial tokens (or is a plain list of
        names, all unmarked). ``transitions`` maps a transition name to a pair
        ``(pre, post)`` of ``{place_name: weight}`` dicts.
        """
        net = cls(name=name)
        if isinstance(places, Mapping):
            items = list(places.items())
        else:
            items = [(p, 0) for p in places]
        for pname, tokens in items:
            net.add_place(pname, tokens)
        index = {n: i for i, n in enumerate(net.place_names)}
        for tname, (pre, post) in transitions.items():
            net.add_transition(tname, {index[p]: w for p, w in pre.items()},
                               {index[p]: w for p, w in post.items()})
        return net

    def add_place(self, name: str, tokens: int = 0,
                  pre_row: Optional[Mapping[int, int]] = None,
                  post_row: Optional[Mapping[int, int]] = None) -> int:
        if tokens < 0:
            raise NetError(f"negative initial marking for place {name}")
        p = len(self.place_names)
        self.place_names.append(name)
        self.m0.append(tokens)
        self.pre_t.append({})
        self.post_t.append({})
        self.p_alive.append(True)
        for t, w in (pre_row or {}).items():
            self._set(self.pre, self.pre_t, p, t, w)
        for t, w in (post_row or {}).items():
            self._set(self.post, self.post_t, p, t, w)
        self._record(("ADD_P", name, tokens, dict(pre_row or {}), dict(post_row or {})))
        return p

    def add_transition(self, name: str, pre: Mapping[int, int],
                       post: Mapping[int, int]) -> int:
        t = len(self.trans_names)
        self.trans_names.append(name)
        self.pre.append({})
        self.post.append({})
        self.t_alive.append(True)
        for p, w in pre.items():
            self._set(self.pre, self.pre_t, p, t, w)
        for p, w in post.items():
            self._set(self.post, self.post_t, p, t, w)
        self._record(("ADD_T", name, dict(pre), dict(post)))
        return t

    # ------------------------------------------------------------------
    # primitive mutations

    def _set(self, cols, rows, p: int, t: int, w: int) -> None:
        if w < 0:
            raise NetError("arc weights must be natural numbers")
        if w == 0:
            cols[t].pop(p, None)
            rows[p].pop(t, None)
        else:
            cols[t][p] = w
            rows[p][t] = w

    def set_pre(self, p: int, t: int, w: int) -> None:
        self._set(self.pre, self.pre_t, p, t, w)
        self._record(("ARC", "-", p, t, w))

    def set_post(self, p: int, t: int, w: int) -> None:
        self._set(self.post, self.post_t, p, t, w)
        self._record(("ARC", "+", p, t, w))

    def set_m0(self, p: int, tokens: int) -> None:
        if tokens < 0:
            raise NetError("negative marking")
        self.m0[p] = tokens
        self._record(("MOVE", p, tokens))

    def drop_transition(self, t: int) -> None:
        if not self.t_alive[t]:
            return
        for p in self.pre[t]:
            del self.pre_t[p][t]
        for p in self.post[t]:
            del self.post_t[p][t]
        self.pre[t] = {}
        self.post[t] = {}
        self.t_alive[t] = False
        self._record(("DROP_T", t))

    def drop_place(self, p: int) -> None:
        if not self.p_alive[p]:
            return
        for t in self.pre_t[p]:
            del self.pre[t][p]
        for t in self.post_t[p]:
            del self.post[t][p]
        self.pre_t[p] = {}
        self.post_t[p] = {}
        self.m0[p] = 0
        self.p_alive[p] = False
        self._record(("DROP_P", p))

    def _record(self, op: tuple) -> None:
        if self._recorder is not None:
            self._recorder.append(op)

    # ------------------------------------------------------------------
    # queries

    def places(self) -> Iterator[int]:
        return (p for p, a in enumerate(self.p_alive) if a)

    def transitions(self) -> Iterator[int]:
        return (t for t, a in enumerate(self.t_alive) if a)

    @property
    def num_places(self) -> int:
        return sum(self.p_alive)

    @property
    def num_transitions(self) -> int:
        return sum(self.t_alive)

    def effect(self, t: int) -> Dict[int, int]:
        eff = dict(self.post[t])
        for p, w in self.pre[t].items():
            v = eff.get(p, 0) - w
            if v:
                eff[p] = v
            else:
                eff.pop(p, None)
        return eff

    def effect_at(self, p: int, t: int) -> int:
        return self.post[t].get(p, 0) - self.pre[t].get(p, 0)

    def initial_marking(self) -> Marking:
        return {p: self.m0[p] for p in self.places() if self.m0[p]}

    def place_index(self) -> Dict[str, int]:
        return {self.place_names[p]: p for p in self.places()}

    def trans_index(self) -> Dict[str, int]:
        return {self.trans_names[t]: t for t in self.transitions()}

    def fresh_place_name(self, base: str) -> str:
        return _fresh(base, self.place_names)

    def fresh_trans_name(self, base: str) -> str:
        return _fresh(base, self.trans_names)

    def copy(self) -> "SparseNet":
        return SparseNet(
            place_names=list(self.place_names), trans_names=list(self.trans_names),
            pre=[dict(c) for c in self.pre], post=[dict(c) for c in self.post],
            pre_t=[dict(r) for r in self.pre_t], post_t=[dict(r) for r in self.post_t],
            m0=list(self.m0), p_alive=list(self.p_alive), t_alive=list(self.t_alive),
            name=self.name,
        )

    def compact(self) -> tuple["SparseNet", Dict[int, int], Dict[int, int]]:
        """Return a renumbered copy without dead nodes and the index maps."""
        pmap = {p: i for i, p in enumerate(self.places())}
        tmap = {t: i for i, t in enumerate(self.transitions())}
        out = SparseNet(name=self.name)
        for p in pmap:
            out.add_place(self.place_names[p], self.m0[p])
        for t in tmap:
            out.add_transition(self.trans_names[t],
                               {pmap[p]: w for p, w in self.pre[t].items()},
                               {pmap[p]: w for p, w in self.post[t].items()})
        return out, pmap, tmap

    def structure(self) -> tuple:
        """Name-keyed canonical form used for isomorphism checks."""
        pn = self.place_names
        places = tuple(sorted((pn[p], self.m0[p]) for p in self.places()))
        trans = tuple(sorted(
            (self.trans_names[t],
             tuple(sorted((pn[p], w) for p, w in self.pre[t].items())),
             tuple(sorted((pn[p], w) for p, w in self.post[t].items())))
            for t in self.transitions()))
        return places, trans

    def describe(self) -> str:
        pn = self.place_names

        def side(col):
            return " + ".join((f"{w}{pn[p]}" if w > 1 else pn[p])
                              for p, w in sorted(col.items())) or "0"
        lines = [f"{self.trans_names[t]}: {side(self.pre[t])} -> {side(self.post[t])}"
                 for t in self.transitions()]
        lines.append("m0 = {" + ", ".join(f"{pn[p]}:{v}" for p, v in
                                          sorted(self.initial_marking().items())) + "}")
        return "\n".join(lines)


def _fresh(base: str, taken: Sequence[str]) -> str:
    names = set(taken)
    if base not in names:
        return base
    i = 2
    while f"{base}_{i}" in names:
        i += 1
    return f"{base}_{i}"


# ----------------------------------------------------------------------
# firing semantics


def _tokens(m, p: int) -> int:
    if isinstance(m, Mapping):
        return m.get(p, 0)
    return m[p]


def enabled(m, t: int, net: SparseNet) -> bool:
    """True iff ``m >= W-(t)`` component-wise."""
    return all(_tokens(m, p) >= w for p, w in net.pre[t].items())


def fire(m: Mapping[int, int], t: int, net: SparseNet) -> Marking:
    """Return ``m + We(t)``; firing a disabled transition raises NetError."""
    if not enabled(m, t, net):
        raise NetError(f"transition {net.trans_names[t]} is not enabled")
    out = dict(m)
    for p, w in net.pre[t].items():
        out[p] = out.get(p, 0) - w
    for p, w in net.post[t].items():
        out[p] = out.get(p, 0) + w
    return {p: v for p, v in out.items() if v}


def stuttering(net: SparseNet, supp: Iterable[int]) -> Set[int]:
    """Transitions with zero effect on every support place."""
    supp = set(supp)
    return {t for t in net.transitions()
            if all(net.effect_at(p, t) == 0 for p in supp
                   if p in net.pre[t] or p in net.post[t])}


def is_deadlocked(m, net: SparseNet) -> bool:
    return not any(enabled(m, t, net) for t in net.transitions())
