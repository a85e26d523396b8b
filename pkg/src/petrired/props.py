"""Safety invariants as Boolean formulas over weighted-sum atoms.

An atom reads ``sum(coef * m(p)) <op> bound``; a right-hand weighted sum is
folded into the left side at construction. Formulas are immutable and kept in
negation normal form by :func:`negate`, so the only node kinds are constants,
atoms, conjunctions and disjunctions (plus ``Not``, which the parsers may
produce and :func:`nnf` removes).
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from petrired.net import SparseNet

OPS: Dict[str, Callable[[int, int], bool]] = {
    "<": operator.lt, "<=": operator.le, "=": operator.eq,
    ">=": operator.ge, ">": operator.gt,
}
_NEGATED = {"<": ">=", "<=": ">", ">=": "<", ">": "<="}
_MIRROR = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Atom:
    coeffs: Tuple[Tuple[int, int], ...]
    op: str
    bound: int

    def value(self, m) -> bool:
        if isinstance(m, Mapping):
            total = sum(c * m.get(p, 0) for p, c in self.coeffs)
        else:
            total = sum(c * m[p] for p, c in self.coeffs)
        return OPS[self.op](total, self.bound)


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: Tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: Tuple["Formula", ...]


Formula = Union[Const, Atom, Not, And, Or]
TRUE = Const(True)
FALSE = Const(False)


def atom(coeffs: Mapping[int, int], op: str, bound: int = 0,
         rhs: Optional[Mapping[int, int]] = None) -> Formula:
    """Build a normalized atom; zero coefficients are dropped.

    An atom without any place folds to a constant.
    """
    if op not in OPS:
        raise ValueError(f"unknown comparison {op!r}")
    merged: Dict[int, int] = dict(coeffs)
    for p, c in (rhs or {}).items():
        merged[p] = merged.get(p, 0) - c
    items = tuple(sorted((p, c) for p, c in merged.items() if c))
    if not items:
        return Const(OPS[op](0, bound))
    if all(c < 0 for _, c in items):
        items = tuple((p, -c) for p, c in items)
        op, bound = _MIRROR[op], -bound
    return Atom(items, op, bound)


def conj(args: Iterable[Formula]) -> Formula:
    out: List[Formula] = []
    for a in args:
        if isinstance(a, Const):
            if not a.value:
                return FALSE
            continue
        if isinstance(a, And):
            out.extend(a.args)
        else:
            out.append(a)
    out = list(dict.fromkeys(out))
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(args: Iterable[Formula]) -> Formula:
    out: List[Formula] = []
    for a in args:
        if isinstance(a, Const):
            if a.value:
                return TRUE
            continue
        if isinstance(a, Or):
            out.extend(a.args)
        else:
            out.append(a)
    out = list(dict.fromkeys(out))
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def negate(f: Formula) -> Formula:
    """Negation pushed down to the atoms."""
    if isinstance(f, Const):
        return Const(not f.value)
    if isinstance(f, Atom):
        if f.op == "=":
            return disj([Atom(f.coeffs, "<", f.bound), Atom(f.coeffs, ">", f.bound)])
        return Atom(f.coeffs, _NEGATED[f.op], f.bound)
    if isinstance(f, Not):
        return nnf(f.arg)
    if isinstance(f, And):
        return disj(negate(a) for a in f.args)
    return conj(negate(a) for a in f.args)


def nnf(f: Formula) -> Formula:
    if isinstance(f, Not):
        return negate(f.arg)
    if isinstance(f, And):
        return conj(nnf(a) for a in f.args)
    if isinstance(f, Or):
        return disj(nnf(a) for a in f.args)
    return f


def evaluate(f: Formula, m) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return f.value(m)
    if isinstance(f, Not):
        return not evaluate(f.arg, m)
    if isinstance(f, And):
        return all(evaluate(a, m) for a in f.args)
    return any(evaluate(a, m) for a in f.args)


def atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from atoms(a)


def formula_support(f: Formula) -> Set[int]:
    return {p for a in atoms(f) for p, _ in a.coeffs}


def substitute(f: Formula, values: Mapping[int, int]) -> Formula:
    """Replace places by constant markings and simplify."""
    if isinstance(f, Atom):
        if not any(p in values for p, _ in f.coeffs):
            return f
        bound = f.bound
        rest = {}
        for p, c in f.coeffs:
            if p in values:
                bound -= c * values[p]
            else:
                rest[p] = c
        return atom(rest, f.op, bound)
    return map_atoms(f, lambda a: substitute(a, values))


def map_atoms(f: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, Not):
        inner = map_atoms(f.arg, fn)
        return Const(not inner.value) if isinstance(inner, Const) else Not(inner)
    if isinstance(f, And):
        return conj(map_atoms(a, fn) for a in f.args)
    if isinstance(f, Or):
        return disj(map_atoms(a, fn) for a in f.args)
    return f


def compile_predicate(f: Formula) -> Callable[[Sequence[int]], bool]:
    """Compile a formula into a fast closure over dense markings."""
    if isinstance(f, Const):
        v = f.value
        return lambda m: v
    if isinstance(f, Atom):
        cmp = OPS[f.op]
        bound = f.bound
        if len(f.coeffs) == 1:
            (p, c), = f.coeffs
            if c == 1:
                return lambda m: cmp(m[p], bound)
            return lambda m: cmp(c * m[p], bound)
        coeffs = f.coeffs
        return lambda m: cmp(sum(c * m[p] for p, c in coeffs), bound)
    if isinstance(f, Not):
        g = compile_predicate(f.arg)
        return lambda m: not g(m)
    parts = [compile_predicate(a) for a in f.args]
    if isinstance(f, And):
        return lambda m: all(g(m) for g in parts)
    return lambda m: any(g(m) for g in parts)


def render(f: Formula, names: Sequence[str]) -> str:
    """Render in the plain-text property grammar."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        terms = []
        for p, c in f.coeffs:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = names[p] if mag == 1 else f"{mag}*{names[p]}"
            terms.append((sign, body))
        text = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        for sign, body in terms[1:]:
            text += f" {sign} {body}"
        return f"{text} {f.op} {f.bound}"
    if isinstance(f, Not):
        return f"!({render(f.arg, names)})"
    sep = " & " if isinstance(f, And) else " | "
    return "(" + sep.join(render(a, names) for a in f.args) + ")"


# ----------------------------------------------------------------------
# property sets

SAFETY = "safety"
DEADLOCK = "deadlock"


@dataclass
class Property:
    """A named invariant.

    ``status`` is the verdict on the invariant itself (None while open).
    ``flip`` marks queries whose reported answer is the negation of the
    invariant verdict: ``EF phi`` is stored as the invariant ``!phi``, and a
    deadlock query is stored as "some transition is enabled".
    """
    name: str
    formula: Formula
    kind: str = SAFETY
    flip: bool = False
    status: Optional[bool] = None
    technique: Optional[str] = None

    @property
    def is_open(self) -> bool:
        return self.status is None

    def violation(self) -> Formula:
        return negate(self.formula)

    def close(self, holds: bool, technique: str) -> None:
        if self.status is None:
            self.status = holds
            self.technique = technique

    def outcome(self) -> Optional[bool]:
        if self.status is None:
            return None
        return self.status != self.flip


@dataclass
class PropertySet:
    properties: List[Property] = field(default_factory=list)

    def __iter__(self):
        return iter(self.properties)

    def __len__(self):
        return len(self.properties)

    def open(self) -> List[Property]:
        return [p for p in self.properties if p.is_open]

    @property
    def is_deadlock(self) -> bool:
        return any(p.kind == DEADLOCK for p in self.properties)

    def support(self) -> Set[int]:
        return support(self)

    def substitute(self, values: Mapping[int, int], technique: str = "REDUCTION") -> int:
        """Substitute constant places in every open property; returns #rewritten."""
        changed = 0
        for prop in self.open():
            if prop.kind == DEADLOCK:
                continue
            new = substitute(prop.formula, values)
            if new != prop.formula:
                changed += 1
                prop.formula = new
                if isinstance(new, Const):
                    prop.close(new.value, technique)
        return changed


def support(ps: PropertySet) -> Set[int]:
    """Places with a nonzero coefficient in some atom of an open property."""
    out: Set[int] = set()
    for prop in ps.open():
        out |= formula_support(prop.formula)
    return out


def enabled_formula(net: SparseNet, t: int) -> Formula:
    return conj(atom({p: 1}, ">=", w) for p, w in sorted(net.pre[t].items()))


def deadlock_invariant(net: SparseNet) -> Formula:
    """'Some transition is enabled'; a source transition makes it TRUE."""
    return disj(enabled_formula(net, t) for t in net.transitions())


def deadlock_as_safety(net: SparseNet, name: str = "ReachabilityDeadlock") -> PropertySet:
    """One deadlock property whose violation says every transition is disabled."""
    return PropertySet([Property(name, deadlock_invariant(net), kind=DEADLOCK, flip=True)])
