"""Integer linear algebra over the effect matrix.

Flows are computed by fraction-free row elimination of ``[We | I]`` (rows are
places). Python integers never overflow, so no separate big-number path is
needed. Columns are eliminated sparsest first, densest last.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Dict, List, Tuple

from petrired.net import SparseNet


@dataclass(frozen=True)
class FlowVector:
    coeffs: Tuple[Tuple[int, int], ...]   # sorted (place, coefficient), nonzero
    constant: int

    @property
    def is_semiflow(self) -> bool:
        return all(c > 0 for _, c in self.coeffs)

    def value(self, m) -> int:
        return sum(c * m.get(p, 0) if isinstance(m, dict) else c * m[p]
                   for p, c in self.coeffs)


def _normalize(vec: Dict[int, int]) -> Dict[int, int]:
    g = 0
    for v in vec.values():
        g = gcd(g, v)
    if g > 1:
        vec = {k: v // g for k, v in vec.items()}
    return vec


def _eliminate(net: SparseNet):
    """Row-reduce [We | I]; returns (left-null rows, rank)."""
    places = list(net.places())
    # row p: effect part (transition -> value), identity part (place -> value)
    rows: Dict[int, Tuple[Dict[int, int], Dict[int, int]]] = {}
    for p in places:
        eff = {}
        for t, w in net.post_t[p].items():
            eff[t] = w
        for t, w in net.pre_t[p].items():
            v = eff.get(t, 0) - w
            if v:
                eff[t] = v
            else:
                eff.pop(t, None)
        rows[p] = (eff, {p: 1})
    density: Dict[int, int] = {}
    for eff, _ in rows.values():
        for t in eff:
            density[t] = density.get(t, 0) + 1
    columns = sorted(density, key=lambda t: (density[t], t))
    active = set(rows)
    rank = 0
    for col in columns:
        holders = [p for p in active if col in rows[p][0]]
        if not holders:
            continue
        pivot = min(holders, key=lambda p: (len(rows[p][0]) + len(rows[p][1]), p))
        active.discard(pivot)
        rank += 1
        peff, pid = rows[pivot]
        a = peff[col]
        for p in holders:
            if p == pivot:
                continue
            eff, ident = rows[p]
            b = eff[col]
            # row := a*row - b*pivot_row
            new_eff = {k: a * v for k, v in eff.items()}
            for k, v in peff.items():
                nv = new_eff.get(k, 0) - b * v
                if nv:
                    new_eff[k] = nv
                else:
                    new_eff.pop(k, None)
            new_id = {k: a * v for k, v in ident.items()}
            for k, v in pid.items():
                nv = new_id.get(k, 0) - b * v
                if nv:
                    new_id[k] = nv
                else:
                    new_id.pop(k, None)
            g = 0
            for v in new_eff.values():
                g = gcd(g, v)
            for v in new_id.values():
                g = gcd(g, v)
            if g > 1:
                new_eff = {k: v // g for k, v in new_eff.items()}
                new_id = {k: v // g for k, v in new_id.items()}
            rows[p] = (new_eff, new_id)
    null_rows = [rows[p][1] for p in sorted(active) if not rows[p][0]]
    return null_rows, rank


def effect_rank(net: SparseNet) -> int:
    return _eliminate(net)[1]


def compute_flows(net: SparseNet) -> List[FlowVector]:
    """A basis of the left integer null space of We; semi-flows listed first."""
    null_rows, _ = _eliminate(net)
    flows = []
    for vec in null_rows:
        vec = _normalize({p: c for p, c in vec.items() if c})
        if not vec:
            continue
        lead = min(vec)
        if vec[lead] < 0:
            vec = {p: -c for p, c in vec.items()}
        coeffs = tuple(sorted(vec.items()))
        const = sum(c * net.m0[p] for p, c in coeffs)
        flows.append(FlowVector(coeffs, const))
    flows.sort(key=lambda f: (not f.is_semiflow, f.coeffs))
    return flows


def dedup_effects(net: SparseNet) -> List[List[int]]:
    """Partition transitions into classes of identical effect.

    Classes and their members are ordered by lowest transition index, so the
    first member is the class representative.
    """
    classes: Dict[Tuple, List[int]] = {}
    for t in net.transitions():
        key = tuple(sorted(net.effect(t).items()))
        classes.setdefault(key, []).append(t)
    return sorted(classes.values(), key=lambda c: c[0])
