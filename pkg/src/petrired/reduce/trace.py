"""Reduction traces: an ordered log of rule applications.

Each entry holds the primitive edits a rule performed, in execution order
and keyed by node *names* (names are never reused, even for dropped nodes),
so replaying the log on the original net rebuilds the reduced net exactly.

Line format, one entry per line; segments appear in execution order and a
keyword may repeat::

    RULE r13 ARC +p@t1=1 MOVE p=2 DROP_T t2 DROP_P p2
    RULE r14 ADD_T h.f[a:1|b:1] DROP_T h;f DROP_P p
    RULE r18 ADD_P s=1[t3:1|t0:1] DROP_P p;q
    RULE r9 DROP_P c FIX c=0

Items inside a segment are separated by ``;``. ``ADD_T name[pre|post]`` and
``ADD_P name=tokens[pre-row|post-row]`` list arcs as ``node:weight``.
``FIX`` records a support place replaced by a constant in the properties; it
has no effect on the net.
"""

from __future__ import annotations

import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from petrired.net import SparseNet

KEYWORDS = ("ADD_P", "ADD_T", "ARC", "MOVE", "DROP_T", "DROP_P", "FIX")


@dataclass
class TraceEntry:
    rule: str
    ops: List[tuple] = field(default_factory=list)

    def dropped_places(self) -> List[str]:
        return [op[1] for op in self.ops if op[0] == "DROP_P"]

    def dropped_transitions(self) -> List[str]:
        return [op[1] for op in self.ops if op[0] == "DROP_T"]

    def created(self) -> List[str]:
        return [op[1] for op in self.ops if op[0] in ("ADD_P", "ADD_T")]

    def fixed(self) -> Dict[str, int]:
        return {op[1]: op[2] for op in self.ops if op[0] == "FIX"}


def _by_name(net: SparseNet, op: tuple) -> tuple:
    """Translate an index-based net op into the name-based trace form."""
    pn, tn = net.place_names, net.trans_names
    kind = op[0]
    if kind == "ADD_P":
        _, name, tokens, pre_row, post_row = op
        return (kind, name, tokens, {tn[t]: w for t, w in pre_row.items()},
                {tn[t]: w for t, w in post_row.items()})
    if kind == "ADD_T":
        _, name, pre, post = op
        return (kind, name, {pn[p]: w for p, w in pre.items()},
                {pn[p]: w for p, w in post.items()})
    if kind == "ARC":
        _, sign, p, t, w = op
        return (kind, sign, pn[p], tn[t], w)
    if kind == "MOVE":
        return (kind, pn[op[1]], op[2])
    if kind == "DROP_T":
        return (kind, tn[op[1]])
    if kind == "DROP_P":
        return (kind, pn[op[1]])
    raise ValueError(f"unknown op {op!r}")


class ReductionTrace:
    def __init__(self, entries: Optional[List[TraceEntry]] = None):
        self.entries: List[TraceEntry] = list(entries or [])

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TraceEntry]:
        return iter(self.entries)

    @contextmanager
    def record(self, net: SparseNet, rule: str):
        """Collect the primitive edits made inside the block as one entry."""
        if net._recorder is not None:
            raise RuntimeError("nested trace entries")
        log: List[tuple] = []
        net._recorder = log
        entry = TraceEntry(rule)
        try:
            yield entry
        finally:
            net._recorder = None
            ops = [_by_name(net, op) for op in log] + entry.ops
            entry.ops = ops
            if ops:
                self.entries.append(entry)

    def rules(self) -> List[str]:
        return [e.rule for e in self.entries]

    def fixed(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for e in self.entries:
            out.update(e.fixed())
        return out

    # ------------------------------------------------------------------
    # text form

    def serialize(self) -> str:
        return "".join(_entry_line(e) + "\n" for e in self.entries)

    @classmethod
    def parse(cls, text: str) -> "ReductionTrace":
        entries = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] != "RULE" or len(parts) < 2 or len(parts) % 2:
                raise ValueError(f"trace line {lineno}: malformed entry")
            entry = TraceEntry(parts[1])
            for key, body in zip(parts[2::2], parts[3::2]):
                if key not in KEYWORDS:
                    raise ValueError(f"trace line {lineno}: unknown keyword {key}")
                if body == "-":
                    continue
                for item in body.split(";"):
                    entry.ops.append(_parse_item(key, item))
            entries.append(entry)
        return cls(entries)

    # ------------------------------------------------------------------
    # replay

    def replay(self, original: SparseNet) -> SparseNet:
        """Apply every entry to a copy of ``original``."""
        net = original.copy()
        pidx = {n: i for i, n in enumerate(net.place_names)}
        tidx = {n: i for i, n in enumerate(net.trans_names)}
        for entry in self.entries:
            for op in entry.ops:
                kind = op[0]
                if kind == "ADD_P":
                    _, name, tokens, pre_row, post_row = op
                    pidx[name] = net.add_place(name, tokens,
                                               {tidx[t]: w for t, w in pre_row.items()},
                                               {tidx[t]: w for t, w in post_row.items()})
                elif kind == "ADD_T":
                    _, name, pre, post = op
                    tidx[name] = net.add_transition(name, {pidx[p]: w for p, w in pre.items()},
                                                    {pidx[p]: w for p, w in post.items()})
                elif kind == "ARC":
                    _, sign, p, t, w = op
                    (net.set_pre if sign == "-" else net.set_post)(pidx[p], tidx[t], w)
                elif kind == "MOVE":
                    net.set_m0(pidx[op[1]], op[2])
                elif kind == "DROP_T":
                    net.drop_transition(tidx[op[1]])
                elif kind == "DROP_P":
                    net.drop_place(pidx[op[1]])
        return net


def _arcs(d: Dict[str, int]) -> str:
    return ",".join(f"{k}:{w}" for k, w in d.items())


def _item(op: tuple) -> str:
    kind = op[0]
    if kind == "ADD_P":
        return f"{op[1]}={op[2]}[{_arcs(op[3])}|{_arcs(op[4])}]"
    if kind == "ADD_T":
        return f"{op[1]}[{_arcs(op[2])}|{_arcs(op[3])}]"
    if kind == "ARC":
        return f"{op[1]}{op[2]}@{op[3]}={op[4]}"
    if kind in ("MOVE", "FIX"):
        return f"{op[1]}={op[2]}"
    return op[1]


def _entry_line(entry: TraceEntry) -> str:
    segs: List[Tuple[str, List[str]]] = []
    for op in entry.ops:
        if segs and segs[-1][0] == op[0]:
            segs[-1][1].append(_item(op))
        else:
            segs.append((op[0], [_item(op)]))
    return " ".join([f"RULE {entry.rule}"] + [f"{k} {';'.join(v)}" for k, v in segs])


_NODE = r"[^\s;,\[\]|=@:]+"
_ADD_P = re.compile(rf"^({_NODE})=(\d+)\[(.*)\|(.*)\]$")
_ADD_T = re.compile(rf"^({_NODE})\[(.*)\|(.*)\]$")
_ARC = re.compile(rf"^([+-])({_NODE})@({_NODE})=(\d+)$")
_ASSIGN = re.compile(rf"^({_NODE})=(-?\d+)$")


def _parse_arcs(text: str) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for part in filter(None, text.split(",")):
        k, w = part.rsplit(":", 1)
        out[k] = int(w)
    return out


def _parse_item(key: str, item: str) -> tuple:
    if key == "ADD_P":
        m = _ADD_P.match(item)
        if not m:
            raise ValueError(f"bad ADD_P item {item!r}")
        return ("ADD_P", m.group(1), int(m.group(2)), _parse_arcs(m.group(3)),
                _parse_arcs(m.group(4)))
    if key == "ADD_T":
        m = _ADD_T.match(item)
        if not m:
            raise ValueError(f"bad ADD_T item {item!r}")
        return ("ADD_T", m.group(1), _parse_arcs(m.group(2)), _parse_arcs(m.group(3)))
    if key == "ARC":
        m = _ARC.match(item)
        if not m:
            raise ValueError(f"bad ARC item {item!r}")
        return ("ARC", m.group(1), m.group(2), m.group(3), int(m.group(4)))
    if key in ("MOVE", "FIX"):
        m = _ASSIGN.match(item)
        if not m:
            raise ValueError(f"bad {key} item {item!r}")
        return (key, m.group(1), int(m.group(2)))
    return (key, item)
