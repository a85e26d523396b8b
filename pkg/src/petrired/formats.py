"""Input and output formats.

* PNML, place/transition subset. Pages are flattened, reference nodes
  resolve to their targets, and tool-specific data is ignored.
* Properties in the MCC XML grammar (reachability cardinality and
  fireability), or in the plain-text grammar below.
* Verdict reports, one ``FORMULA <name> <TRUE|FALSE|UNKNOWN> <technique>``
  line per property.

Plain-text property grammar, one property per line (``#`` starts a comment)::

    line    := NAME ':' ('AG' | 'EF')? expr | NAME ':' 'deadlock'
    expr    := conj ('|' conj)*
    conj    := unary ('&' unary)*
    unary   := '!' unary | '(' expr ')' | 'true' | 'false'
             | 'fireable' '(' TRANS (',' TRANS)* ')' | sum CMP sum
    sum     := ['-'] term (('+' | '-') term)*
    term    := INT '*' PLACE | PLACE | INT
    CMP     := '<' | '<=' | '=' | '>=' | '>'

A missing quantifier means AG. ``EF phi`` is stored as the invariant
``!phi`` with a flag that flips the reported answer.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from petrired.net import SparseNet
from petrired.props import (DEADLOCK, FALSE, TRUE, Formula, Property, PropertySet, atom,
                            conj, deadlock_as_safety, disj, enabled_formula, negate, nnf, render)

PNML_NS = "http://www.pnml.org/version-2009/grammar/pnml"
PTNET = "http://www.pnml.org/version-2009/grammar/ptnet"


class FormatError(ValueError):
    """Malformed input; the message names the offending element."""


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child(elem: ET.Element, name: str) -> Optional[ET.Element]:
    for c in elem:
        if _local(c.tag) == name:
            return c
    return None


def _text_value(elem: Optional[ET.Element]) -> Optional[str]:
    """Content of ``<x><text>...</text></x>``."""
    if elem is None:
        return None
    t = _child(elem, "text")
    return (t.text or "").strip() if t is not None else (elem.text or "").strip()


def _xml_root(data: bytes | str) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise FormatError(f"malformed XML: {exc}") from exc


# ----------------------------------------------------------------------
# PNML


def _positive_int(text: Optional[str], what: str, default: int, allow_zero: bool) -> int:
    if text is None or text == "":
        return default
    try:
        v = int(text)
    except ValueError:
        raise FormatError(f"{what}: not an integer: {text!r}") from None
    if v < 0 or (v == 0 and not allow_zero):
        raise FormatError(f"{what}: weight must be positive, got {v}")
    return v


def parse_pnml(data: bytes | str) -> SparseNet:
    root = _xml_root(data)
    nets = [e for e in root.iter() if _local(e.tag) == "net"]
    if not nets:
        raise FormatError("no <net> element")
    net_elem = nets[0]
    ntype = net_elem.get("type", PTNET)
    if "ptnet" not in ntype.lower():
        raise FormatError(f"<net type={ntype!r}>: only place/transition nets are supported")
    name = _text_value(_child(net_elem, "name")) or net_elem.get("id", "net")

    places: Dict[str, int] = {}
    trans: List[str] = []
    alias: Dict[str, str] = {}
    arcs = []
    for e in net_elem.iter():
        tag = _local(e.tag)
        nid = e.get("id")
        if tag in ("place", "transition", "arc") and not nid:
            raise FormatError(f"<{tag}> without id")
        if tag == "place":
            if nid in places:
                raise FormatError(f"<place id={nid!r}>: duplicate id")
            places[nid] = _positive_int(_text_value(_child(e, "initialMarking")),
                                        f"<place id={nid!r}> initialMarking", 0, True)
        elif tag == "transition":
            trans.append(nid)
        elif tag in ("referencePlace", "referenceTransition"):
            alias[nid] = e.get("ref")
        elif tag == "arc":
            w = _positive_int(_text_value(_child(e, "inscription")),
                              f"<arc id={nid!r}> inscription", 1, False)
            arcs.append((nid, e.get("source"), e.get("target"), w))

    def resolve(ref: str) -> str:
        seen = set()
        while ref in alias and ref not in seen:
            seen.add(ref)
            ref = alias[ref]
        return ref

    tset = set(trans)
    pre: Dict[str, Dict[str, int]] = {t: {} for t in trans}
    post: Dict[str, Dict[str, int]] = {t: {} for t in trans}
    for aid, src, dst, w in arcs:
        src, dst = resolve(src or ""), resolve(dst or "")
        for end in (src, dst):
            if end not in places and end not in tset:
                raise FormatError(f"<arc id={aid!r}>: unknown node {end!r}")
        if src in places and dst in tset:
            pre[dst][src] = pre[dst].get(src, 0) + w
        elif src in tset and dst in places:
            post[src][dst] = post[src].get(dst, 0) + w
        else:
            raise FormatError(f"<arc id={aid!r}>: must connect a place and a transition")
    return SparseNet.build(places, {t: (pre[t], post[t]) for t in trans}, name=name)


def _xml_escape(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def export_net(net: SparseNet, ps: Optional[PropertySet] = None) -> bytes:
    """PNML text of the live part of ``net``.

    When ``ps`` is given and no property is left open, nothing remains to be
    checked and the exported net is empty.
    """
    empty = ps is not None and not ps.open()
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<pnml xmlns="{PNML_NS}">',
           f'  <net id="{_xml_escape(net.name)}" type="{PTNET}">',
           f'    <name><text>{_xml_escape(net.name)}</text></name>',
           '    <page id="page0">']
    if not empty:
        pn = net.place_names
        tn = net.trans_names
        for p in net.places():
            out.append(f'      <place id="{_xml_escape(pn[p])}">'
                       f'<name><text>{_xml_escape(pn[p])}</text></name>'
                       + (f'<initialMarking><text>{net.m0[p]}</text></initialMarking>'
                          if net.m0[p] else "") + '</place>')
        for t in net.transitions():
            out.append(f'      <transition id="{_xml_escape(tn[t])}">'
                       f'<name><text>{_xml_escape(tn[t])}</text></name></transition>')
        k = 0
        for t in net.transitions():
            for p, w in sorted(net.pre[t].items()):
                out.append(_arc(k, pn[p], tn[t], w))
                k += 1
            for p, w in sorted(net.post[t].items()):
                out.append(_arc(k, tn[t], pn[p], w))
                k += 1
    out += ["    </page>", "  </net>", "</pnml>", ""]
    return "\n".join(out).encode("utf-8")


def _arc(k: int, src: str, dst: str, w: int) -> str:
    ins = f'<inscription><text>{w}</text></inscription>' if w != 1 else ""
    return (f'      <arc id="a{k}" source="{_xml_escape(src)}" '
            f'target="{_xml_escape(dst)}">{ins}</arc>')


# ----------------------------------------------------------------------
# properties: text grammar

_TOKEN = re.compile(r"\s*(<=|>=|[<>=()&|!+\-*,]|\d+|[A-Za-z_][\w.'\-]*)")


class _TextParser:
    def __init__(self, text: str, net: SparseNet, pidx, tidx):
        self.toks = self._lex(text)
        self.i = 0
        self.net = net
        self.pidx = pidx
        self.tidx = tidx

    @staticmethod
    def _lex(text: str) -> List[str]:
        out, pos = [], 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise FormatError(f"unexpected character at {text[pos:pos + 10]!r}")
            out.append(m.group(1))
            pos = m.end()
        return out

    def peek(self) -> Optional[str]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None or (expect is not None and tok != expect):
            raise FormatError(f"expected {expect or 'token'}, got {tok!r}")
        self.i += 1
        return tok

    def done(self) -> None:
        if self.peek() is not None:
            raise FormatError(f"trailing input at {self.peek()!r}")

    def expr(self) -> Formula:
        parts = [self.conj()]
        while self.peek() == "|":
            self.take()
            parts.append(self.conj())
        return disj(parts)

    def conj(self) -> Formula:
        parts = [self.unary()]
        while self.peek() == "&":
            self.take()
            parts.append(self.unary())
        return conj(parts)

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.take()
            return negate(self.unary())
        if tok == "(":
            self.take()
            f = self.expr()
            self.take(")")
            return f
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        if tok in ("fireable", "is-fireable"):
            self.take()
            self.take("(")
            names = [self.take()]
            while self.peek() == ",":
                self.take()
                names.append(self.take())
            self.take(")")
            return disj(fireable(self.net, self.tidx, n) for n in names)
        lhs, lc = self.sum()
        op = self.take()
        if op not in ("<", "<=", "=", ">=", ">"):
            raise FormatError(f"expected comparison, got {op!r}")
        rhs, rc = self.sum()
        return atom(lhs, op, rc - lc, rhs=rhs)

    def sum(self) -> Tuple[Dict[int, int], int]:
        coeffs: Dict[int, int] = {}
        const = 0
        sign = 1
        if self.peek() == "-":
            self.take()
            sign = -1
        while True:
            tok = self.take()
            if tok.isdigit():
                if self.peek() == "*":
                    self.take()
                    p = self.place(self.take())
                    coeffs[p] = coeffs.get(p, 0) + sign * int(tok)
                else:
                    const += sign * int(tok)
            else:
                p = self.place(tok)
                coeffs[p] = coeffs.get(p, 0) + sign
            if self.peek() in ("+", "-"):
                sign = 1 if self.take() == "+" else -1
            else:
                return coeffs, const

    def place(self, name: str) -> int:
        if name not in self.pidx:
            raise FormatError(f"unknown place {name!r}")
        return self.pidx[name]


def fireable(net: SparseNet, tidx: Mapping[str, int], name: str) -> Formula:
    """``m >= W-(t)`` as a conjunction of place comparisons."""
    if name not in tidx:
        raise FormatError(f"unknown transition {name!r}")
    return enabled_formula(net, tidx[name])


def parse_text_properties(text: str, net: SparseNet) -> PropertySet:
    pidx, tidx = net.place_index(), net.trans_index()
    props: List[Property] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise FormatError(f"line {lineno}: expected 'name: formula'")
        name, body = (s.strip() for s in line.split(":", 1))
        try:
            props.append(_text_property(name, body, net, pidx, tidx))
        except FormatError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    return PropertySet(props)


def _text_property(name, body, net, pidx, tidx) -> Property:
    parser = _TextParser(body, net, pidx, tidx)
    quant = None
    if parser.peek() in ("AG", "EF"):
        quant = parser.take()
    if parser.peek() == "deadlock":
        parser.take()
        parser.done()
        prop = deadlock_as_safety(net, name).properties[0]
        if quant == "AG":
            raise FormatError("only 'EF deadlock' (or plain 'deadlock') is supported")
        return prop
    f = parser.expr()
    parser.done()
    if quant == "EF":
        return Property(name, negate(f), flip=True)
    return Property(name, f)


def export_properties(ps: PropertySet, net: SparseNet) -> str:
    """Open properties in the text grammar, as stored (AG invariants).

    A flipped property keeps its reading: ``EF phi`` is written back as
    ``EF !invariant``.
    """
    lines = []
    for prop in ps.open():
        if prop.kind == DEADLOCK:
            lines.append(f"{prop.name}: EF deadlock")
        elif prop.flip:
            lines.append(f"{prop.name}: EF {render(negate(prop.formula), net.place_names)}")
        else:
            lines.append(f"{prop.name}: AG {render(prop.formula, net.place_names)}")
    return "\n".join(lines) + ("\n" if lines else "")


# ----------------------------------------------------------------------
# properties: MCC XML


def _xml_formula(e: ET.Element, net: SparseNet, pidx, tidx) -> Formula:
    tag = _local(e.tag)
    kids = list(e)
    if tag in ("conjunction", "disjunction"):
        parts = [_xml_formula(k, net, pidx, tidx) for k in kids]
        return conj(parts) if tag == "conjunction" else disj(parts)
    if tag == "negation":
        return negate(_xml_formula(kids[0], net, pidx, tidx))
    if tag == "true":
        return TRUE
    if tag == "false":
        return FALSE
    if tag == "is-fireable":
        names = [(k.text or "").strip() for k in kids if _local(k.tag) == "transition"]
        return disj(fireable(net, tidx, n) for n in names)
    ops = {"integer-le": "<=", "integer-lt": "<", "integer-ge": ">=",
           "integer-gt": ">", "integer-eq": "="}
    if tag in ops:
        if len(kids) != 2:
            raise FormatError(f"<{tag}> needs two operands")
        lhs, lc = _xml_int(kids[0], pidx)
        rhs, rc = _xml_int(kids[1], pidx)
        return atom(lhs, ops[tag], rc - lc, rhs=rhs)
    raise FormatError(f"unsupported formula element <{tag}>")


def _xml_int(e: ET.Element, pidx) -> Tuple[Dict[int, int], int]:
    tag = _local(e.tag)
    if tag == "integer-constant":
        return {}, int((e.text or "").strip())
    if tag == "tokens-count":
        coeffs: Dict[int, int] = {}
        for k in e:
            name = (k.text or "").strip()
            if name not in pidx:
                raise FormatError(f"unknown place {name!r}")
            coeffs[pidx[name]] = coeffs.get(pidx[name], 0) + 1
        return coeffs, 0
    if tag == "integer-sum":
        coeffs, const = {}, 0
        for k in e:
            c, v = _xml_int(k, pidx)
            const += v
            for p, w in c.items():
                coeffs[p] = coeffs.get(p, 0) + w
        return coeffs, const
    raise FormatError(f"unsupported integer element <{tag}>")


def parse_xml_properties(data: bytes | str, net: SparseNet) -> PropertySet:
    root = _xml_root(data)
    pidx, tidx = net.place_index(), net.trans_index()
    props = []
    for pe in root.iter():
        if _local(pe.tag) != "property":
            continue
        pid = _text_value(_child(pe, "id")) or f"p{len(props)}"
        fe = _child(pe, "formula")
        if fe is None or not list(fe):
            raise FormatError(f"<property {pid}>: missing formula")
        path = list(fe)[0]
        quant = _local(path.tag)
        if quant not in ("exists-path", "all-paths") or not list(path):
            raise FormatError(f"<property {pid}>: expected exists-path or all-paths")
        temporal = list(path)[0]
        ttag = _local(temporal.tag)
        if (quant, ttag) not in (("exists-path", "finally"), ("all-paths", "globally")):
            raise FormatError(f"<property {pid}>: only EF and AG are supported")
        body = list(temporal)[0]
        if _local(body.tag) == "deadlock":
            if quant != "exists-path":
                raise FormatError(f"<property {pid}>: only EF deadlock is supported")
            props.append(deadlock_as_safety(net, pid).properties[0])
            continue
        f = _xml_formula(body, net, pidx, tidx)
        if quant == "exists-path":
            props.append(Property(pid, negate(f), flip=True))
        else:
            props.append(Property(pid, nnf(f)))
    return PropertySet(props)


def parse_properties(data: bytes | str, net: SparseNet) -> PropertySet:
    """Dispatch on content: XML when it starts with '<', text grammar otherwise."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if text.lstrip().startswith("<"):
        return parse_xml_properties(text, net)
    return parse_text_properties(text, net)


# ----------------------------------------------------------------------
# reports

TECHNIQUES = ("WALK", "SMT", "REDUCTION", "ORACLE", "NONE")


@dataclass
class ReportLine:
    name: str
    outcome: str          # TRUE | FALSE | UNKNOWN
    technique: str = "NONE"
    millis: float = 0.0


@dataclass
class VerdictReport:
    lines: List[ReportLine] = field(default_factory=list)

    @classmethod
    def from_properties(cls, ps: PropertySet,
                        millis: Optional[Mapping[str, float]] = None) -> "VerdictReport":
        millis = millis or {}
        out = []
        for prop in ps:
            res = prop.outcome()
            if res is None:
                out.append(ReportLine(prop.name, "UNKNOWN", "NONE", millis.get(prop.name, 0.0)))
            else:
                out.append(ReportLine(prop.name, "TRUE" if res else "FALSE",
                                      prop.technique or "NONE", millis.get(prop.name, 0.0)))
        return cls(out)


def emit_report(report: VerdictReport) -> str:
    return "".join(f"FORMULA {ln.name} {ln.outcome} {ln.technique}\n" for ln in report.lines)


def parse_report(text: str) -> Dict[str, Tuple[str, str]]:
    out = {}
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 4 and parts[0] == "FORMULA":
            out[parts[1]] = (parts[2], parts[3])
    return out
