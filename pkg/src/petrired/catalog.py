"""The fixed test-net catalog and a seeded random net generator.

Nets are written in the arrow notation ``t: 2a + b -> c`` (a read arc shows
the place on both sides, ``t: b -> b + c``).
"""

from __future__ import annotations

import random
import re
from typing import Dict, List, Mapping, Optional

from petrired.net import SparseNet

_TERM = re.compile(r"^\s*(\d*)\s*\*?\s*([A-Za-z_][\w.']*)\s*$")


def _side(text: str) -> Dict[str, int]:
    out: Dict[str, int] = {}
    text = text.strip()
    if not text or text == "0":
        return out
    for term in text.split("+"):
        m = _TERM.match(term)
        if not m:
            raise ValueError(f"bad term {term!r}")
        w = int(m.group(1)) if m.group(1) else 1
        out[m.group(2)] = out.get(m.group(2), 0) + w
    return out


def parse_net(text: str, m0: Optional[Mapping[str, int]] = None,
              places: Optional[List[str]] = None, name: str = "net") -> SparseNet:
    """Build a net from ``;``/newline separated ``name: lhs -> rhs`` lines.

    Places are created in order of first appearance unless ``places`` fixes
    the order (extra isolated places may be listed there too).
    """
    m0 = dict(m0 or {})
    order: List[str] = list(places or [])
    trans = {}
    for line in re.split(r"[;\n]", text):
        line = line.strip()
        if not line:
            continue
        tname, body = line.split(":", 1)
        lhs, rhs = body.split("->")
        pre, post = _side(lhs), _side(rhs)
        for p in list(pre) + list(post):
            if p not in order:
                order.append(p)
        trans[tname.strip()] = (pre, post)
    for p in m0:
        if p not in order:
            order.append(p)
    return SparseNet.build({p: m0.get(p, 0) for p in order}, trans, name=name)


CATALOG_TEXT = {
    "NET-LINE": ("t1: a -> b; t2: b -> c", {"a": 1}),
    "NET-LOOP": ("t1: a -> b; t2: b -> a", {"a": 1}),
    "NET-BORROW": ("t1: a -> b; t2: b -> a; t3: b -> b + c", {}),
    "NET-FORK": ("tf: a -> p + q; tj: p + q -> r", {"a": 1}),
    "NET-DUP": ("t1: a -> b; t2: 2a -> 2b", {"a": 2}),
    "NET-SIPHON": ("t1: b -> a", {"a": 1}),
    # q = x + y by a flow, so q never blocks anything; its read arc on tb
    # still stops x and y from being agglomerated until q is discarded.
    "NET-STUCK": ("ta: a -> x + q; tb: x + q -> q + y; tc: y + q -> a", {"a": 1}),
}

# Unbounded: kept out of catalog() since the oracle cannot enumerate it.
DEMO_TEXT = {
    "NET-TRAP": ("t1: a -> b; t2: b -> a + c", {"a": 1}),
}

RANDOM_SEEDS = tuple(range(1000, 1012))


def catalog_net(name: str) -> SparseNet:
    text, m0 = CATALOG_TEXT[name] if name in CATALOG_TEXT else DEMO_TEXT[name]
    places = ["a", "b", "c"] if name in ("NET-LINE", "NET-BORROW") else None
    return parse_net(text, m0, places=places, name=name)


def catalog() -> Dict[str, SparseNet]:
    """Fixed catalog: hand nets plus seeded random nets of at most 10 places.

    Every catalog net is bounded; the random ones never grow their token count.
    """
    nets = {n: catalog_net(n) for n in CATALOG_TEXT}
    for seed in RANDOM_SEEDS:
        nets[f"NET-RANDOM-{seed}"] = random_net(seed, max_places=10, max_transitions=10,
                                               growth=0.0, marked=0.8)
    return nets


def random_net(seed: int, max_places: int = 10, max_transitions: int = 12,
               max_weight: int = 3, min_places: int = 2,
               growth: float = 0.1, source: float = 0.03,
               max_tokens: int = 2, marked: float = 0.5) -> SparseNet:
    """Seeded random P/T net.

    Most transitions do not increase the total weighted token count, which
    keeps state spaces small; ``growth`` is the chance to allow a transition
    that does. ``marked`` is the chance that a place starts with tokens.
    """
    rng = random.Random(seed)
    n_p = rng.randint(min_places, max_places)
    n_t = rng.randint(1, max_transitions)
    names = [f"p{i}" for i in range(n_p)]
    m0 = {p: (rng.randint(1, max_tokens) if rng.random() < marked else 0) for p in names}
    trans = {}
    for i in range(n_t):
        pre: Dict[str, int] = {}
        if rng.random() >= source:
            for p in rng.sample(names, rng.randint(1, min(3, n_p))):
                pre[p] = rng.randint(1, max_weight) if rng.random() < 0.3 else 1
        post: Dict[str, int] = {}
        for p in rng.sample(names, rng.randint(0, min(3, n_p))):
            post[p] = rng.randint(1, max_weight) if rng.random() < 0.3 else 1
        if rng.random() < 0.2 and pre:
            # read arc
            p = rng.choice(list(pre))
            post[p] = pre[p]
        if rng.random() >= growth:
            budget = sum(pre.values())
            while sum(post.values()) > budget and post:
                p = rng.choice(list(post))
                post[p] -= 1
                if post[p] == 0:
                    del post[p]
        trans[f"t{i}"] = (pre, post)
    return SparseNet.build(m0, trans, name=f"random-{seed}")


def throughput_net(seed: int = 7, n_places: int = 100, n_transitions: int = 200) -> SparseNet:
    """Live, token-conserving net for walker benchmarks.

    The first ``n_places`` transitions each move one token out of a distinct
    place, so a marked place always enables something and walks never stop.
    The rest move 1 or 2 tokens between random places.
    """
    rng = random.Random(seed)
    places = {f"p{i}": (3 if i % 4 == 0 else 0) for i in range(n_places)}
    names = list(places)
    trans = {}
    for i in range(n_transitions):
        if i < n_places:
            ins = [names[i]]
        else:
            ins = rng.sample(names, rng.randint(1, 2))
        outs = rng.sample(names, len(ins))
        trans[f"t{i}"] = ({p: 1 for p in ins}, {p: 1 for p in outs})
    return SparseNet.build(places, trans, name=f"throughput-{seed}")
