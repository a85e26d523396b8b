"""Memory-less random exploration.

Walks fire enabled transitions from m0 without storing visited states,
restarting on deadlock or when the per-run step budget is spent. The enabled
set is maintained incrementally: after firing ``t`` only consumers of places
that ``t`` changed are rechecked. All randomness comes from ``random.Random``
(Mersenne Twister, seeded with a 64-bit value) so a seed fixes the trace.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from petrired.net import SparseNet

PSEUDO_DFS = "PseudoDFS"
PSEUDO_BFS = "PseudoBFS"
LEAST_ENABLED = "LeastEnabled"
PARIKH = "ParikhGuided"
HEURISTICS = (PSEUDO_DFS, PSEUDO_BFS, LEAST_ENABLED, PARIKH)

# process-wide counters (read by tests and the orchestrator)
STATS = {"steps": 0}

Predicate = Callable[[Sequence[int]], bool]


@dataclass
class WalkConfig:
    seed: int = 0
    max_steps: int = 100_000          # per run
    max_restarts: int = 4             # runs; total budget is max_steps * max_restarts
    heuristic: str = PSEUDO_DFS
    repeat_bias: float = 0.6
    lookahead: int = 8                # candidates scored by LeastEnabled
    deadline: Optional[float] = None  # time.monotonic() value

    def __post_init__(self):
        if self.max_steps <= 0 or self.max_restarts <= 0:
            raise ValueError("walk budgets must be positive")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic}")


@dataclass
class WalkResult:
    marking: Dict[int, int]
    trace: List[int]
    steps: int = 0

    def dump(self, net: SparseNet) -> str:
        """One transition name per line, prefixed by its step index."""
        return "".join(f"{i} {net.trans_names[t]}\n" for i, t in enumerate(self.trace))


class CompiledNet:
    """Flat view of a net snapshot for fast firing."""

    def __init__(self, net: SparseNet, visible_places: Optional[Sequence[int]] = None):
        self.net = net
        self.size = len(net.place_names)
        self.trans = list(net.transitions())
        self.pre: Dict[int, Tuple[Tuple[int, int], ...]] = {}
        self.delta: Dict[int, Tuple[Tuple[int, int], ...]] = {}
        self.up: Dict[int, Tuple[int, ...]] = {}
        self.down: Dict[int, Tuple[int, ...]] = {}
        for t in self.trans:
            self.pre[t] = tuple(net.pre[t].items())
            eff = net.effect(t)
            self.delta[t] = tuple(eff.items())
            up, down = set(), set()
            for p, d in eff.items():
                (up if d > 0 else down).update(net.pre_t[p])
            self.up[t] = tuple(sorted(up))
            self.down[t] = tuple(sorted(down))
        if visible_places is None:
            self.visible = {t: True for t in self.trans}
        else:
            vis = set(visible_places)
            self.visible = {t: any(p in vis for p, _ in self.delta[t]) for t in self.trans}

    def initial(self) -> List[int]:
        return list(self.net.m0)

    def is_enabled(self, m: List[int], t: int) -> bool:
        for p, w in self.pre[t]:
            if m[p] < w:
                return False
        return True


class _Run:
    """Mutable state of one walk run."""

    __slots__ = ("cn", "m", "en", "pos", "since", "fresh", "step")

    def __init__(self, cn: CompiledNet):
        self.cn = cn
        self.m = cn.initial()
        self.en: List[int] = []
        self.pos: Dict[int, int] = {}
        self.since: Dict[int, int] = {}
        self.fresh: List[int] = []
        self.step = 0
        m = self.m
        for t in cn.trans:
            if cn.is_enabled(m, t):
                self.pos[t] = len(self.en)
                self.en.append(t)
                self.since[t] = 0

    def fire(self, t: int) -> None:
        cn = self.cn
        m = self.m
        en = self.en
        pos = self.pos
        for p, d in cn.delta[t]:
            m[p] += d
        self.step += 1
        for u in cn.down[t]:
            i = pos.get(u, -1)
            if i >= 0:
                for p, w in cn.pre[u]:
                    if m[p] < w:
                        last = en.pop()
                        if last != u:
                            en[i] = last
                            pos[last] = i
                        del pos[u]
                        break
        fresh = []
        for u in cn.up[t]:
            if u not in pos:
                for p, w in cn.pre[u]:
                    if m[p] < w:
                        break
                else:
                    pos[u] = len(en)
                    en.append(u)
                    self.since[u] = self.step
                    fresh.append(u)
        self.fresh = fresh

    def enabled_after(self, t: int) -> int:
        """Number of enabled transitions after firing t (state unchanged)."""
        cn = self.cn
        m = self.m
        for p, d in cn.delta[t]:
            m[p] += d
        count = len(self.en)
        pos = self.pos
        for u in cn.down[t]:
            if u in pos and not cn.is_enabled(m, u):
                count -= 1
        for u in cn.up[t]:
            if u not in pos and cn.is_enabled(m, u):
                count += 1
        for p, d in cn.delta[t]:
            m[p] -= d
        return count


def _choose(run: _Run, heuristic: str, rng: random.Random, last: int,
            bias: float, lookahead: int, allowed: Optional[Callable[[int], bool]] = None) -> int:
    en = run.en
    if allowed is not None:
        en = [t for t in en if allowed(t)]
        if not en:
            return -1
    if last >= 0 and last in run.pos and (allowed is None or allowed(last)) \
            and rng.random() < bias:
        return last
    if heuristic == PSEUDO_DFS:
        fresh = run.fresh if allowed is None else [t for t in run.fresh if allowed(t)]
        if fresh:
            return fresh[int(rng.random() * len(fresh))]
    elif heuristic == PSEUDO_BFS:
        since = run.since
        best = en[int(rng.random() * len(en))]
        for _ in range(2):
            other = en[int(rng.random() * len(en))]
            if since[other] < since[best]:
                best = other
        return best
    elif heuristic == LEAST_ENABLED:
        cands = en if len(en) <= lookahead else rng.sample(en, lookahead)
        best, score = -1, None
        for t in cands:
            s = run.enabled_after(t)
            if score is None or s < score:
                best, score = t, s
        return best
    return en[int(rng.random() * len(en))]


def _rotation(start: str, pool: Sequence[str]) -> List[str]:
    pool = list(pool)
    if start in pool:
        i = pool.index(start)
        pool = pool[i:] + pool[:i]
    return pool


def _to_marking(m: List[int]) -> Dict[int, int]:
    return {p: v for p, v in enumerate(m) if v}


def random_walk(net: SparseNet, violation: Predicate, cfg: Optional[WalkConfig] = None,
                visible_places: Optional[Sequence[int]] = None,
                compiled: Optional[CompiledNet] = None,
                stop_on_deadlock: bool = False) -> Optional[WalkResult]:
    """Search a marking satisfying ``violation``; None when inconclusive.

    ``visible_places`` restricts predicate re-evaluation to firings that
    change one of these places (the predicate's support).
    """
    cfg = cfg or WalkConfig()
    cn = compiled or CompiledNet(net, visible_places)
    rng = random.Random(cfg.seed)
    total_budget = cfg.max_steps * cfg.max_restarts
    pool = (PSEUDO_DFS, PSEUDO_BFS, LEAST_ENABLED) if not stop_on_deadlock else \
        (LEAST_ENABLED, PSEUDO_DFS, LEAST_ENABLED, PSEUDO_BFS)
    rotation = _rotation(cfg.heuristic, pool)
    total = 0
    run_index = 0
    visible = cn.visible
    deadline = cfg.deadline
    while total < total_budget:
        # runs cut short by deadlocks may never reach the in-run check
        if deadline is not None and time.monotonic() > deadline:
            break
        heuristic = rotation[run_index % len(rotation)]
        run_index += 1
        run = _Run(cn)
        trace: List[int] = []
        if violation(run.m):
            STATS["steps"] += 0
            return WalkResult(_to_marking(run.m), trace, total)
        if not run.en:
            return WalkResult(_to_marking(run.m), trace, total) if stop_on_deadlock else None
        last = -1
        limit = min(cfg.max_steps, total_budget - total)
        steps = 0
        while steps < limit:
            if not run.en:
                break
            t = _choose(run, heuristic, rng, last, cfg.repeat_bias, cfg.lookahead)
            run.fire(t)
            trace.append(t)
            steps += 1
            last = t
            if visible[t] and violation(run.m):
                total += steps
                STATS["steps"] += steps
                return WalkResult(_to_marking(run.m), trace, total)
            if stop_on_deadlock and not run.en:
                total += steps
                STATS["steps"] += steps
                return WalkResult(_to_marking(run.m), trace, total)
            if deadline is not None and not steps & 4095 and time.monotonic() > deadline:
                total_budget = 0
                break
        total += steps
        STATS["steps"] += steps
        if steps == 0:
            break
    return None


def deadlock_walk(net: SparseNet, cfg: Optional[WalkConfig] = None) -> Optional[WalkResult]:
    """Search a reachable deadlock, preferring successors with few enabled events."""
    cfg = cfg or WalkConfig(heuristic=LEAST_ENABLED)
    return random_walk(net, lambda m: False, cfg, visible_places=(), stop_on_deadlock=True)


def parikh_replay(net: SparseNet, parikh: Mapping[int, int], violation: Predicate,
                  cfg: Optional[WalkConfig] = None,
                  classes: Optional[Mapping[int, Sequence[int]]] = None,
                  visible_places: Optional[Sequence[int]] = None) -> Optional[WalkResult]:
    """Replay a Parikh count vector pseudo-randomly.

    Only transitions with positive remaining count may fire; counts are
    keyed by class representative, and any member of a class consumes the
    class budget. Each attempt ends when counts run out or nothing allowed
    is enabled; the predicate is checked along the way.
    """
    cfg = cfg or WalkConfig(max_steps=10_000, max_restarts=16)
    cn = CompiledNet(net, visible_places)
    rng = random.Random(cfg.seed)
    owner: Dict[int, int] = {}
    for rep, members in (classes or {}).items():
        for t in members:
            owner[t] = rep
    for rep in parikh:
        owner.setdefault(rep, rep)
    total = 0
    for attempt in range(cfg.max_restarts):
        budget = {rep: c for rep, c in parikh.items() if c > 0}
        run = _Run(cn)
        trace: List[int] = []
        if violation(run.m):
            return WalkResult(_to_marking(run.m), trace, total)

        def allowed(t, budget=budget):
            rep = owner.get(t)
            return rep is not None and budget.get(rep, 0) > 0

        last = -1
        steps = 0
        while steps < cfg.max_steps and budget:
            t = _choose(run, PSEUDO_DFS if attempt % 2 else PSEUDO_BFS, rng, last,
                        cfg.repeat_bias, cfg.lookahead, allowed)
            if t < 0:
                break
            run.fire(t)
            trace.append(t)
            steps += 1
            last = t
            rep = owner[t]
            budget[rep] -= 1
            if budget[rep] == 0:
                del budget[rep]
            if cn.visible[t] and violation(run.m):
                total += steps
                STATS["steps"] += steps
                return WalkResult(_to_marking(run.m), trace, total)
        total += steps
        STATS["steps"] += steps
        if violation(run.m):
            return WalkResult(_to_marking(run.m), trace, total)
    return None


def replay(net: SparseNet, trace: Sequence[int]) -> Dict[int, int]:
    """Re-execute a trace from m0 through enabled/fire; raises on a disabled step."""
    from petrired.net import fire
    m = net.initial_marking()
    for t in trace:
        m = fire(m, t, net)
    return m
