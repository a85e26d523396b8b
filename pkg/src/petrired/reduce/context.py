"""State shared by all reduction rules."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Set

from petrired.net import SparseNet, stuttering
from petrired.props import DEADLOCK, PropertySet
from petrired.reduce.trace import ReductionTrace

SAFETY = "safety"
DEADLOCK_MODE = "deadlock"


@dataclass
class Reduction:
    """A net under reduction together with the properties it must preserve.

    In deadlock mode the support is empty. ``fixed`` maps support place names
    that were replaced by a constant (rules 9 and 10) to that constant.
    ``deadlock`` is set when a rule decides deadlock existence outright.
    """
    net: SparseNet
    ps: Optional[PropertySet] = None
    mode: str = SAFETY
    trace: ReductionTrace = field(default_factory=ReductionTrace)
    fixed: Dict[str, int] = field(default_factory=dict)
    deadlock: Optional[bool] = None
    max_product: int = 32
    fork_depth: int = 5
    applied: Counter = field(default_factory=Counter)
    # places that must survive regardless of properties (used by tests)
    keep: Set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.mode not in (SAFETY, DEADLOCK_MODE):
            raise ValueError(f"unknown mode {self.mode}")

    @property
    def deadlock_mode(self) -> bool:
        return self.mode == DEADLOCK_MODE

    def supp(self) -> Set[int]:
        if self.deadlock_mode:
            return set(self.keep)
        out = set(self.keep)
        if self.ps is not None:
            out |= self.ps.support()
        return out

    def stutter(self, supp: Optional[Set[int]] = None) -> Set[int]:
        return stuttering(self.net, self.supp() if supp is None else supp)

    def record(self, rule: str):
        self.applied[rule] += 1
        return self.trace.record(self.net, rule)

    def substitute(self, values: Mapping[int, int], entry) -> None:
        """Replace support places by constants in the open properties."""
        if self.ps is None or self.deadlock_mode:
            return
        supp = self.ps.support()
        hit = {p: v for p, v in values.items() if p in supp}
        if not hit:
            return
        for p, v in hit.items():
            name = self.net.place_names[p]
            self.fixed[name] = v
            entry.ops.append(("FIX", name, v))
        self.ps.substitute(hit, technique="REDUCTION")

    def conclude_deadlock(self, exists: bool) -> None:
        self.deadlock = exists
        if self.ps is not None:
            for prop in self.ps.open():
                if prop.kind == DEADLOCK:
                    prop.close(not exists, "REDUCTION")
