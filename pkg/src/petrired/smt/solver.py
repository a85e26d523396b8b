"""SMT-LIB v2.6 sessions with an external solver over stdin/stdout.

The solver command defaults to ``z3 -in -smt2`` and can be overridden with
the ``PETRIRED_SOLVER`` environment variable or an explicit path. Processes
are pooled: a released session is ``(reset)`` and handed to the next user,
which avoids paying solver start-up on every query.
"""

from __future__ import annotations

import logging
import os
import select
import shlex
import shutil
import subprocess
import threading
import time
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, TextIO, Union

log = logging.getLogger(__name__)

ENV_VAR = "PETRIRED_SOLVER"

SExpr = Union[str, List["SExpr"]]

# process-wide statistics, read by tests and the orchestrator
STATS = {"check_sat": 0, "sessions": 0}


class SolverError(RuntimeError):
    pass


class SolverTimeout(SolverError):
    pass


def solver_command(path: Optional[str] = None) -> List[str]:
    path = path or os.environ.get(ENV_VAR)
    if path:
        parts = shlex.split(path)
        if len(parts) == 1 and os.path.basename(parts[0]).startswith("z3"):
            parts += ["-in", "-smt2"]
        return parts
    exe = shutil.which("z3")
    if exe is None:
        raise SolverError("no SMT solver found: pass --solver or set " + ENV_VAR)
    return [exe, "-in", "-smt2"]


# ----------------------------------------------------------------------
# s-expressions


def tokenize(text: str) -> List[str]:
    out, i, n = [], 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            out.append(c)
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            out.append(text[i:j + 1])
            i = j + 1
        elif c == "|":
            j = text.index("|", i + 1)
            out.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def parse_sexprs(text: str) -> List[SExpr]:
    stack: List[list] = [[]]
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SolverError("unbalanced ')' in solver output")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError("unbalanced '(' in solver output")
    return stack[0]


def value_of(expr: SExpr) -> Fraction:
    """Numeric value of a model term: ``3``, ``1.5``, ``(- 2)``, ``(/ 1 3)``."""
    if isinstance(expr, str):
        if expr in ("true", "false"):
            return Fraction(int(expr == "true"))
        return Fraction(expr)
    head = expr[0]
    if head == "-" and len(expr) == 2:
        return -value_of(expr[1])
    if head == "-":
        return value_of(expr[1]) - sum(value_of(e) for e in expr[2:])
    if head == "/":
        return value_of(expr[1]) / value_of(expr[2])
    if head == "+":
        return sum((value_of(e) for e in expr[1:]), Fraction(0))
    if head == "*":
        out = Fraction(1)
        for e in expr[1:]:
            out *= value_of(e)
        return out
    if head == "to_real":
        return value_of(expr[1])
    raise SolverError(f"cannot read model value {expr!r}")


def parse_model(text: str) -> Dict[str, Fraction]:
    """Parse a ``(get-model)`` answer into name -> value."""
    exprs = parse_sexprs(text)
    if len(exprs) == 1 and isinstance(exprs[0], list) and exprs[0][:1] == ["model"]:
        body = exprs[0][1:]
    elif len(exprs) == 1 and isinstance(exprs[0], list):
        body = exprs[0]
    else:
        body = exprs
    out: Dict[str, Fraction] = {}
    for item in body:
        if isinstance(item, list) and item and item[0] == "define-fun" and item[2] == []:
            name = item[1].strip("|")
            if item[3] in ("Int", "Real", "Bool"):
                out[name] = value_of(item[4])
    return out


# ----------------------------------------------------------------------
# sessions


class _Process:
    def __init__(self, cmd: Sequence[str]):
        self.cmd = list(cmd)
        self.proc = subprocess.Popen(self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                     stderr=subprocess.DEVNULL, bufsize=0)
        self.buf = b""
        STATS["sessions"] += 1

    def send(self, text: str) -> None:
        try:
            self.proc.stdin.write(text.encode())
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverError(f"solver pipe closed: {exc}") from exc

    def read_sexpr(self, deadline: Optional[float]) -> str:
        """Read one complete answer (atom line or balanced s-expression)."""
        fd = self.proc.stdout.fileno()
        while True:
            text = self.buf.decode(errors="replace")
            done = _complete(text)
            if done is not None:
                self.buf = self.buf[len(text[:done].encode()):]
                return text[:done].strip()
            wait = None if deadline is None else max(0.0, deadline - time.monotonic())
            ready, _, _ = select.select([fd], [], [], wait)
            if not ready:
                raise SolverTimeout("solver did not answer in time")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise SolverError("solver terminated unexpectedly")
            self.buf += chunk

    def alive(self) -> bool:
        return self.proc.poll() is None

    def kill(self) -> None:
        try:
            self.proc.kill()
            self.proc.wait(timeout=5)
        except Exception:  # noqa: BLE001 - best effort cleanup
            pass


def _complete(text: str) -> Optional[int]:
    """Index just past the first complete top-level answer, if any."""
    i, n = 0, len(text)
    while i < n and text[i].isspace():
        i += 1
    if i >= n:
        return None
    if text[i] != "(":
        j = text.find("\n", i)
        return None if j < 0 else j + 1
    depth, in_str = 0, False
    while i < n:
        c = text[i]
        if in_str:
            if c == '"':
                in_str = False
        elif c == '"':
            in_str = True
        elif c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return None


_POOL: Dict[tuple, List[_Process]] = {}
_POOL_LOCK = threading.Lock()


def _acquire(cmd: Sequence[str]) -> _Process:
    key = tuple(cmd)
    with _POOL_LOCK:
        free = _POOL.get(key, [])
        while free:
            proc = free.pop()
            if proc.alive():
                return proc
    return _Process(cmd)


def _release(proc: _Process) -> None:
    if not proc.alive():
        return
    with _POOL_LOCK:
        free = _POOL.setdefault(tuple(proc.cmd), [])
        if len(free) < 8:
            free.append(proc)
            return
    proc.kill()


class SmtSession:
    """One incremental solver conversation.

    Commands are written as SMT-LIB text. A transcript file, when given,
    receives every command and answer for debugging.
    """

    def __init__(self, logic: Optional[str] = None, timeout_ms: int = 5000,
                 solver: Optional[str] = None, transcript: Optional[TextIO] = None):
        self.cmd = solver_command(solver)
        self.timeout_ms = timeout_ms
        self.transcript = transcript
        self._proc = _acquire(self.cmd)
        self.declared: Dict[str, str] = {}
        self.n_asserts = 0
        self._send("(reset)")
        self._send("(set-option :print-success false)")
        self._send("(set-option :produce-models true)")
        if logic:
            self._send(f"(set-logic {logic})")
        if timeout_ms and "z3" in os.path.basename(self.cmd[0]):
            self._send(f"(set-option :timeout {int(timeout_ms)})")

    def _send(self, text: str) -> None:
        if self._proc is None:
            raise SolverError("session closed")
        if self.transcript is not None:
            self.transcript.write(text + "\n")
        self._proc.send(text + "\n")

    def _answer(self, slack: float = 2.0) -> str:
        deadline = None
        if self.timeout_ms:
            deadline = time.monotonic() + self.timeout_ms / 1000.0 + slack
        try:
            out = self._proc.read_sexpr(deadline)
        except SolverError:
            self._kill()
            raise
        if self.transcript is not None:
            self.transcript.write("; => " + out.replace("\n", "\n; ") + "\n")
        if out.startswith("(error"):
            raise SolverError(out)
        return out

    def declare(self, name: str, sort: str) -> None:
        if name not in self.declared:
            self.declared[name] = sort
            self._send(f"(declare-const {name} {sort})")

    def add(self, expr: str) -> None:
        self.n_asserts += 1
        self._send(f"(assert {expr})")

    def push(self) -> None:
        self._send("(push 1)")

    def pop(self) -> None:
        self._send("(pop 1)")

    def check(self) -> str:
        STATS["check_sat"] += 1
        self._send("(check-sat)")
        out = self._answer()
        if out not in ("sat", "unsat", "unknown"):
            raise SolverError(f"unexpected check-sat answer {out!r}")
        return out

    def model(self) -> Dict[str, Fraction]:
        self._send("(get-model)")
        return parse_model(self._answer())

    def _kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc = None

    def close(self) -> None:
        if self._proc is not None:
            _release(self._proc)
            self._proc = None

    def __enter__(self) -> "SmtSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
