"""Litmus programs: a tiny line-oriented language for oracle-scale checking.

Grammar (version 1)::

    file     := header decl* thread+
    header   := "litmus" "v1" NAME
    decl     := "var" NAME ("plain" | "volatile" | "atomic") INT
              | "sem" NAME INT
              | "latch" NAME INT
              | "expect" CLASS+              # outcome classes, default features
              | "expect-spurious" CLASS+     # outcome classes with spurious wakes
              | "drf" ("yes" | "no")         # expected data-race freedom
    thread   := "thread" NAME line*          # the first thread is main
    line     := LABEL ":" | instr
    instr    := "read" VAR REG | "write" VAR OPND | "rmw" VAR INT REG
              | "enter" MON | "exit" MON | "wait" MON | "notify" MON | "notifyall" MON
              | "spawn" THREAD REG | "join" REG
              | "set" REG OPND | "add" REG OPND
              | "br" REG CMP OPND LABEL | "jmp" LABEL
              | "assert" REG CMP OPND [STRING]
              | "acquire" SEM | "release" SEM | "countdown" LATCH | "await" LATCH
              | "park" | "unpark" REG | "yield"
    OPND     := INT | REG          REG := r0 .. r7
    CMP      := == | != | < | <= | > | >=
    CLASS    := pass | deadlock | violation | panic

``#`` starts a comment.  Monitors are declared implicitly by use.
``read``/``write`` on a volatile or atomic variable is a synchronizing
access; on a plain variable it is thread-local.  ``join`` compiles to three
internal steps (enter the join gate, wait until the target is done, exit
the gate).
"""

from __future__ import annotations

import operator
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..core import ShadowSchedError

FORMAT_VERSION = "v1"
NUM_REGS = 8
OUTCOME_CLASSES = ("pass", "deadlock", "violation", "panic")

CMPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

# internal opcodes produced by ``join``
JOIN_ENTER = "join_enter"
JOIN_LOOP = "join_loop"
JOIN_EXIT = "join_exit"


class LitmusSyntaxError(ShadowSchedError):
    def __init__(self, message: str, line: int = 0, source: str = "") -> None:
        where = f"{source}:{line}: " if source else f"line {line}: "
        super().__init__(where + message)
        self.line = line


# operand: ("r", index) or ("c", constant)
Operand = tuple


@dataclass(frozen=True)
class Instr:
    op: str
    args: tuple
    line: int = 0
    text: str = ""


@dataclass
class Body:
    name: str
    instrs: list
    source_len: int = 0


@dataclass
class LitmusProgram:
    name: str
    vars: list = field(default_factory=list)        # (name, kind, initial)
    sems: list = field(default_factory=list)        # (name, initial)
    latches: list = field(default_factory=list)     # (name, initial)
    monitors: list = field(default_factory=list)    # names
    bodies: list = field(default_factory=list)      # Body, main first
    expect: Optional[frozenset] = None
    expect_spurious: Optional[frozenset] = None
    drf: Optional[bool] = None
    source: str = ""

    def var_kind(self, index: int) -> str:
        return self.vars[index][1]

    def var_index(self, name: str) -> int:
        return [v[0] for v in self.vars].index(name)

    @property
    def max_source_len(self) -> int:
        return max(b.source_len for b in self.bodies)

    def describe(self) -> str:
        return f"{self.name}: {len(self.bodies)} bodies, vars={[v[0] for v in self.vars]}"


def _int(tok: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise LitmusSyntaxError(f"expected integer, got {tok!r}", line) from None


def _reg(tok: str, line: int) -> int:
    if len(tok) >= 2 and tok[0] == "r" and tok[1:].isdigit():
        i = int(tok[1:])
        if i < NUM_REGS:
            return i
    raise LitmusSyntaxError(f"expected register r0..r{NUM_REGS - 1}, got {tok!r}", line)


def _operand(tok: str, line: int) -> Operand:
    if tok.startswith("r") and tok[1:].isdigit():
        return ("r", _reg(tok, line))
    return ("c", _int(tok, line))


_ARITY = {
    "read": 2, "write": 2, "rmw": 3, "enter": 1, "exit": 1, "wait": 1, "notify": 1,
    "notifyall": 1, "spawn": 2, "join": 1, "set": 2, "add": 2, "br": 4, "jmp": 1,
    "assert": (3, 4), "acquire": 1, "release": 1, "countdown": 1, "await": 1,
    "park": 0, "unpark": 1, "yield": 0,
}


def parse_litmus(text: str, source: str = "") -> LitmusProgram:
    prog: Optional[LitmusProgram] = None
    raw_bodies: list[tuple[str, list]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            toks = shlex.split(line)
        except ValueError as exc:
            raise LitmusSyntaxError(str(exc), lineno, source) from None
        head = toks[0]
        if prog is None:
            if head != "litmus" or len(toks) != 3:
                raise LitmusSyntaxError("file must start with 'litmus v1 NAME'", lineno, source)
            if toks[1] != FORMAT_VERSION:
                raise LitmusSyntaxError(f"unsupported litmus format {toks[1]!r}", lineno, source)
            prog = LitmusProgram(toks[2], source=source)
            continue
        if head == "thread":
            if len(toks) != 2:
                raise LitmusSyntaxError("usage: thread NAME", lineno, source)
            raw_bodies.append((toks[1], []))
            continue
        if not raw_bodies:
            _declaration(prog, toks, lineno, source)
            continue
        raw_bodies[-1][1].append((lineno, toks, line))
    if prog is None:
        raise LitmusSyntaxError("empty litmus file", 0, source)
    if not raw_bodies:
        raise LitmusSyntaxError("program has no threads", 0, source)
    names = [n for n, _ in raw_bodies]
    if len(set(names)) != len(names):
        raise LitmusSyntaxError(f"duplicate thread names {names}", 0, source)
    for name, lines in raw_bodies:
        prog.bodies.append(_compile_body(prog, name, lines, names, source))
    return prog


def _declaration(prog: LitmusProgram, toks: list, lineno: int, source: str) -> None:
    head = toks[0]
    taken = {v[0] for v in prog.vars} | {s[0] for s in prog.sems} | {l[0] for l in prog.latches}
    if head == "var":
        if len(toks) != 4 or toks[2] not in ("plain", "volatile", "atomic"):
            raise LitmusSyntaxError("usage: var NAME plain|volatile|atomic INIT", lineno, source)
        if toks[1] in taken:
            raise LitmusSyntaxError(f"duplicate name {toks[1]!r}", lineno, source)
        prog.vars.append((toks[1], toks[2], _int(toks[3], lineno)))
    elif head in ("sem", "latch"):
        if len(toks) != 3:
            raise LitmusSyntaxError(f"usage: {head} NAME INIT", lineno, source)
        if toks[1] in taken:
            raise LitmusSyntaxError(f"duplicate name {toks[1]!r}", lineno, source)
        init = _int(toks[2], lineno)
        if init < 0:
            raise LitmusSyntaxError(f"{head} initial value must be >= 0", lineno, source)
        (prog.sems if head == "sem" else prog.latches).append((toks[1], init))
    elif head in ("expect", "expect-spurious"):
        classes = frozenset(toks[1:])
        bad = classes - set(OUTCOME_CLASSES)
        if not classes or bad:
            raise LitmusSyntaxError(f"bad outcome classes {sorted(bad)}", lineno, source)
        if head == "expect":
            prog.expect = classes
        else:
            prog.expect_spurious = classes
    elif head == "drf":
        if len(toks) != 2 or toks[1] not in ("yes", "no"):
            raise LitmusSyntaxError("usage: drf yes|no", lineno, source)
        prog.drf = toks[1] == "yes"
    else:
        raise LitmusSyntaxError(f"unknown declaration {head!r}", lineno, source)


def _compile_body(prog: LitmusProgram, name: str, lines: list, bodies: list, source: str) -> Body:
    # first pass: expand joins, place labels
    expanded: list[tuple[int, list, str]] = []
    labels: dict[str, int] = {}
    source_len = 0
    for lineno, toks, text in lines:
        if len(toks) == 1 and toks[0].endswith(":"):
            label = toks[0][:-1]
            if label in labels:
                raise LitmusSyntaxError(f"duplicate label {label!r}", lineno, source)
            labels[label] = len(expanded)
            continue
        op = toks[0]
        if op not in _ARITY:
            raise LitmusSyntaxError(f"unknown instruction {op!r}", lineno, source)
        arity = _ARITY[op]
        ok = len(toks) - 1 in arity if isinstance(arity, tuple) else len(toks) - 1 == arity
        if not ok:
            raise LitmusSyntaxError(f"wrong number of operands for {op!r}", lineno, source)
        source_len += 1
        if op == "join":
            for sub in (JOIN_ENTER, JOIN_LOOP, JOIN_EXIT):
                expanded.append((lineno, [sub, toks[1]], text))
        else:
            expanded.append((lineno, toks, text))

    def label(tok: str, lineno: int) -> int:
        if tok not in labels:
            raise LitmusSyntaxError(f"undefined label {tok!r}", lineno, source)
        return labels[tok]

    def var(tok: str, lineno: int) -> int:
        for i, v in enumerate(prog.vars):
            if v[0] == tok:
                return i
        raise LitmusSyntaxError(f"undeclared variable {tok!r}", lineno, source)

    def named(tok: str, table: list, what: str, lineno: int) -> int:
        for i, v in enumerate(table):
            if v[0] == tok:
                return i
        raise LitmusSyntaxError(f"undeclared {what} {tok!r}", lineno, source)

    def monitor(tok: str) -> int:
        if tok not in prog.monitors:
            prog.monitors.append(tok)
        return prog.monitors.index(tok)

    instrs = []
    for lineno, toks, text in expanded:
        op, a = toks[0], toks[1:]
        if op == "read":
            args = (var(a[0], lineno), _reg(a[1], lineno))
        elif op == "write":
            args = (var(a[0], lineno), _operand(a[1], lineno))
        elif op == "rmw":
            v = var(a[0], lineno)
            if prog.vars[v][1] != "atomic":
                raise LitmusSyntaxError("rmw needs an atomic variable", lineno, source)
            args = (v, _int(a[1], lineno), _reg(a[2], lineno))
        elif op in ("enter", "exit", "wait", "notify", "notifyall"):
            args = (monitor(a[0]),)
        elif op == "spawn":
            if a[0] not in bodies:
                raise LitmusSyntaxError(f"unknown thread body {a[0]!r}", lineno, source)
            args = (bodies.index(a[0]), _reg(a[1], lineno))
        elif op in (JOIN_ENTER, JOIN_LOOP, JOIN_EXIT, "unpark"):
            args = (_reg(a[0], lineno),)
        elif op in ("set", "add"):
            args = (_reg(a[0], lineno), _operand(a[1], lineno))
        elif op == "br":
            if a[1] not in CMPS:
                raise LitmusSyntaxError(f"unknown comparison {a[1]!r}", lineno, source)
            args = (_reg(a[0], lineno), a[1], _operand(a[2], lineno), label(a[3], lineno))
        elif op == "jmp":
            args = (label(a[0], lineno),)
        elif op == "assert":
            if a[1] not in CMPS:
                raise LitmusSyntaxError(f"unknown comparison {a[1]!r}", lineno, source)
            msg = a[3] if len(a) == 4 else f"{a[0]} {a[1]} {a[2]}"
            args = (_reg(a[0], lineno), a[1], _operand(a[2], lineno), msg)
        elif op in ("acquire", "release"):
            args = (named(a[0], prog.sems, "semaphore", lineno),)
        elif op in ("countdown", "await"):
            args = (named(a[0], prog.latches, "latch", lineno),)
        else:
            args = ()
        instrs.append(Instr(op, args, lineno, text))
    return Body(name, instrs, source_len)


def load_litmus(path: Union[str, Path]) -> LitmusProgram:
    path = Path(path)
    return parse_litmus(path.read_text(), source=str(path))


def load_corpus(directory: Union[str, Path]) -> list[LitmusProgram]:
    return [load_litmus(p) for p in sorted(Path(directory).glob("*.litmus"))]
