"""Vector-clock happens-before race detection over every fine-grained trace.

Edges: program order, monitor release -> acquire (including wait/resume and
join gates), volatile write -> read, atomic -> atomic, spawn, thread exit ->
join, semaphore release -> acquire, latch count-down -> await and
unpark -> park.  Plain-variable accesses are checked FastTrack-style
against the last write and the reads since it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .interp import (
    BODY, CREATED, DONE, MON, PC, REGS, STATUS, WOKEN,
    _gate, _instr, enabled, initial_state, interp_step, spurious_options, apply_spurious,
    terminal, wake_options,
)
from .litmus import JOIN_ENTER, JOIN_EXIT, JOIN_LOOP, LitmusProgram

DEFAULT_DRF_BUDGET = 2_000_000


@dataclass(frozen=True)
class Access:
    thread: int
    body: str
    pc: int
    kind: str        # "read" or "write"
    var: str

    def __str__(self) -> str:
        return f"t{self.thread} {self.body}@{self.pc} {self.kind} {self.var}"


@dataclass
class DrfReport:
    racy: Optional[bool]               # None when the budget ran out
    witness: Optional[tuple] = None    # (earlier access, later access)
    states: int = 0

    @property
    def verdict(self) -> str:
        return {True: "racy", False: "drf", None: "unknown"}[self.racy]


def _join(a: tuple, b: tuple) -> tuple:
    n = max(len(a), len(b))
    a = a + (0,) * (n - len(a))
    b = b + (0,) * (n - len(b))
    return tuple(max(x, y) for x, y in zip(a, b))


def _tick(vc: tuple, t: int) -> tuple:
    vc = vc + (0,) * (t + 1 - len(vc))
    return vc[:t] + (vc[t] + 1,) + vc[t + 1:]


def _get(vc: tuple, t: int) -> int:
    return vc[t] if t < len(vc) else 0


class _HB:
    """Mutable working copy of the happens-before bookkeeping for one step."""

    def __init__(self, hb: tuple) -> None:
        vcs, sync, accesses = hb
        self.vcs = list(vcs)
        self.sync = dict(sync)
        self.acc = list(accesses)

    def freeze(self) -> tuple:
        return (tuple(self.vcs), tuple(sorted(self.sync.items())), tuple(self.acc))

    def acquire(self, t: int, key) -> None:
        if key in self.sync:
            self.vcs[t] = _join(self.vcs[t], self.sync[key])

    def release(self, t: int, key) -> None:
        self.sync[key] = _join(self.sync.get(key, ()), self.vcs[t])
        self.vcs[t] = _tick(self.vcs[t], t)

    def access(self, t: int, v: int, write: bool, where: tuple):
        """Record a plain access; return the conflicting earlier access if racy."""
        last_w, reads = self.acc[v]
        vc = self.vcs[t]
        me = (t, _get(vc, t)) + where
        conflicts = [last_w] if last_w else []
        if write:
            conflicts += list(reads)
        for c in conflicts:
            u, epoch = c[0], c[1]
            if u != t and epoch > _get(vc, u):
                return c, me
        if write:
            self.acc[v] = (me, ())
        else:
            rest = tuple(r for r in reads if r[0] != t)
            self.acc[v] = (last_w, tuple(sorted(rest + (me,))))
        return None


def _initial_hb(prog: LitmusProgram) -> tuple:
    return (((1,),), (), tuple((None, ()) for _ in prog.vars))


def _step_hb(prog: LitmusProgram, state: tuple, hb: tuple, t: int):
    """Happens-before update for thread t's next step; returns (hb, race or None)."""
    h = _HB(hb)
    ts = state[0][t]
    status = ts[STATUS]
    race = None
    if status == CREATED:
        return hb, None
    if status == WOKEN:
        h.acquire(t, ("m", ts[MON]))
        return h.freeze(), None
    ins = _instr(prog, ts)
    if ins is None:
        h.sync[("x", t)] = h.vcs[t]
        return h.freeze(), None
    op, a = ins.op, ins.args
    where = (ts[BODY], ts[PC])
    if op in ("read", "write"):
        kind = prog.vars[a[0]][1]
        if kind == "plain":
            race = h.access(t, a[0], op == "write", where)
        elif op == "read":
            h.acquire(t, ("v", a[0]))
        else:
            if kind == "atomic":  # atomic set is a read-modify-write
                h.acquire(t, ("v", a[0]))
            h.release(t, ("v", a[0]))
    elif op == "rmw":
        h.acquire(t, ("v", a[0]))
        h.release(t, ("v", a[0]))
    elif op == "enter":
        h.acquire(t, ("m", a[0]))
    elif op == JOIN_ENTER:
        g = _gate(prog, state, ts[REGS][a[0]])
        if g is not None:
            h.acquire(t, ("m", g))
    elif op in ("exit", "wait"):
        h.release(t, ("m", a[0]))
    elif op == JOIN_LOOP:
        target = ts[REGS][a[0]]
        g = _gate(prog, state, target)
        if g is not None:
            if state[0][target][STATUS] == DONE:
                h.acquire(t, ("x", target))
            else:
                h.release(t, ("m", g))
    elif op == JOIN_EXIT:
        g = _gate(prog, state, ts[REGS][a[0]])
        if g is not None:
            h.release(t, ("m", g))
    elif op == "spawn":
        child = len(state[0])
        h.vcs.append(_tick(h.vcs[t], child))
        h.vcs[t] = _tick(h.vcs[t], t)
    elif op == "acquire":
        h.acquire(t, ("s", a[0]))
    elif op == "release":
        h.release(t, ("s", a[0]))
    elif op == "countdown":
        h.release(t, ("l", a[0]))
    elif op == "await":
        h.acquire(t, ("l", a[0]))
    elif op == "park":
        h.acquire(t, ("p", t))
    elif op == "unpark":
        h.release(t, ("p", ts[REGS][a[0]]))
    return h.freeze(), race


def check_drf(prog: LitmusProgram, budget: int = DEFAULT_DRF_BUDGET, spurious_limit: int = 0) -> DrfReport:
    """Search all fine-grained traces for a pair of unordered conflicting plain accesses."""
    if not any(kind == "plain" for _, kind, _ in prog.vars):
        return DrfReport(False)
    start = (initial_state(prog), _initial_hb(prog))
    seen = {start}
    stack = [start]
    while stack:
        state, hb = stack.pop()
        if terminal(prog, state, spurious_limit) is not None:
            continue
        succ = []
        for t in range(len(state[0])):
            if not enabled(prog, state, t):
                continue
            new_hb, race = _step_hb(prog, state, hb, t)
            if race is not None:
                return DrfReport(True, _witness(prog, race), len(seen))
            for w in wake_options(prog, state, t):
                succ.append((interp_step(prog, state, t, w), new_hb))
        if spurious_limit:
            succ.extend((apply_spurious(state, u), hb) for u in spurious_options(state, spurious_limit))
        for node in succ:
            if node not in seen:
                if len(seen) >= budget:
                    return DrfReport(None, None, len(seen))
                seen.add(node)
                stack.append(node)
    return DrfReport(False, None, len(seen))


def _witness(prog: LitmusProgram, race: tuple) -> tuple:
    def access(rec: tuple) -> Access:
        t, _, body, pc = rec
        ins = prog.bodies[body].instrs[pc]
        return Access(t, prog.bodies[body].name, pc, ins.op, prog.vars[ins.args[0]][0])
    earlier, later = race
    return access(earlier), access(later)
