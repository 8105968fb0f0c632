"""Run litmus programs on the real engine, so engine and oracle can be compared."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .. import primitives as P
from ..core import OutcomeKind, ProtocolError
from ..engine import DEFAULT_MAX_STEPS, Engine, Execution, Phase, current
from ..strategies import DfsStrategy, dfs_next
from .interp import STATUS_NAMES, RUN, WAITING, WOKEN
from .litmus import CMPS, JOIN_ENTER, JOIN_EXIT, JOIN_LOOP, NUM_REGS, LitmusProgram


@dataclass
class _Ctx:
    prog: LitmusProgram
    cells: list = field(default_factory=list)
    monitors: list = field(default_factory=list)
    sems: list = field(default_factory=list)
    latches: list = field(default_factory=list)
    handles: dict = field(default_factory=dict)
    where: dict = field(default_factory=dict)       # tid -> (body, pc)
    failure: Optional[tuple] = None
    panic_at: Optional[tuple] = None

    def store(self) -> tuple:
        out = []
        for (_, kind, _), cell in zip(self.prog.vars, self.cells):
            out.append(cell[0] if kind == "plain" else cell._value)
        return tuple(out)


def _val(opnd, regs) -> int:
    return regs[opnd[1]] if opnd[0] == "r" else opnd[1]


def _body(ctx: _Ctx, body_i: int) -> None:
    engine, rec = current()
    tid = rec.id
    prog = ctx.prog
    instrs = prog.bodies[body_i].instrs
    regs = [0] * NUM_REGS
    pc = 0
    try:
        while pc < len(instrs):
            ctx.where[tid] = (body_i, pc)
            ins = instrs[pc]
            op, a = ins.op, ins.args
            nxt = pc + 1
            if op == "read":
                cell = ctx.cells[a[0]]
                regs[a[1]] = cell[0] if prog.vars[a[0]][1] == "plain" else cell.get()
            elif op == "write":
                cell, v = ctx.cells[a[0]], _val(a[1], regs)
                if prog.vars[a[0]][1] == "plain":
                    cell[0] = v
                else:
                    cell.set(v)
            elif op == "rmw":
                regs[a[2]] = ctx.cells[a[0]].get_and_add(a[1])
            elif op == "set":
                regs[a[0]] = _val(a[1], regs)
            elif op == "add":
                regs[a[0]] += _val(a[1], regs)
            elif op == "br":
                if CMPS[a[1]](regs[a[0]], _val(a[2], regs)):
                    nxt = a[3]
            elif op == "jmp":
                nxt = a[0]
            elif op == "assert":
                if not CMPS[a[1]](regs[a[0]], _val(a[2], regs)):
                    ctx.failure = (body_i, pc, a[3])
                P.assert_now(CMPS[a[1]](regs[a[0]], _val(a[2], regs)), a[3])
            elif op == "enter":
                P.monitor_enter(ctx.monitors[a[0]])
            elif op == "exit":
                P.monitor_exit(ctx.monitors[a[0]])
            elif op == "wait":
                P.wait(ctx.monitors[a[0]])
            elif op == "notify":
                P.notify(ctx.monitors[a[0]])
            elif op == "notifyall":
                P.notify_all(ctx.monitors[a[0]])
            elif op == "spawn":
                h = P.spawn(_body, ctx, a[0], name=prog.bodies[a[0]].name)
                ctx.handles[h.id] = h
                regs[a[1]] = h.id
            elif op == JOIN_ENTER:
                # the three join steps run as one unit, mirroring primitives.join
                target = regs[a[0]]
                if target == tid or target not in ctx.handles:
                    raise ProtocolError(f"bad join target {target}")
                gate = engine.join_gate(target)
                P.monitor_enter(gate)
                ctx.where[tid] = (body_i, pc + 1)
                while not engine.is_terminated(target):
                    P.wait(gate)
                ctx.where[tid] = (body_i, pc + 2)
                P.monitor_exit(gate)
                nxt = pc + 3
            elif op in (JOIN_LOOP, JOIN_EXIT):
                raise ProtocolError("jump into the middle of a join")
            elif op == "acquire":
                P.sem_acquire(ctx.sems[a[0]])
            elif op == "release":
                P.sem_release(ctx.sems[a[0]])
            elif op == "countdown":
                P.latch_count_down(ctx.latches[a[0]])
            elif op == "await":
                P.latch_await(ctx.latches[a[0]])
            elif op == "park":
                P.park()
            elif op == "unpark":
                target = regs[a[0]]
                if target not in ctx.handles:
                    raise ProtocolError(f"bad unpark target {target}")
                P.unpark(ctx.handles[target])
            elif op == "yield":
                P.yield_()
            pc = nxt
        ctx.where[tid] = (body_i, pc)
    except (ProtocolError, KeyError, IndexError) as exc:
        ctx.panic_at = (body_i, pc)
        raise ProtocolError(str(exc)) from exc


def _main(ctx: _Ctx) -> None:
    prog = ctx.prog
    for _, kind, init in prog.vars:
        if kind == "plain":
            ctx.cells.append([init])
        elif kind == "volatile":
            ctx.cells.append(P.Volatile(init))
        else:
            ctx.cells.append(P.AtomicInt(init))
    ctx.monitors = [P.Monitor() for _ in prog.monitors]
    ctx.sems = [P.Semaphore(n) for _, n in prog.sems]
    ctx.latches = [P.Latch(n) for _, n in prog.latches]
    ctx.handles[0] = P.ThreadHandle(0)
    _body(ctx, 0)


def litmus_target(prog: LitmusProgram):
    """A plain entry point running ``prog`` on whichever engine calls it."""
    def main() -> None:
        _main(_Ctx(prog))
    main.__name__ = f"litmus_{prog.name}"
    return main


@dataclass
class LitmusExecution:
    execution: Execution
    key: tuple


def run_litmus(prog: LitmusProgram, strategy, *, spurious: bool = False, spurious_limit: int = 1,
               max_steps: int = DEFAULT_MAX_STEPS) -> LitmusExecution:
    """Run ``prog`` once and translate the result into an oracle outcome key."""
    ctx = _Ctx(prog)
    engine = Engine(strategy, max_steps=max_steps, spurious=spurious, spurious_limit=spurious_limit)
    ex = engine.run(_main, ctx)
    kind = ex.outcome.kind
    if kind is OutcomeKind.PASS:
        key = ("pass", ctx.store())
    elif kind is OutcomeKind.ASSERTION_VIOLATION:
        key = ("violation",) + ctx.failure
    elif kind is OutcomeKind.PANIC:
        key = ("panic",) + (ctx.panic_at or (-1, -1))
    elif kind is OutcomeKind.DEADLOCK:
        blocked = []
        st = engine.state
        for t, rec in sorted(st.threads.items()):
            if rec.phase is Phase.TERMINATED:
                continue
            body, pc = ctx.where.get(t, (0, 0))
            if rec.phase is Phase.WAITING:
                status = WOKEN if t in st.waiting.pending_wake else WAITING
            else:
                status = RUN
            blocked.append((body, pc, STATUS_NAMES[status]))
        key = ("deadlock", ctx.store(), tuple(sorted(blocked)))
    else:
        key = ("budget",)
    return LitmusExecution(ex, key)


@dataclass
class EngineDfsResult:
    schedules: int = 0
    class_counts: Counter = field(default_factory=Counter)
    outcomes: set = field(default_factory=set)
    executions: list = field(default_factory=list)


def dfs_litmus(prog: LitmusProgram, *, spurious: bool = False, spurious_limit: int = 1,
               keep_executions: bool = False, max_schedules: Optional[int] = None) -> EngineDfsResult:
    """Exhaustive engine DFS over ``prog``; counts comparable with enumerate_sps."""
    res = EngineDfsResult()
    prefix: list = []
    while True:
        strat = DfsStrategy(prefix)
        le = run_litmus(prog, strat, spurious=spurious, spurious_limit=spurious_limit)
        res.schedules += 1
        res.class_counts[le.key[0]] += 1
        res.outcomes.add(le.key)
        if keep_executions:
            res.executions.append(le.execution)
        nxt = dfs_next(strat.path)
        if nxt is None or (max_schedules is not None and res.schedules >= max_schedules):
            return res
        prefix = nxt
