"""Sequential interpreter for litmus programs.

States are plain nested tuples so they hash cheaply for memoization::

    State  = (threads, store, owners, sems, latches, permits, end)
    Thread = (body, status, pc, regs, mon, depth, resume_pc, spurious_used)

``owners[m]`` is ``(owner tid or -1, hold depth)``.  Monitors declared by
the program come first; the join gate of thread ``k`` is monitor
``n_monitors + k``.  ``end`` is None while running, or the outcome key of a
violation or panic.

Outcome keys::

    ("pass", store)
    ("deadlock", store, blocked)       blocked: sorted (body, pc, status) per live thread
    ("violation", body, pc, message)
    ("panic", body, pc)
"""

from __future__ import annotations

from typing import Optional

from ..core import UsageError
from .litmus import CMPS, JOIN_ENTER, JOIN_EXIT, JOIN_LOOP, NUM_REGS, LitmusProgram

CREATED, RUN, WAITING, WOKEN, DONE = range(5)
STATUS_NAMES = ("created", "run", "waiting", "woken", "done")

# thread tuple fields
BODY, STATUS, PC, REGS, MON, DEPTH, RESUME, SPURIOUS = range(8)

# ops that are synchronization instructions, i.e. legal switch points under SPS
_SWITCH_OPS = frozenset({"enter", JOIN_ENTER, "rmw", "acquire", "await", "park", "unpark", "yield"})
_SYNC_VAR_OPS = frozenset({"read", "write"})


def initial_state(prog: LitmusProgram) -> tuple:
    main = (0, CREATED, 0, (0,) * NUM_REGS, -1, 0, 0, 0)
    return (
        (main,),
        tuple(v[2] for v in prog.vars),
        ((-1, 0),) * (len(prog.monitors) + 1),
        tuple(s[1] for s in prog.sems),
        tuple(l[1] for l in prog.latches),
        (0,),
        None,
    )


def outcome_class(key: tuple) -> str:
    return key[0]


def _val(opnd, regs) -> int:
    return regs[opnd[1]] if opnd[0] == "r" else opnd[1]


def _instr(prog: LitmusProgram, ts: tuple):
    body = prog.bodies[ts[BODY]].instrs
    return body[ts[PC]] if ts[PC] < len(body) else None


def _gate(prog: LitmusProgram, state: tuple, tid: int) -> Optional[int]:
    """Monitor index of ``tid``'s join gate, or None if tid is not a thread."""
    if 0 <= tid < len(state[0]):
        return len(prog.monitors) + tid
    return None


def enabled(prog: LitmusProgram, state: tuple, t: int) -> bool:
    """True iff next(state, t) is defined."""
    if state[6] is not None:
        return False
    ts = state[0][t]
    st = ts[STATUS]
    if st == CREATED:
        return True
    if st == WOKEN:
        return state[2][ts[MON]][0] == -1
    if st != RUN:
        return False
    ins = _instr(prog, ts)
    if ins is None:
        return True
    op = ins.op
    if op == "enter":
        return state[2][ins.args[0]][0] in (-1, t)
    if op == JOIN_ENTER:
        target = ts[REGS][ins.args[0]]
        g = _gate(prog, state, target)
        if g is None or target == t:
            return True  # stepping it panics
        return state[2][g][0] in (-1, t)
    if op == "acquire":
        return state[3][ins.args[0]] > 0
    if op == "await":
        return state[4][ins.args[0]] == 0
    if op == "park":
        return state[5][t] > 0
    return True


def is_switch_point(prog: LitmusProgram, state: tuple, t: int) -> bool:
    """Whether thread t's next step is a synchronization instruction."""
    ts = state[0][t]
    if ts[STATUS] in (CREATED, WOKEN):
        return True
    if ts[STATUS] != RUN:
        return False
    ins = _instr(prog, ts)
    if ins is None:
        return False
    if ins.op in _SWITCH_OPS:
        return True
    if ins.op in _SYNC_VAR_OPS:
        return prog.vars[ins.args[0]][1] != "plain"
    return False


def wake_options(prog: LitmusProgram, state: tuple, t: int) -> list:
    """The notify-designation branches of t's next step ([None] if no choice)."""
    ts = state[0][t]
    if ts[STATUS] != RUN:
        return [None]
    ins = _instr(prog, ts)
    if ins is None or ins.op != "notify":
        return [None]
    m = ins.args[0]
    if state[2][m][0] != t:
        return [None]
    ws = waiters(state, m)
    return ws if len(ws) >= 2 else [None]


def waiters(state: tuple, m: int) -> list:
    return [u for u, ts in enumerate(state[0]) if ts[STATUS] == WAITING and ts[MON] == m]


def spurious_options(state: tuple, limit: int) -> list:
    if state[6] is not None:
        return []
    return [u for u, ts in enumerate(state[0]) if ts[STATUS] == WAITING and ts[SPURIOUS] < limit]


def apply_spurious(state: tuple, t: int) -> tuple:
    threads = list(state[0])
    ts = threads[t]
    if ts[STATUS] != WAITING:
        raise UsageError(f"thread {t} is not waiting")
    threads[t] = ts[:STATUS] + (WOKEN,) + ts[PC:SPURIOUS] + (ts[SPURIOUS] + 1,)
    return (tuple(threads),) + state[1:]


def terminal(prog: LitmusProgram, state: tuple, spurious_limit: int = 0) -> Optional[tuple]:
    """Outcome key if no further step is possible, else None."""
    if state[6] is not None:
        return state[6]
    threads = state[0]
    if all(ts[STATUS] == DONE for ts in threads):
        return ("pass", state[1])
    if any(enabled(prog, state, t) for t in range(len(threads))):
        return None
    if spurious_limit and spurious_options(state, spurious_limit):
        return None
    blocked = tuple(sorted((ts[BODY], ts[PC], STATUS_NAMES[ts[STATUS]])
                           for ts in threads if ts[STATUS] != DONE))
    return ("deadlock", state[1], blocked)


def _set_thread(state: tuple, t: int, ts: tuple) -> tuple:
    threads = state[0]
    return (threads[:t] + (ts,) + threads[t + 1:],) + state[1:]


def _with(state: tuple, **kw) -> tuple:
    fields = ("threads", "store", "owners", "sems", "latches", "permits", "end")
    parts = list(state)
    for k, v in kw.items():
        parts[fields.index(k)] = v
    return tuple(parts)


def _replace(tup: tuple, i: int, v) -> tuple:
    return tup[:i] + (v,) + tup[i + 1:]


def interp_step(prog: LitmusProgram, state: tuple, t: int, wake: Optional[int] = None) -> tuple:
    """Execute exactly one instruction (or pseudo-step) of thread t."""
    if not enabled(prog, state, t):
        raise UsageError(f"thread {t} cannot run in this state")
    threads, store, owners, sems, latches, permits, _ = state
    ts = threads[t]
    body_i, status, pc, regs = ts[BODY], ts[STATUS], ts[PC], ts[REGS]

    if status == CREATED:
        return _set_thread(state, t, ts[:STATUS] + (RUN,) + ts[PC:])
    if status == WOKEN:
        m = ts[MON]
        owners = _replace(owners, m, (t, ts[DEPTH]))
        ts = (body_i, RUN, ts[RESUME], regs, -1, 0, 0, ts[SPURIOUS])
        return _with(_set_thread(state, t, ts), owners=owners)

    ins = _instr(prog, ts)
    if ins is None:
        # thread exit: wake everyone joining on us
        g = len(prog.monitors) + t
        new = list(threads)
        for u, us in enumerate(threads):
            if us[STATUS] == WAITING and us[MON] == g:
                new[u] = us[:STATUS] + (WOKEN,) + us[PC:]
        new[t] = ts[:STATUS] + (DONE,) + ts[PC:]
        return _with(state, threads=tuple(new))

    op, a = ins.op, ins.args
    nxt = pc + 1

    def advance(st, regs_=regs, pc_=nxt):
        return _set_thread(st, t, (body_i, RUN, pc_, regs_) + ts[MON:])

    def panic():
        return _with(state, end=("panic", body_i, pc))

    if op == "read":
        return advance(state, _replace(regs, a[1], store[a[0]]))
    if op == "write":
        return advance(_with(state, store=_replace(store, a[0], _val(a[1], regs))))
    if op == "rmw":
        old = store[a[0]]
        return advance(_with(state, store=_replace(store, a[0], old + a[1])), _replace(regs, a[2], old))
    if op == "set":
        return advance(state, _replace(regs, a[0], _val(a[1], regs)))
    if op == "add":
        return advance(state, _replace(regs, a[0], regs[a[0]] + _val(a[1], regs)))
    if op == "br":
        taken = CMPS[a[1]](regs[a[0]], _val(a[2], regs))
        return advance(state, pc_=a[3] if taken else nxt)
    if op == "jmp":
        return advance(state, pc_=a[0])
    if op == "assert":
        if CMPS[a[1]](regs[a[0]], _val(a[2], regs)):
            return advance(state)
        return _with(state, end=("violation", body_i, pc, a[3]))
    if op == "yield":
        return advance(state)

    if op in ("enter", JOIN_ENTER):
        if op == "enter":
            m = a[0]
        else:
            target = regs[a[0]]
            m = _gate(prog, state, target)
            if m is None or target == t:
                return panic()
        owner, depth = owners[m]
        return advance(_with(state, owners=_replace(owners, m, (t, depth + 1))))
    if op in ("exit", JOIN_EXIT):
        m = a[0] if op == "exit" else _gate(prog, state, regs[a[0]])
        if m is None or owners[m][0] != t:
            return panic()
        depth = owners[m][1] - 1
        return advance(_with(state, owners=_replace(owners, m, (t, depth) if depth else (-1, 0))))
    if op in ("wait", JOIN_LOOP):
        if op == "wait":
            m, resume = a[0], nxt
        else:
            target = regs[a[0]]
            m, resume = _gate(prog, state, target), pc
            if m is None:
                return panic()
            if threads[target][STATUS] == DONE:
                return advance(state)
        if owners[m][0] != t:
            return panic()
        depth = owners[m][1]
        ts = (body_i, WAITING, pc, regs, m, depth, resume, ts[SPURIOUS])
        return _with(_set_thread(state, t, ts), owners=_replace(owners, m, (-1, 0)))
    if op in ("notify", "notifyall"):
        m = a[0]
        if owners[m][0] != t:
            return panic()
        ws = waiters(state, m)
        if op == "notify" and len(ws) > 1:
            if wake not in ws:
                raise UsageError(f"notify needs a wake choice among {ws}, got {wake}")
            ws = [wake]
        elif op == "notify":
            ws = ws[:1]
        new = list(threads)
        for u in ws:
            new[u] = new[u][:STATUS] + (WOKEN,) + new[u][PC:]
        return advance(_with(state, threads=tuple(new)))
    if op == "spawn":
        child = len(threads)
        new_ts = (a[0], CREATED, 0, (0,) * NUM_REGS, -1, 0, 0, 0)
        st = _with(state, threads=threads + (new_ts,), owners=owners + ((-1, 0),),
                   permits=permits + (0,))
        return advance(st, _replace(regs, a[1], child))
    if op == "acquire":
        return advance(_with(state, sems=_replace(sems, a[0], sems[a[0]] - 1)))
    if op == "release":
        return advance(_with(state, sems=_replace(sems, a[0], sems[a[0]] + 1)))
    if op == "countdown":
        return advance(_with(state, latches=_replace(latches, a[0], max(0, latches[a[0]] - 1))))
    if op == "await":
        return advance(state)
    if op == "park":
        return advance(_with(state, permits=_replace(permits, t, 0)))
    if op == "unpark":
        target = regs[a[0]]
        if not 0 <= target < len(threads):
            return panic()
        return advance(_with(state, permits=_replace(permits, target, 1)))
    raise UsageError(f"unknown op {op!r}")


def successors_fine(prog: LitmusProgram, state: tuple, spurious_limit: int = 0) -> list:
    """Every one-instruction successor: any thread may run at any point."""
    out = []
    for t in range(len(state[0])):
        if enabled(prog, state, t):
            for w in wake_options(prog, state, t):
                out.append(((t, w), interp_step(prog, state, t, w)))
    for t in spurious_options(state, spurious_limit) if spurious_limit else ():
        out.append((("sw", t), apply_spurious(state, t)))
    return out


class UnboundedProgram(UsageError):
    """The program can loop forever, so its outcome set cannot be enumerated."""


SEGMENT_LIMIT = 100_000


def run_segment(prog: LitmusProgram, state: tuple, t: int) -> list:
    """Run t from its current (switch-point) step until it blocks, terminates
    or reaches its next synchronization instruction.  Branches on notify
    designations, so the result is a list of (wake choices, state)."""
    first = [(w, interp_step(prog, state, t, w)) for w in wake_options(prog, state, t)]
    out = []
    stack = [((w,) if w is not None else (), s) for w, s in first]
    steps = 0
    while stack:
        wakes, s = stack.pop()
        ts = s[0][t]
        if s[6] is not None or ts[STATUS] != RUN or is_switch_point(prog, s, t):
            out.append((wakes, s))
            continue
        steps += 1
        if steps > SEGMENT_LIMIT:
            raise UnboundedProgram(f"thread {t} runs {SEGMENT_LIMIT} local steps without a sync point")
        for w in wake_options(prog, s, t):
            stack.append((wakes + ((w,) if w is not None else ()), interp_step(prog, s, t, w)))
    out.sort(key=lambda p: p[0])
    return out


def successors_sps(prog: LitmusProgram, state: tuple, spurious_limit: int = 0) -> list:
    """Successors where a context switch only happens at a sync point.

    Option order matches the engine's decision order: enabled threads by id,
    then spurious-wake directives by thread id.
    """
    out = []
    for t in range(len(state[0])):
        if enabled(prog, state, t):
            for wakes, s in run_segment(prog, state, t):
                out.append(((t, wakes), s))
    for t in spurious_options(state, spurious_limit) if spurious_limit else ():
        out.append((("sw", t), apply_spurious(state, t)))
    return out
