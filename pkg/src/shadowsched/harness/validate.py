"""Independent re-check of a finished execution from its trace alone."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..core import EventKind, OutcomeKind, ResourceKind, Trace
from ..engine import Execution

# events that must happen while the emitting thread owns the resource's shadow lock
_GATED = {
    EventKind.MONITOR_ENTER, EventKind.ATOMIC_OP, EventKind.VOLATILE_READ, EventKind.VOLATILE_WRITE,
    EventKind.SEM_ACQUIRE, EventKind.LATCH_AWAIT, EventKind.PARK, EventKind.UNPARK,
}


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    events: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors

    def add(self, msg: str) -> None:
        if len(self.errors) < 50:
            self.errors.append(msg)


def validate_trace(trace: Trace) -> ValidationReport:
    """Check ordering, mutual exclusion, gate bracketing, step serialization and wake bookkeeping."""
    rep = ValidationReport(events=len(trace.events))
    owner: dict = {}
    holds: dict = {}
    waiting: dict = {}
    woken: dict = {}      # thread -> monitor it was notified on
    step_thread: dict = {}
    last_index = -1
    for ev in trace.events:
        if ev.index <= last_index:
            rep.add(f"event index {ev.index} not increasing after {last_index}")
        last_index = ev.index
        t, r, k = ev.thread, ev.resource, ev.kind
        prev = step_thread.setdefault(ev.step, t)
        if prev != t:
            rep.add(f"step {ev.step}: events from threads {prev} and {t}")

        if k is EventKind.SHADOW_ACQUIRE:
            cur = owner.get(r)
            if cur is not None and cur != t:
                rep.add(f"event {ev.index}: {r} acquired by {t} while owned by {cur}")
            if cur == t and (ev.value or 0) <= holds.get(r, 0):
                rep.add(f"event {ev.index}: re-acquire of {r} did not raise the hold count")
            owner[r] = t
            holds[r] = ev.value or 1
        elif k is EventKind.SHADOW_RELEASE:
            if owner.get(r) != t:
                rep.add(f"event {ev.index}: {t} releases {r} owned by {owner.get(r)}")
                continue
            holds[r] = ev.value or 0
            if holds[r] == 0:
                del owner[r]
                holds.pop(r, None)
        elif k in _GATED and r is not None and owner.get(r) != t:
            rep.add(f"event {ev.index}: {k.name} by {t} outside the shadow lock of {r}")

        if k is EventKind.WAIT_ENTER:
            waiting.setdefault(r, set()).add(t)
        elif k is EventKind.NOTIFY:
            ws = waiting.get(r, set())
            if ev.value is None:
                if ws:
                    rep.add(f"event {ev.index}: notify on {r} woke nobody while {sorted(ws)} wait")
            elif ev.value not in ws:
                rep.add(f"event {ev.index}: notify woke {ev.value}, not a waiter of {r}")
            else:
                ws.discard(ev.value)
                woken[ev.value] = r
        elif k is EventKind.NOTIFY_ALL:
            ws = waiting.pop(r, set())
            if ev.value != len(ws):
                rep.add(f"event {ev.index}: notify-all on {r} woke {ev.value}, {len(ws)} were waiting")
            for w in ws:
                woken[w] = r
        elif k is EventKind.SPURIOUS_WAKE:
            ws = waiting.get(r, set())
            if t not in ws:
                rep.add(f"event {ev.index}: spurious wake of {t}, not waiting on {r}")
            ws.discard(t)
            woken[t] = (r, "spurious")
        elif k is EventKind.WAIT_RESUME:
            expect = r if ev.value == 1 else (r, "spurious")
            if woken.pop(t, None) != expect:
                rep.add(f"event {ev.index}: {t} resumed on {r} without a matching wake")
    for r, t in owner.items():
        if r.kind is ResourceKind.RUN and trace.outcome.kind is OutcomeKind.PASS:
            rep.add(f"thread {t} still owns its run lock after a passing execution")
    return rep


def validate_deadlock(ex: Execution) -> Optional[str]:
    """For a deadlock outcome, re-derive from the snapshot that nothing could run."""
    if ex.outcome.kind is not OutcomeKind.DEADLOCK:
        return None
    if ex.enabled_at_end:
        return f"deadlock reported with enabled threads {list(ex.enabled_at_end)}"
    if not ex.deadlock_snapshot:
        return "deadlock reported without a snapshot"
    for e in ex.deadlock_snapshot:
        t = e["thread"]
        phase, op, owner, count = e["phase"], e["op"], e["owner"], e["count"]
        if phase == "created":
            return f"thread {t} was never started"
        if phase == "waiting":
            if e["pending_wake"] and owner is None:
                return f"thread {t} was woken and its monitor is free"
            continue
        if phase != "blocked":
            return f"thread {t} in phase {phase} at deadlock"
        if op == "monitor_enter" and owner in (None, t):
            return f"thread {t} could enter a free monitor"
        if op == "sem_acquire" and count > 0:
            return f"thread {t} could take a semaphore permit"
        if op == "latch_await" and count == 0:
            return f"thread {t} could pass an open latch"
        if op == "park" and count > 0:
            return f"thread {t} could consume its park permit"
        if op not in ("monitor_enter", "sem_acquire", "latch_await", "park"):
            return f"thread {t} blocked on non-blocking op {op}"
    return None


def validate_execution(ex: Execution) -> ValidationReport:
    rep = validate_trace(ex.trace)
    err = validate_deadlock(ex)
    if err:
        rep.add(err)
    return rep
