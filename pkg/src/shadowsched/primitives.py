"""Modeled concurrency API for programs under test.

Programs call these instead of ``threading`` primitives.  Each call is
routed through the running :class:`~shadowsched.engine.Engine`: acquire
the shadow lock of the resource (a scheduling point), perform the real
effect, release the shadow lock.  Objects must be created inside the
program entry point so that every execution starts from fresh state.
"""

from __future__ import annotations

import threading
from typing import Any, Callable, Optional

from .core import EventKind, ProtocolError, ResourceKind, ThreadId, UsageError
from .engine import Op, _Violation, current

__all__ = [
    "AtomicInt",
    "Latch",
    "Monitor",
    "Semaphore",
    "ThreadHandle",
    "Volatile",
    "assert_now",
    "atomic_rmw",
    "current_thread_id",
    "join",
    "latch_await",
    "latch_count_down",
    "monitor_enter",
    "monitor_exit",
    "notify",
    "notify_all",
    "park",
    "sem_acquire",
    "sem_release",
    "sleep",
    "spawn",
    "unpark",
    "volatile_read",
    "volatile_write",
    "wait",
    "yield_",
]


class ThreadHandle:
    def __init__(self, tid: ThreadId) -> None:
        self.id = tid

    def join(self) -> None:
        join(self)

    def is_alive(self) -> bool:
        engine, _ = current()
        return not engine.is_terminated(self.id)

    def __repr__(self) -> str:
        return f"ThreadHandle({self.id})"


class Monitor:
    """Reentrant object monitor with wait/notify, like ``synchronized(o)``."""

    def __init__(self) -> None:
        self._native = threading.Condition(threading.RLock())

    def __enter__(self) -> Monitor:
        monitor_enter(self)
        return self

    def __exit__(self, *exc: Any) -> None:
        monitor_exit(self)

    def wait(self, timeout: Optional[float] = None) -> bool:
        return wait(self, timeout)

    def notify(self) -> None:
        notify(self)

    def notify_all(self) -> None:
        notify_all(self)


class AtomicInt:
    def __init__(self, value: int = 0) -> None:
        self._value = value

    def get(self) -> int:
        return atomic_rmw(self, lambda v: (v, v))

    def set(self, value: int) -> None:
        atomic_rmw(self, lambda v: (value, value))

    def get_and_add(self, delta: int) -> int:
        return atomic_rmw(self, lambda v: (v + delta, v))

    def get_and_increment(self) -> int:
        return self.get_and_add(1)

    def increment_and_get(self) -> int:
        return atomic_rmw(self, lambda v: (v + 1, v + 1))

    def compare_and_set(self, expected: int, new: int) -> bool:
        return bool(atomic_rmw(self, lambda v: (new, 1) if v == expected else (v, 0)))


class Volatile:
    def __init__(self, value: Any = 0) -> None:
        self._value = value

    def get(self) -> Any:
        return volatile_read(self)

    def set(self, value: Any) -> None:
        volatile_write(self, value)


class Semaphore:
    def __init__(self, permits: int) -> None:
        if permits < 0:
            raise UsageError("semaphore permits must be >= 0")
        self._initial = permits
        self._native = threading.Semaphore(permits)

    def acquire(self) -> None:
        sem_acquire(self)

    def release(self) -> None:
        sem_release(self)


class Latch:
    """Count-down latch."""

    def __init__(self, count: int) -> None:
        if count < 0:
            raise UsageError("latch count must be >= 0")
        self._initial = count
        self._native = threading.Event()
        if count == 0:
            self._native.set()

    def count_down(self) -> None:
        latch_count_down(self)

    def wait(self) -> None:
        latch_await(self)


# -- threads ------------------------------------------------------------------


def spawn(body: Callable[..., Any], *args: Any, name: Optional[str] = None) -> ThreadHandle:
    """Create a thread; it runs nothing until the scheduler starts it."""
    engine, _ = current()
    return ThreadHandle(engine.spawn(body, args, name))


def join(handle: ThreadHandle) -> None:
    """Wait for ``handle`` to terminate, as a wait loop on its join gate."""
    engine, rec = current()
    if handle.id == rec.id:
        raise ProtocolError(f"thread {rec.id} joins itself")
    gate = engine.join_gate(handle.id)
    monitor_enter(gate)
    try:
        while not engine.is_terminated(handle.id):
            wait(gate)
    finally:
        monitor_exit(gate)


def current_thread_id() -> ThreadId:
    return current()[1].id


# -- monitors -----------------------------------------------------------------


def monitor_enter(mon: Monitor) -> None:
    engine, rec = current()
    engine.monitor_enter(rec, mon)


def monitor_exit(mon: Monitor) -> None:
    engine, rec = current()
    engine.monitor_exit(rec, mon)


def wait(mon: Monitor, timeout: Optional[float] = None) -> bool:
    """Wait on ``mon``.

    Returns True when woken by a notify.  A timed wait can only time out
    through a spurious-wake directive, in which case it returns False;
    ``timeout`` itself carries no wall-clock meaning.
    """
    engine, rec = current()
    return engine.wait(rec, mon)


def notify(mon: Monitor) -> None:
    engine, rec = current()
    engine.notify(rec, mon, False)


def notify_all(mon: Monitor) -> None:
    engine, rec = current()
    engine.notify(rec, mon, True)


# -- atomics and volatiles ------------------------------------------------------


def atomic_rmw(cell: AtomicInt, fn: Callable[[int], tuple[int, Any]]) -> Any:
    """Apply ``fn(old) -> (new, result)`` atomically and return ``result``."""
    engine, rec = current()
    r = engine.resource(cell, ResourceKind.ATOMIC)
    box = []

    def effect(_state):
        new, result = fn(cell._value)
        cell._value = new
        box.append(result)
        return result

    engine.gated(rec, Op.ATOMIC, r, EventKind.ATOMIC_OP, effect)
    return box[0]


def volatile_read(cell: Volatile) -> Any:
    engine, rec = current()
    r = engine.resource(cell, ResourceKind.VOLATILE)
    box = []

    def effect(_state):
        box.append(cell._value)
        return cell._value

    engine.gated(rec, Op.VOLATILE_READ, r, EventKind.VOLATILE_READ, effect)
    return box[0]


def volatile_write(cell: Volatile, value: Any) -> None:
    engine, rec = current()
    r = engine.resource(cell, ResourceKind.VOLATILE)

    def effect(_state):
        cell._value = value
        return value

    engine.gated(rec, Op.VOLATILE_WRITE, r, EventKind.VOLATILE_WRITE, effect)


# -- semaphores, latches, park ----------------------------------------------------


def sem_acquire(sem: Semaphore) -> None:
    engine, rec = current()
    r = engine.resource(sem, ResourceKind.SEMAPHORE)

    def effect(state):
        if not sem._native.acquire(blocking=False):
            raise AssertionError(f"semaphore {r} granted with no native permit")
        state.sem_counts[r] -= 1
        return state.sem_counts[r]

    engine.gated(rec, Op.SEM_ACQUIRE, r, EventKind.SEM_ACQUIRE, effect)


def sem_release(sem: Semaphore) -> None:
    engine, rec = current()
    r = engine.resource(sem, ResourceKind.SEMAPHORE)
    with engine._lock:
        engine._check_live()
        sem._native.release()
        engine.state.sem_counts[r] += 1
        engine.state.emit(rec.id, EventKind.SEM_RELEASE, r, engine.state.sem_counts[r])


def latch_count_down(latch: Latch) -> None:
    engine, rec = current()
    r = engine.resource(latch, ResourceKind.LATCH)
    with engine._lock:
        engine._check_live()
        counts = engine.state.latch_counts
        counts[r] = max(0, counts[r] - 1)
        if counts[r] == 0:
            latch._native.set()
        engine.state.emit(rec.id, EventKind.LATCH_COUNT_DOWN, r, counts[r])


def latch_await(latch: Latch) -> None:
    engine, rec = current()
    r = engine.resource(latch, ResourceKind.LATCH)

    def effect(state):
        latch._native.wait(0)
        return state.latch_counts[r]

    engine.gated(rec, Op.LATCH_AWAIT, r, EventKind.LATCH_AWAIT, effect)


def park() -> None:
    """Block until this thread's permit is available, then consume it."""
    engine, rec = current()
    r = engine.park_resource(rec.id)

    def effect(state):
        state.park_permits[rec.id] = 0
        return 0

    engine.gated(rec, Op.PARK, r, EventKind.PARK, effect)


def unpark(handle: ThreadHandle) -> None:
    engine, rec = current()
    r = engine.park_resource(handle.id)

    def effect(state):
        state.park_permits[handle.id] = 1
        return handle.id

    engine.gated(rec, Op.UNPARK, r, EventKind.UNPARK, effect)


# -- scheduling-only points -------------------------------------------------------------


def sleep(duration: float = 0.0) -> None:
    """A scheduling point with no synchronization effect and no real delay."""
    engine, rec = current()
    engine.gated(rec, Op.SLEEP, None, EventKind.SLEEP_POINT, lambda _s: None)


def yield_() -> None:
    engine, rec = current()
    engine.gated(rec, Op.YIELD, None, EventKind.YIELD_POINT, lambda _s: None)


def assert_now(condition: bool, message: str = "assertion failed") -> None:
    """Check a program assertion; a false condition ends the run as a violation."""
    engine, rec = current()
    engine.emit(rec, EventKind.ASSERT_CHECK, None, int(bool(condition)))
    if not condition:
        engine._finish_violation(message)
        raise _Violation(message)
