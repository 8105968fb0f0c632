"""Benchmark targets: small concurrent programs with known outcome sets.

Each target is a zero-argument entry point that builds its shared objects
afresh, so every execution starts from the same state.  ``expected`` lists
the outcome classes exhaustive DFS reaches with default features;
``expected_spurious`` the classes with spurious wake-ups enabled (None where
the space is too large to settle exhaustively).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from ..core import UsageError
from ..primitives import (
    AtomicInt,
    Latch,
    Monitor,
    Semaphore,
    Volatile,
    assert_now,
    park,
    spawn,
    unpark,
)


@dataclass(frozen=True)
class Target:
    name: str
    fn: Callable[[], None]
    expected: frozenset
    expected_spurious: Optional[frozenset] = None
    description: str = ""
    litmus: Optional[str] = None


def ticket_handshake() -> None:
    o = Monitor()
    a = AtomicInt(0)
    b = Volatile(0)

    def run() -> None:
        x = a.get_and_increment()
        with o:
            if x == 0:
                o.wait()
            else:
                o.notify()
        b.set(x)

    ts = [spawn(run), spawn(run)]
    for t in ts:
        t.join()
    assert_now(b.get() == 1, "b == 1")


def lock_order() -> None:
    a, b = Monitor(), Monitor()
    moved = Volatile(0)

    def transfer(first: Monitor, second: Monitor, amount: int) -> None:
        with first:
            with second:
                moved.set(moved.get() + amount)

    t = spawn(transfer, b, a, 2)
    transfer(a, b, 1)
    t.join()
    assert_now(moved.get() == 3, "both transfers applied")


def lost_notify() -> None:
    m = Monitor()
    ready = Volatile(False)

    def signaller() -> None:
        ready.set(True)
        with m:
            m.notify_all()

    h = spawn(signaller)
    if not ready.get():  # checked outside the monitor
        with m:
            m.wait()
    h.join()


def atomicity() -> None:
    cache = Volatile(None)
    inits = AtomicInt(0)

    def get() -> None:
        if cache.get() is None:
            inits.increment_and_get()
            cache.set("value")

    hs = [spawn(get), spawn(get)]
    for h in hs:
        h.join()
    assert_now(inits.get() == 1, "initialized exactly once")


def delayed_wakeup() -> None:
    m = Monitor()
    state = {"x": 0, "posted": False}

    def waiter() -> None:
        with m:
            if not state["posted"]:
                m.wait()
                assert_now(state["x"] == 1, "woken before the second update")

    def notifier() -> None:
        with m:
            state["x"] = 1
            state["posted"] = True
            m.notify()
        with m:
            state["x"] = 2

    hs = [spawn(waiter), spawn(notifier)]
    for h in hs:
        h.join()


def producer_consumer() -> None:
    """Two producers and two consumers on a one-slot buffer using notify, not notify_all.

    A notify can wake a thread of the wrong role, which then waits again
    and leaves everyone waiting.
    """
    m = Monitor()
    buf: list = []

    def producer(item: int) -> None:
        with m:
            while buf:
                m.wait()
            buf.append(item)
            m.notify()

    def consumer() -> None:
        with m:
            while not buf:
                m.wait()
            buf.pop()
            m.notify()

    hs = [spawn(producer, 1), spawn(producer, 2), spawn(consumer), spawn(consumer)]
    for h in hs:
        h.join()
    assert_now(not buf, "buffer drained")


def sem_starvation() -> None:
    a, b = Semaphore(1), Semaphore(1)
    total = AtomicInt(0)

    def worker(first: Semaphore, second: Semaphore) -> None:
        first.acquire()
        second.acquire()
        total.increment_and_get()
        second.release()
        first.release()

    hs = [spawn(worker, a, b), spawn(worker, b, a)]
    for h in hs:
        h.join()
    assert_now(total.get() == 2, "both workers finished")


def latch_order() -> None:
    done = Latch(2)
    results: list = [None, None]

    def worker(i: int) -> None:
        results[i] = i * 10
        done.count_down()

    hs = [spawn(worker, 0), spawn(worker, 1)]
    done.wait()
    assert_now(results == [0, 10], "results published before the latch opened")
    for h in hs:
        h.join()


def park_handoff() -> None:
    data = Volatile(0)

    def reader() -> None:
        park()
        assert_now(data.get() == 1, "saw the published value")

    h = spawn(reader)
    unpark(h)  # permit handed over before publishing
    data.set(1)
    h.join()


def spurious_if() -> None:
    m = Monitor()
    state = {"ready": False}

    def waiter() -> None:
        with m:
            if not state["ready"]:
                m.wait()
            assert_now(state["ready"], "ready after wait")

    h = spawn(waiter)
    with m:
        state["ready"] = True
        m.notify_all()
    h.join()


def spurious_while() -> None:
    m = Monitor()
    state = {"ready": False}

    def waiter() -> None:
        with m:
            while not state["ready"]:
                m.wait()
            assert_now(state["ready"], "ready after wait")

    h = spawn(waiter)
    with m:
        state["ready"] = True
        m.notify_all()
    h.join()


def single_thread() -> None:
    m = Monitor()
    c = AtomicInt(0)
    for _ in range(3):
        with m:
            c.increment_and_get()
    assert_now(c.get() == 3, "sequential count")


_P, _D, _V = "pass", "deadlock", "violation"

TARGETS: dict[str, Target] = {t.name: t for t in [
    Target("ticket_handshake", ticket_handshake, frozenset({_P, _D, _V}), frozenset({_P, _V}),
           "atomic ticket, wait/notify handshake and a volatile result", "ticket_handshake"),
    Target("lock_order", lock_order, frozenset({_P, _D}), frozenset({_P, _D}),
           "two monitors taken in opposite orders", "lock_order"),
    Target("lost_notify", lost_notify, frozenset({_P, _D}), frozenset({_P}),
           "condition checked outside the monitor before waiting", "lost_notify"),
    Target("atomicity", atomicity, frozenset({_P, _V}), frozenset({_P, _V}),
           "check-then-act lazy initialization", "atomicity"),
    Target("delayed_wakeup", delayed_wakeup, frozenset({_P, _V}), frozenset({_P, _V}),
           "notifier updates again before the waiter resumes", "delayed_wakeup"),
    Target("producer_consumer", producer_consumer, frozenset({_P, _D}), None,
           "one-slot buffer with single notify, two producers, two consumers"),
    Target("sem_starvation", sem_starvation, frozenset({_P, _D}), frozenset({_P, _D}),
           "two semaphores acquired in opposite orders", "sem_starvation"),
    Target("latch_order", latch_order, frozenset({_P}), frozenset({_P}),
           "latch publishes worker results", "latch_order"),
    Target("park_handoff", park_handoff, frozenset({_P, _V}), frozenset({_P, _V}),
           "unpark before the data is published", "park_handoff"),
    Target("spurious_if", spurious_if, frozenset({_P}), frozenset({_P, _V}),
           "wait guarded by if instead of while", "spurious_if"),
    Target("spurious_while", spurious_while, frozenset({_P}), frozenset({_P}),
           "wait guarded by a while loop", "spurious_while"),
    Target("single_thread", single_thread, frozenset({_P}), frozenset({_P}),
           "no concurrency at all"),
]}


def litmus_dir() -> Path:
    return Path(str(resources.files("shadowsched.corpus") / "litmus"))


def get_target(name: str) -> Target:
    """Look up a registered target, or ``litmus:NAME`` for a bundled litmus program."""
    if name in TARGETS:
        return TARGETS[name]
    if name.startswith("litmus:"):
        from ..oracle.bridge import litmus_target
        from ..oracle.litmus import load_litmus

        path = litmus_dir() / f"{name[len('litmus:'):]}.litmus"
        if not path.exists():
            raise UsageError(f"no bundled litmus program {path.stem!r}")
        prog = load_litmus(path)
        return Target(name, litmus_target(prog), prog.expect or frozenset(), prog.expect_spurious,
                      f"litmus program {prog.name}", prog.name)
    raise UsageError(f"unknown target {name!r}; known: {', '.join(sorted(TARGETS))} or litmus:NAME")
