import time

import pytest

from conftest import ScriptedStrategy, run
from shadowsched import (
    AtomicInt,
    Latch,
    Monitor,
    Semaphore,
    Volatile,
    assert_now,
    current_thread_id,
    park,
    sleep,
    spawn,
    unpark,
    yield_,
)
from shadowsched.core import EventKind, OutcomeKind, UsageError
from shadowsched.harness.validate import validate_execution
from shadowsched.primitives import ThreadHandle, join
from shadowsched.strategies import DfsStrategy, RandomStrategy, dfs_next


def _all_outcomes(fn, **kw):
    """Every outcome of ``fn`` under exhaustive DFS."""
    out, prefix = [], []
    while True:
        s = DfsStrategy(prefix)
        ex = run(fn, s, **kw)
        assert validate_execution(ex).ok
        out.append(ex)
        prefix = dfs_next(s.path)
        if prefix is None:
            return out


def test_spawn_ids_in_call_order():
    ids = []

    def main():
        ids.extend([spawn(lambda: None).id, spawn(lambda: None).id])

    run(main)
    assert ids == [1, 2]


def test_child_waits_for_a_scheduling_decision():
    log = []

    def main():
        h = spawn(lambda: log.append("child"))
        log.append("parent")
        h.join()

    s = ScriptedStrategy([0, 0, 1])  # main start, main join point, child
    run(main, s)
    assert log == ["parent", "child"]
    assert s.seen[1] == (0, 1)


def test_spawn_inside_monitor_does_not_need_the_monitor():
    m = Monitor()

    def main():
        with m:
            h = spawn(lambda: None)
            yield_()  # child is enabled here although main owns m
        h.join()

    s = ScriptedStrategy()
    run(main, s)
    assert s.seen[2] == (0, 1)  # at the yield inside the monitor


def test_atomic_increments_commute():
    def main():
        a = AtomicInt(0)
        hs = [spawn(a.get_and_increment) for _ in range(2)]
        for h in hs:
            h.join()
        assert_now(a.get() == 2)

    assert {ex.outcome.kind for ex in _all_outcomes(main)} == {OutcomeKind.PASS}


def test_compare_and_set():
    def main():
        a = AtomicInt(5)
        assert_now(a.compare_and_set(5, 7) and not a.compare_and_set(5, 9) and a.get() == 7)

    assert run(main).outcome.kind is OutcomeKind.PASS


def test_semaphore_blocks_until_release():
    def main():
        s = Semaphore(0)
        done = Volatile(False)

        def worker():
            s.acquire()
            done.set(True)

        h = spawn(worker)
        assert_now(not done.get())
        s.release()
        h.join()
        assert_now(done.get())

    outs = _all_outcomes(main)
    assert {ex.outcome.kind for ex in outs} == {OutcomeKind.PASS}


def test_semaphore_negative_permits_rejected():
    with pytest.raises(UsageError):
        Semaphore(-1)


def test_latch_opens_at_zero():
    def main():
        latch = Latch(2)
        seen = []

        def worker(i):
            seen.append(i)
            latch.count_down()

        hs = [spawn(worker, i) for i in range(2)]
        latch.wait()
        assert_now(sorted(seen) == [0, 1])
        for h in hs:
            h.join()

    assert {ex.outcome.kind for ex in _all_outcomes(main)} == {OutcomeKind.PASS}


def test_park_consumes_an_earlier_permit():
    def main():
        me = ThreadHandle(current_thread_id())
        unpark(me)
        park()

    ex = run(main)
    assert ex.outcome.kind is OutcomeKind.PASS
    assert [e.kind for e in ex.trace.events].count(EventKind.PARK) == 1


def test_park_without_permit_deadlocks():
    ex = run(park)
    assert ex.outcome.kind is OutcomeKind.DEADLOCK
    assert ex.outcome.blocked == (0,)


def test_sleep_and_yield_are_points_without_delay():
    def main():
        sleep(30)
        yield_()

    t0 = time.perf_counter()
    ex = run(main)
    assert time.perf_counter() - t0 < 5
    kinds = [e.kind for e in ex.trace.events]
    assert EventKind.SLEEP_POINT in kinds and EventKind.YIELD_POINT in kinds
    assert len(ex.schedule.steps) == 3


@pytest.mark.parametrize("body, text", [
    (lambda m: m.notify(), "notify"),
    (lambda m: m.wait(), "wait"),
    (lambda m: m.notify_all(), "notify"),
])
def test_monitor_misuse_panics(body, text):
    ex = run(lambda: body(Monitor()))
    assert ex.outcome.kind is OutcomeKind.PANIC
    assert text in ex.outcome.message


def test_join_self_panics():
    ex = run(lambda: join(ThreadHandle(current_thread_id())))
    assert ex.outcome.kind is OutcomeKind.PANIC
    assert "joins itself" in ex.outcome.message


def test_uncaught_exception_is_panic():
    def boom():
        raise RuntimeError("kaput")

    ex = run(boom)
    assert ex.outcome.kind is OutcomeKind.PANIC and "kaput" in ex.outcome.message


def test_primitive_outside_engine_is_usage_error():
    with pytest.raises(UsageError):
        Volatile(0).get()


def test_timed_wait_returns_false_only_on_spurious_wake():
    m = Monitor()
    got = []

    def main():
        with m:
            got.append(m.wait(timeout=1.0))

    outs = _all_outcomes(main, spurious=True)
    assert [ex.outcome.kind for ex in outs] == [OutcomeKind.PASS]
    assert got == [False]
    ex = run(main, RandomStrategy(0))
    assert ex.outcome.kind is OutcomeKind.DEADLOCK
