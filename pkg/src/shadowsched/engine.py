"""Shadow-locking scheduler.

Application threads are real ``threading.Thread`` objects.  Before touching
a modeled resource a thread records what it wants (its pending shadow-lock
request) and parks on a per-thread condition; the scheduler loop, running
in the thread that called :meth:`Engine.run`, computes the enabled set,
asks the strategy for a decision and releases exactly one thread.  That
thread runs until its next gate, parks again and hands control back.

Waiting on a monitor follows the same shape as a native condition wait
wrapped in a shadow ``tryLock`` loop: the waiter fully releases its shadow
lock, waits on the monitor's native ``threading.Condition`` and only leaves
the loop once the scheduler has both woken it (notify / notify-all /
spurious directive) and chosen it at a scheduling step.
"""

from __future__ import annotations

import enum
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import networkx as nx

from .core import (
    Choose,
    Event,
    EventKind,
    Outcome,
    ProtocolError,
    ReplayMismatch,
    ResourceId,
    ResourceKind,
    Schedule,
    ShadowSchedError,
    SpuriousWake,
    StrategyError,
    ThreadId,
    Trace,
    UsageError,
    Wake,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10_000


class Phase(enum.Enum):
    CREATED = "created"
    RUNNING = "running"
    BLOCKED = "blocked"
    WAITING = "waiting"
    TERMINATED = "terminated"


class Op(enum.Enum):
    """What a parked thread will do once released."""

    START = "start"
    MONITOR_ENTER = "monitor_enter"
    ATOMIC = "atomic"
    VOLATILE_READ = "volatile_read"
    VOLATILE_WRITE = "volatile_write"
    SEM_ACQUIRE = "sem_acquire"
    LATCH_AWAIT = "latch_await"
    PARK = "park"
    UNPARK = "unpark"
    SLEEP = "sleep"
    YIELD = "yield"


class ScheduleExhausted(ShadowSchedError):
    """Raised by a strategy that has no more decisions to give (replay ran out)."""


class _Abort(BaseException):
    """Unwinds an application thread when the execution is torn down."""


class _Violation(BaseException):
    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


@dataclass
class ThreadRecord:
    id: ThreadId
    name: str
    phase: Phase = Phase.CREATED
    request: Optional[tuple[Op, Optional[ResourceId]]] = None
    run_resource: Optional[ResourceId] = None
    wait_monitor: Optional[ResourceId] = None
    saved_hold: int = 0
    spurious_used: int = 0
    woken_spuriously: bool = False
    resume_granted: bool = False


class ShadowLockTable:
    """Owner and hold count of every shadow lock, plus who is queued for it."""

    def __init__(self) -> None:
        self.owner: dict[ResourceId, ThreadId] = {}
        self.hold: dict[tuple[ResourceId, ThreadId], int] = {}
        self.waiters: dict[ResourceId, list[ThreadId]] = {}

    def acquire(self, r: ResourceId, t: ThreadId, depth: int = 1) -> int:
        cur = self.owner.get(r)
        if cur is not None and cur != t:
            raise AssertionError(f"mutual exclusion broken: {r} owned by {cur}, granted to {t}")
        if cur == t and r.kind is not ResourceKind.MONITOR:
            raise AssertionError(f"non-reentrant {r} re-acquired by {t}")
        self.owner[r] = t
        n = self.hold.get((r, t), 0) + depth
        self.hold[(r, t)] = n
        return n

    def release(self, r: ResourceId, t: ThreadId) -> int:
        if self.owner.get(r) != t:
            raise ProtocolError(f"thread {t} releases {r} it does not own")
        n = self.hold[(r, t)] - 1
        if n == 0:
            del self.hold[(r, t)]
            del self.owner[r]
        else:
            self.hold[(r, t)] = n
        return n

    def release_all(self, r: ResourceId, t: ThreadId) -> int:
        if self.owner.get(r) != t:
            raise ProtocolError(f"thread {t} releases {r} it does not own")
        k = self.hold.pop((r, t))
        del self.owner[r]
        return k

    def holds(self, r: ResourceId, t: ThreadId) -> int:
        return self.hold.get((r, t), 0)


@dataclass
class WaitingSets:
    sets: dict[ResourceId, list[ThreadId]] = field(default_factory=dict)
    pending_wake: dict[ThreadId, ResourceId] = field(default_factory=dict)

    def waiting_on(self, r: ResourceId) -> list[ThreadId]:
        return self.sets.setdefault(r, [])

    def wake(self, t: ThreadId, r: ResourceId) -> None:
        self.sets[r].remove(t)
        self.pending_wake[t] = r


@dataclass
class EngineState:
    threads: dict[ThreadId, ThreadRecord] = field(default_factory=dict)
    shadow: ShadowLockTable = field(default_factory=ShadowLockTable)
    waiting: WaitingSets = field(default_factory=WaitingSets)
    sem_counts: dict[ResourceId, int] = field(default_factory=dict)
    latch_counts: dict[ResourceId, int] = field(default_factory=dict)
    park_permits: dict[ThreadId, int] = field(default_factory=dict)
    park_resources: dict[ThreadId, ResourceId] = field(default_factory=dict)
    step_count: int = 0
    events: list[Event] = field(default_factory=list)
    next_resource: int = 0

    def new_resource(self, kind: ResourceKind) -> ResourceId:
        r = ResourceId(self.next_resource, kind)
        self.next_resource += 1
        return r

    def emit(self, thread: ThreadId, kind: EventKind, resource: Optional[ResourceId] = None,
             value: Optional[int] = None) -> None:
        self.events.append(Event(thread, kind, resource, value, len(self.events),
                                 max(self.step_count - 1, 0)))

    def alive(self) -> tuple[ThreadId, ...]:
        return tuple(t for t, rec in sorted(self.threads.items()) if rec.phase is not Phase.TERMINATED)


@dataclass(frozen=True)
class EnabledSet:
    threads: tuple[ThreadId, ...]
    resource: dict[ThreadId, Optional[ResourceId]]


@dataclass(frozen=True)
class SchedulingView:
    """Everything a strategy may look at when making one decision."""

    step: int
    enabled: EnabledSet
    spurious: tuple[tuple[ThreadId, ResourceId], ...] = ()
    alive: tuple[ThreadId, ...] = ()

    def options(self) -> list:
        opts: list = [Choose(t) for t in self.enabled.threads]
        opts.extend(SpuriousWake(t, r.index) for t, r in self.spurious)
        return opts


def _grantable(state: EngineState, rec: ThreadRecord) -> bool:
    t = rec.id
    if rec.phase is Phase.CREATED:
        return True
    if rec.phase is Phase.WAITING:
        if t not in state.waiting.pending_wake:
            return False
        return state.shadow.owner.get(rec.wait_monitor) is None
    if rec.phase is not Phase.BLOCKED or rec.request is None:
        return False
    op, r = rec.request
    if op is Op.MONITOR_ENTER:
        return state.shadow.owner.get(r) in (None, t)
    if op is Op.SEM_ACQUIRE:
        return state.sem_counts[r] > 0
    if op is Op.LATCH_AWAIT:
        return state.latch_counts[r] == 0
    if op is Op.PARK:
        return state.park_permits.get(t, 0) > 0
    return True


def _next_resource(rec: ThreadRecord) -> Optional[ResourceId]:
    if rec.phase is Phase.CREATED:
        return rec.run_resource
    if rec.phase is Phase.WAITING:
        return rec.wait_monitor
    return rec.request[1] if rec.request else None


def compute_enabled(state: EngineState) -> EnabledSet:
    """Threads guaranteed to make progress if released now."""
    threads = []
    resource = {}
    for t, rec in sorted(state.threads.items()):
        if _grantable(state, rec):
            threads.append(t)
            resource[t] = _next_resource(rec)
    return EnabledSet(tuple(threads), resource)


def spurious_candidates(state: EngineState, limit: int) -> tuple[tuple[ThreadId, ResourceId], ...]:
    out = []
    for r, ws in sorted(state.waiting.sets.items()):
        for t in sorted(ws):
            if state.threads[t].spurious_used < limit:
                out.append((t, r))
    return tuple(sorted(out, key=lambda p: (p[0], p[1].index)))


def wait_for_graph(state: EngineState) -> nx.DiGraph:
    """Edges t -> u where blocked thread t needs a monitor that u owns."""
    g = nx.DiGraph()
    for t, rec in state.threads.items():
        if rec.phase is Phase.TERMINATED:
            continue
        g.add_node(t)
        r = None
        if rec.phase is Phase.BLOCKED and rec.request and rec.request[0] is Op.MONITOR_ENTER:
            r = rec.request[1]
        elif rec.phase is Phase.WAITING and t in state.waiting.pending_wake:
            r = rec.wait_monitor
        owner = state.shadow.owner.get(r) if r is not None else None
        if owner is not None and owner != t:
            g.add_edge(t, owner)
    return g


def detect_deadlock(state: EngineState) -> Optional[Outcome]:
    """Deadlock outcome when nothing can run but something is alive, else None."""
    alive = state.alive()
    if not alive or compute_enabled(state).threads:
        return None
    cycle: tuple[ThreadId, ...] = ()
    try:
        edges = nx.find_cycle(wait_for_graph(state), source=sorted(alive))
        nodes = [u for u, _ in edges]
        i = nodes.index(min(nodes))
        cycle = tuple(nodes[i:] + nodes[:i])
    except nx.NetworkXNoCycle:
        pass
    return Outcome.deadlock(cycle, alive)


def deadlock_snapshot(state: EngineState) -> list[dict]:
    """Plain-data picture of every live thread, for independent re-checking."""
    snap = []
    for t, rec in sorted(state.threads.items()):
        if rec.phase is Phase.TERMINATED:
            continue
        op, r = rec.request if rec.request else (None, None)
        if rec.phase is Phase.WAITING:
            r = rec.wait_monitor
        entry = {
            "thread": t,
            "phase": rec.phase.value,
            "op": op.value if op else None,
            "resource": r.index if r else None,
            "kind": r.kind.name if r else None,
            "owner": state.shadow.owner.get(r) if r else None,
            "in_waiting_set": any(t in ws for ws in state.waiting.sets.values()),
            "pending_wake": t in state.waiting.pending_wake,
            "count": None,
        }
        if r is not None and r.kind is ResourceKind.SEMAPHORE:
            entry["count"] = state.sem_counts[r]
        elif r is not None and r.kind is ResourceKind.LATCH:
            entry["count"] = state.latch_counts[r]
        elif op is Op.PARK:
            entry["count"] = state.park_permits.get(t, 0)
        snap.append(entry)
    return snap


def check_state_invariants(state: EngineState) -> None:
    """Raise AssertionError if the shadow-lock bookkeeping is inconsistent."""
    sh = state.shadow
    for (r, t), n in sh.hold.items():
        assert n > 0, (r, t, n)
        assert sh.owner.get(r) == t, f"hold count for non-owner {t} on {r}"
        assert n == 1 or r.kind is ResourceKind.MONITOR, f"{r} held {n} times"
    for r, t in sh.owner.items():
        assert sh.hold.get((r, t), 0) > 0, f"owner {t} of {r} has no holds"
        assert t not in sh.waiters.get(r, ()), f"{t} queued on {r} it owns"
    waiting = set()
    for ws in state.waiting.sets.values():
        waiting.update(ws)
    assert not waiting & set(state.waiting.pending_wake), "thread both waiting and woken"
    running = [t for t, rec in state.threads.items() if rec.phase is Phase.RUNNING]
    assert len(running) <= 1, f"several running threads {running}"


@dataclass
class Execution:
    trace: Trace
    schedule: Schedule
    deadlock_snapshot: Optional[list] = None
    enabled_at_end: Optional[tuple] = None

    @property
    def outcome(self) -> Outcome:
        return self.trace.outcome


_tls = threading.local()


def current() -> tuple[Engine, ThreadRecord]:
    engine = getattr(_tls, "engine", None)
    if engine is None:
        raise UsageError("modeled primitive used outside of an engine run")
    return engine, _tls.record


class Engine:
    """Runs one execution of a program under a strategy.

    An engine instance is single-use: create a fresh one per execution.
    """

    def __init__(self, strategy, *, max_steps: int = DEFAULT_MAX_STEPS, spurious: bool = False,
                 spurious_limit: int = 1, debug: bool = True, step_timeout: float = 30.0) -> None:
        self.strategy = strategy
        self.max_steps = max_steps
        self.spurious = spurious
        self.spurious_limit = spurious_limit
        self.debug = debug
        self.step_timeout = step_timeout
        self.state = EngineState()
        self.schedule = Schedule(seed=getattr(strategy, "seed", 0), strategy=strategy.name,
                                 params=dict(getattr(strategy, "params", {})))
        self._lock = threading.Lock()
        self._sched_cond = threading.Condition(self._lock)
        self._conds: dict[ThreadId, threading.Condition] = {}
        self._natives: dict[ThreadId, threading.Thread] = {}
        self._native_holds: dict[ThreadId, dict[Any, int]] = {}
        self._objects: dict[Any, tuple[Any, ResourceId]] = {}
        self._monitors: dict[ResourceId, Any] = {}
        self._running: Optional[ThreadId] = None
        self._outcome: Optional[Outcome] = None
        self._error: Optional[BaseException] = None
        self._aborting = False
        self._stopped = False
        self._started = False
        self._gates: dict[ThreadId, Any] = {}
        self._snapshot: Optional[list] = None
        self._enabled_at_end: Optional[tuple] = None

    # -- scheduler side ------------------------------------------------------

    def run(self, main: Callable[..., Any], *args: Any) -> Execution:
        if self._started:
            raise UsageError("an Engine instance runs exactly one execution")
        self._started = True
        with self._lock:
            self._create_thread(main, args, "main")
        try:
            self._loop()
        finally:
            self._teardown()
        if self._error is not None:
            raise self._error
        assert self._outcome is not None
        trace = Trace(list(self.state.events), self._outcome)
        return Execution(trace, self.schedule, self._snapshot, self._enabled_at_end)

    def _loop(self) -> None:
        while True:
            with self._lock:
                if self._outcome is not None or self._error is not None:
                    return
                st = self.state
                if self.debug:
                    check_state_invariants(st)
                alive = st.alive()
                if not alive:
                    self._outcome = Outcome.passed()
                    return
                if st.step_count >= self.max_steps:
                    self._outcome = Outcome.budget_exceeded(f"max steps {self.max_steps} reached")
                    return
                enabled = compute_enabled(st)
                spurious = spurious_candidates(st, self.spurious_limit) if self.spurious else ()
                if not enabled.threads and not spurious:
                    self._outcome = detect_deadlock(st)
                    self._snapshot = deadlock_snapshot(st)
                    self._enabled_at_end = enabled.threads
                    return
                view = SchedulingView(st.step_count, enabled, spurious, alive)
            try:
                decision = self.strategy.choose(view)
            except ScheduleExhausted as exc:
                with self._lock:
                    self._outcome = Outcome.budget_exceeded(str(exc))
                return
            except ShadowSchedError as exc:
                self._error = exc
                return
            if decision not in view.options():
                self._error = StrategyError(
                    f"strategy {self.strategy.name} chose {decision!r} at step {view.step}; "
                    f"options were {view.options()}")
                return
            self.schedule.steps.append(decision)
            if isinstance(decision, SpuriousWake):
                with self._lock:
                    st.step_count += 1
                    rec = st.threads[decision.thread]
                    rec.spurious_used += 1
                    rec.woken_spuriously = True
                    st.waiting.wake(decision.thread, rec.wait_monitor)
                    st.emit(decision.thread, EventKind.SPURIOUS_WAKE, rec.wait_monitor)
                continue
            self._grant(decision.thread)

    def _grant(self, t: ThreadId) -> None:
        resume_monitor = None
        with self._lock:
            st = self.state
            st.step_count += 1
            rec = st.threads[t]
            self._running = t
            if rec.phase is Phase.WAITING:
                r = st.waiting.pending_wake.pop(t)
                rec.resume_granted = True
                resume_monitor = self._monitors[r]
            else:
                self._conds[t].notify()
        if resume_monitor is not None:
            # the waiter leaves its native wait only through a broadcast
            with resume_monitor._native:
                resume_monitor._native.notify_all()
        deadline = time.monotonic() + self.step_timeout
        with self._lock:
            while self._running is not None and self._outcome is None and self._error is None:
                left = deadline - time.monotonic()
                if left <= 0:
                    self._outcome = Outcome.panic(
                        f"thread {t} did not reach a scheduling point within {self.step_timeout}s")
                    return
                self._sched_cond.wait(left)

    def _teardown(self) -> None:
        with self._lock:
            self._aborting = True
            for c in self._conds.values():
                c.notify_all()
        for _ in range(200):
            for mon in list(self._monitors.values()):
                if mon._native.acquire(timeout=0.01):
                    mon._native.notify_all()
                    mon._native.release()
            pending = [th for th in self._natives.values() if th.is_alive()]
            if not pending:
                return
            for th in pending:
                th.join(0.01)
        log.warning("engine teardown left %d application threads running",
                    sum(th.is_alive() for th in self._natives.values()))

    # -- thread lifecycle -----------------------------------------------------

    def _create_thread(self, fn: Callable[..., Any], args: tuple, name: Optional[str]) -> ThreadRecord:
        st = self.state
        t = len(st.threads)
        rec = ThreadRecord(t, name or f"t{t}")
        rec.run_resource = st.new_resource(ResourceKind.RUN)
        rec.request = (Op.START, rec.run_resource)
        st.threads[t] = rec
        self._conds[t] = threading.Condition(self._lock)
        self._native_holds[t] = {}
        th = threading.Thread(target=self._bootstrap, args=(rec, fn, args),
                              name=f"shadowsched-{rec.name}", daemon=True)
        self._natives[t] = th
        th.start()
        return rec

    def spawn(self, fn: Callable[..., Any], args: tuple = (), name: Optional[str] = None) -> ThreadId:
        with self._lock:
            self._check_live()
            return self._create_thread(fn, args, name).id

    def _bootstrap(self, rec: ThreadRecord, fn: Callable[..., Any], args: tuple) -> None:
        _tls.engine = self
        _tls.record = rec
        t = rec.id
        try:
            with self._lock:
                while self._running != t:
                    if self._aborting:
                        raise _Abort
                    self._conds[t].wait()
                if self._aborting:
                    raise _Abort
                self._on_granted(rec)
                self.state.emit(t, EventKind.THREAD_START)
            fn(*args)
            self._exit_thread(rec)
        except _Abort:
            pass
        except _Violation as v:
            self._finish(Outcome.violation(v.message))
        except AssertionError as exc:
            self._finish(Outcome.violation(str(exc) or "assertion failed"))
        except (ReplayMismatch, StrategyError) as exc:
            self._fail(exc)
        except ProtocolError as exc:
            self._finish(Outcome.panic(f"thread {t}: {exc}"))
        except Exception as exc:
            self._finish(Outcome.panic(f"thread {t}: {type(exc).__name__}: {exc}"))
        finally:
            for mon, depth in self._native_holds[t].items():
                for _ in range(depth):
                    mon._native.release()
            self._native_holds[t].clear()
            _tls.engine = None

    def _exit_thread(self, rec: ThreadRecord) -> None:
        gate = self._gates.get(rec.id)
        if gate is not None and id(gate) not in self._objects:
            gate = None
        if gate is not None:
            with gate._native:
                gate._native.notify_all()
        with self._lock:
            self._check_live()
            st = self.state
            if gate is not None:
                r = self._objects[id(gate)][1]
                ws = list(st.waiting.waiting_on(r))
                for w in ws:
                    st.waiting.wake(w, r)
                st.emit(rec.id, EventKind.NOTIFY_ALL, r, len(ws))
            st.shadow.release(rec.run_resource, rec.id)
            st.emit(rec.id, EventKind.SHADOW_RELEASE, rec.run_resource, 0)
            st.emit(rec.id, EventKind.THREAD_EXIT)
            rec.phase = Phase.TERMINATED
            rec.request = None
            self._running = None
            self._sched_cond.notify()

    def _finish(self, outcome: Outcome) -> None:
        with self._lock:
            if self._outcome is None and self._error is None:
                self._outcome = outcome
            self._stopped = True
            self._running = None
            self._sched_cond.notify()

    def _finish_violation(self, message: str) -> None:
        self._finish(Outcome.violation(message))

    def _fail(self, exc: BaseException) -> None:
        with self._lock:
            if self._error is None:
                self._error = exc
            self._stopped = True
            self._running = None
            self._sched_cond.notify()

    def _check_live(self) -> None:
        if self._aborting or self._stopped:
            raise _Abort

    # -- resources ---------------------------------------------------------------

    def resource(self, obj: Any, kind: ResourceKind) -> ResourceId:
        """ResourceId for ``obj``, allocated on first touch."""
        with self._lock:
            return self._resource(obj, kind)

    def _resource(self, obj: Any, kind: ResourceKind) -> ResourceId:
        key = id(obj)
        hit = self._objects.get(key)
        if hit is not None:
            return hit[1]
        r = self.state.new_resource(kind)
        self._objects[key] = (obj, r)
        if kind is ResourceKind.MONITOR:
            self._monitors[r] = obj
        elif kind is ResourceKind.SEMAPHORE:
            self.state.sem_counts[r] = obj._initial
        elif kind is ResourceKind.LATCH:
            self.state.latch_counts[r] = obj._initial
        return r

    def _park_resource(self, t: ThreadId) -> ResourceId:
        st = self.state
        if t not in st.park_resources:
            st.park_resources[t] = st.new_resource(ResourceKind.PARK)
        return st.park_resources[t]

    def _join_gate(self, t: ThreadId):
        gate = self._gates.get(t)
        if gate is None:
            from .primitives import Monitor
            gate = self._gates[t] = Monitor()
        return gate

    # -- application-thread side -------------------------------------------------

    def _park(self, rec: ThreadRecord) -> None:
        """Hand control to the scheduler and sleep until released. Lock held."""
        t = rec.id
        self._running = None
        self._sched_cond.notify()
        cond = self._conds[t]
        while self._running != t:
            if self._aborting:
                raise _Abort
            cond.wait()
        if self._aborting:
            raise _Abort

    def _on_granted(self, rec: ThreadRecord) -> None:
        op, r = rec.request
        rec.request = None
        rec.phase = Phase.RUNNING
        if r is not None:
            q = self.state.shadow.waiters.get(r)
            if q and rec.id in q:
                q.remove(rec.id)
            n = self.state.shadow.acquire(r, rec.id)
            self.state.emit(rec.id, EventKind.SHADOW_ACQUIRE, r, n)

    def acquire_shadow(self, rec: ThreadRecord, op: Op, r: Optional[ResourceId]) -> None:
        """Block at a scheduling point until the scheduler picks this thread."""
        with self._lock:
            self._check_live()
            rec.request = (op, r)
            rec.phase = Phase.BLOCKED
            if r is not None and self.state.shadow.owner.get(r) != rec.id:
                self.state.shadow.waiters.setdefault(r, []).append(rec.id)
            self._park(rec)
            self._on_granted(rec)

    def release_shadow(self, rec: ThreadRecord, r: ResourceId) -> int:
        with self._lock:
            self._check_live()
            n = self.state.shadow.release(r, rec.id)
            self.state.emit(rec.id, EventKind.SHADOW_RELEASE, r, n)
            return n

    def emit(self, rec: ThreadRecord, kind: EventKind, r: Optional[ResourceId] = None,
             value: Optional[int] = None) -> None:
        with self._lock:
            self._check_live()
            self.state.emit(rec.id, kind, r, value)

    def owns(self, rec: ThreadRecord, r: ResourceId) -> bool:
        with self._lock:
            return self.state.shadow.owner.get(r) == rec.id

    def is_terminated(self, t: ThreadId) -> bool:
        with self._lock:
            return self.state.threads[t].phase is Phase.TERMINATED

    # monitors

    def monitor_enter(self, rec: ThreadRecord, mon) -> None:
        r = self.resource(mon, ResourceKind.MONITOR)
        self.acquire_shadow(rec, Op.MONITOR_ENTER, r)
        mon._native.acquire()
        holds = self._native_holds[rec.id]
        holds[mon] = holds.get(mon, 0) + 1
        self.emit(rec, EventKind.MONITOR_ENTER, r, self.state.shadow.holds(r, rec.id))

    def monitor_exit(self, rec: ThreadRecord, mon) -> None:
        holds = self._native_holds[rec.id]
        if self._aborting or self._stopped:
            if holds.get(mon, 0) > 0:
                holds[mon] -= 1
                mon._native.release()
            raise _Abort
        r = self.resource(mon, ResourceKind.MONITOR)
        if not self.owns(rec, r):
            raise ProtocolError(f"monitor exit on {r} without owning it")
        self.emit(rec, EventKind.MONITOR_EXIT, r, self.state.shadow.holds(r, rec.id) - 1)
        holds[mon] -= 1
        mon._native.release()
        self.release_shadow(rec, r)

    def wait(self, rec: ThreadRecord, mon) -> bool:
        """Wait on ``mon``; True if woken by notify, False if woken spuriously."""
        r = self.resource(mon, ResourceKind.MONITOR)
        t = rec.id
        with self._lock:
            self._check_live()
            st = self.state
            if st.shadow.owner.get(r) != t:
                raise ProtocolError(f"wait on {r} without owning it")
            k = st.shadow.release_all(r, t)
            st.emit(t, EventKind.SHADOW_RELEASE, r, 0)
            rec.saved_hold = k
            rec.phase = Phase.WAITING
            rec.wait_monitor = r
            rec.woken_spuriously = False
            rec.resume_granted = False
            st.waiting.waiting_on(r).append(t)
            st.emit(t, EventKind.WAIT_ENTER, r, k)
            self._running = None
            self._sched_cond.notify()
        native = mon._native
        while True:
            native.wait()
            with self._lock:
                if self._aborting or self._stopped:
                    raise _Abort
                if rec.resume_granted:  # shadow tryLock
                    rec.resume_granted = False
                    break
        with self._lock:
            st = self.state
            n = st.shadow.acquire(r, t, rec.saved_hold)
            st.emit(t, EventKind.SHADOW_ACQUIRE, r, n)
            st.emit(t, EventKind.WAIT_RESUME, r, 0 if rec.woken_spuriously else 1)
            rec.phase = Phase.RUNNING
            rec.saved_hold = 0
            rec.wait_monitor = None
            return not rec.woken_spuriously

    def notify(self, rec: ThreadRecord, mon, all_: bool) -> None:
        r = self.resource(mon, ResourceKind.MONITOR)
        t = rec.id
        with self._lock:
            self._check_live()
            st = self.state
            if st.shadow.owner.get(r) != t:
                raise ProtocolError(f"notify on {r} without owning it")
            ws = st.waiting.waiting_on(r)
            if all_:
                woken = sorted(ws)
            elif len(ws) <= 1:
                woken = list(ws)
            else:
                options = tuple(sorted(ws))
                choice = self.strategy.choose_wake(options, r, st.step_count)
                if choice not in options:
                    raise StrategyError(f"wake choice {choice} not among waiters {options}")
                self.schedule.steps.append(Wake(choice))
                woken = [choice]
            for w in woken:
                st.waiting.wake(w, r)
            if all_:
                st.emit(t, EventKind.NOTIFY_ALL, r, len(woken))
            else:
                st.emit(t, EventKind.NOTIFY, r, woken[0] if woken else None)
        mon._native.notify_all()

    # other primitives

    def gated(self, rec: ThreadRecord, op: Op, r: Optional[ResourceId], kind: EventKind,
              effect: Callable[[EngineState], Optional[int]]) -> Optional[int]:
        """Acquire shadow, apply ``effect`` to engine metadata, emit, release."""
        self.acquire_shadow(rec, op, r)
        with self._lock:
            self._check_live()
            value = effect(self.state)
            self.state.emit(rec.id, kind, r, value if isinstance(value, int) else None)
        if r is not None:
            self.release_shadow(rec, r)
        return value

    def park_resource(self, t: ThreadId) -> ResourceId:
        with self._lock:
            return self._park_resource(t)

    def join_gate(self, t: ThreadId):
        with self._lock:
            return self._join_gate(t)
