"""Search strategies consulted by the engine at every scheduling step."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .core import (
    Choose,
    ReplayMismatch,
    ResourceId,
    ResourceKind,
    Schedule,
    ScheduleStep,
    SpuriousWake,
    ThreadId,
    UsageError,
    Wake,
)
from .engine import DEFAULT_MAX_STEPS, EnabledSet, Execution, ScheduleExhausted, SchedulingView
from .rng import Rng

STRATEGY_NAMES = ("random", "pct", "pos", "replay", "dfs")


class Strategy:
    name = "strategy"

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed
        self.rng = Rng(seed)
        self.params: dict = {}

    def choose(self, view: SchedulingView) -> ScheduleStep:
        raise NotImplementedError

    def choose_wake(self, waiters: tuple[ThreadId, ...], monitor: ResourceId, step: int) -> ThreadId:
        return waiters[self.rng.below(len(waiters))]

    def _maybe_spurious(self, view: SchedulingView) -> Optional[SpuriousWake]:
        # spurious directives compete with the enabled threads as extra options
        if not view.spurious:
            return None
        n_threads = len(view.enabled.threads)
        k = self.rng.below(n_threads + len(view.spurious))
        if k < n_threads:
            return None
        t, r = view.spurious[k - n_threads]
        return SpuriousWake(t, r.index)


# -- random walk --------------------------------------------------------------


def choose_random(enabled: EnabledSet, rng: Rng) -> ScheduleStep:
    """Pick one enabled thread uniformly."""
    if not enabled.threads:
        raise UsageError("choose_random called with an empty enabled set")
    return Choose(enabled.threads[rng.below(len(enabled.threads))])


class RandomStrategy(Strategy):
    name = "random"

    def choose(self, view: SchedulingView) -> ScheduleStep:
        opts = view.options()
        return opts[self.rng.below(len(opts))]


# -- priority-based ------------------------------------------------------------------


class PriorityMap:
    """Distinct random priorities; higher runs first."""

    def __init__(self, rng: Rng) -> None:
        self.rng = rng
        self.prio: dict[ThreadId, int] = {}

    def fresh(self) -> int:
        taken = set(self.prio.values())
        while True:
            p = self.rng.u64()
            if p not in taken:
                return p

    def admit(self, threads: Iterable[ThreadId]) -> None:
        for t in sorted(threads):
            if t not in self.prio:
                self.prio[t] = self.fresh()

    def argmax(self, threads: Iterable[ThreadId]) -> ThreadId:
        return max(threads, key=self.prio.__getitem__)

    def demote(self, t: ThreadId) -> None:
        self.prio[t] = min(self.prio.values()) - 1


def sample_change_points(rng: Rng, depth: int, horizon: int) -> frozenset[int]:
    """``depth`` distinct step indices drawn uniformly from ``[0, horizon)``."""
    if depth >= horizon:
        return frozenset(range(horizon))
    points: set[int] = set()
    while len(points) < depth:
        points.add(rng.below(horizon))
    return frozenset(points)


def choose_pct(enabled: EnabledSet, prio: PriorityMap, change_points: frozenset[int], step: int) -> ScheduleStep:
    """Run the highest-priority enabled thread; at a change point demote it below everyone."""
    prio.admit(enabled.threads)
    t = prio.argmax(enabled.threads)
    if step in change_points:
        prio.demote(t)
    return Choose(t)


def competes(a: Optional[ResourceId], b: Optional[ResourceId]) -> bool:
    """Whether two pending operations may touch the same resource.

    A thread that has not started yet is pending on its private run lock,
    but what it will touch first is unknown, so it competes with everyone.
    """
    if a is None or b is None:
        return False
    if a.kind is ResourceKind.RUN or b.kind is ResourceKind.RUN:
        return True
    return a == b


def choose_pos(enabled: EnabledSet, prio: PriorityMap) -> ScheduleStep:
    """Run the highest-priority enabled thread and re-draw the priorities of
    every other enabled thread competing for the resource it is about to take."""
    prio.admit(enabled.threads)
    t = prio.argmax(enabled.threads)
    r = enabled.resource.get(t)
    for u in enabled.threads:
        if u != t and competes(r, enabled.resource.get(u)):
            prio.prio[u] = prio.fresh()
    return Choose(t)


class PCTStrategy(Strategy):
    """Probabilistic concurrency testing with ``depth`` priority change points.

    ``horizon`` is the step range change points are drawn from; it should
    approximate the number of scheduling steps of one execution.
    """

    name = "pct"

    def __init__(self, seed: int = 0, depth: int = 3, horizon: int = DEFAULT_MAX_STEPS) -> None:
        super().__init__(seed)
        if depth < 1:
            raise UsageError("PCT depth must be >= 1")
        if horizon < 1:
            raise UsageError("PCT horizon must be >= 1")
        self.depth = depth
        self.horizon = horizon
        self.params = {"depth": depth, "horizon": horizon}
        self.prio = PriorityMap(self.rng)
        self.change_points = sample_change_points(self.rng, depth, horizon)

    def choose(self, view: SchedulingView) -> ScheduleStep:
        self.prio.admit(view.alive)
        sw = self._maybe_spurious(view)
        if sw is not None:
            return sw
        return choose_pct(view.enabled, self.prio, self.change_points, view.step)


class POSStrategy(Strategy):
    name = "pos"

    def __init__(self, seed: int = 0) -> None:
        super().__init__(seed)
        self.prio = PriorityMap(self.rng)

    def choose(self, view: SchedulingView) -> ScheduleStep:
        self.prio.admit(view.alive)
        sw = self._maybe_spurious(view)
        if sw is not None:
            return sw
        return choose_pos(view.enabled, self.prio)


# -- replay ----------------------------------------------------------------------


class ReplayStrategy(Strategy):
    """Feeds back the decisions of a recorded schedule, verbatim."""

    name = "replay"

    def __init__(self, schedule: Schedule) -> None:
        super().__init__(schedule.seed)
        self.steps = list(schedule.steps)
        self.cursor = 0
        self.params = {"replayed_strategy": schedule.strategy}

    def _next(self, what: str, enabled: tuple) -> ScheduleStep:
        if self.cursor >= len(self.steps):
            raise ScheduleExhausted(f"schedule exhausted at step {self.cursor} while the program "
                                    f"still needs a {what} decision")
        return self.steps[self.cursor]

    def choose(self, view: SchedulingView) -> ScheduleStep:
        step = self._next("scheduling", view.enabled.threads)
        if isinstance(step, Wake) or step not in view.options():
            raise ReplayMismatch(f"recorded {step!r} is not a legal scheduling decision",
                                 self.cursor, view.enabled.threads)
        self.cursor += 1
        return step

    def choose_wake(self, waiters: tuple[ThreadId, ...], monitor: ResourceId, step: int) -> ThreadId:
        rec = self._next("wake", waiters)
        if not isinstance(rec, Wake) or rec.thread not in waiters:
            raise ReplayMismatch(f"recorded {rec!r} does not name a waiter of {monitor}",
                                 self.cursor, waiters)
        self.cursor += 1
        return rec.thread


# -- systematic depth-first search ---------------------------------------------------------


class DfsStrategy(Strategy):
    """Follows a forced prefix of option indices, then always takes option 0.

    Every decision (scheduling step or notify wake choice) is logged in
    ``path`` as ``(chosen index, number of options)``.
    """

    name = "dfs"

    def __init__(self, prefix: Optional[list[int]] = None) -> None:
        super().__init__(0)
        self.prefix = list(prefix or ())
        self.path: list[tuple[int, int]] = []

    def _pick(self, n: int) -> int:
        i = len(self.path)
        c = self.prefix[i] if i < len(self.prefix) else 0
        if c >= n:
            raise ReplayMismatch(f"dfs prefix wants option {c} of {n}; program is not deterministic", i)
        self.path.append((c, n))
        return c

    def choose(self, view: SchedulingView) -> ScheduleStep:
        opts = view.options()
        return opts[self._pick(len(opts))]

    def choose_wake(self, waiters: tuple[ThreadId, ...], monitor: ResourceId, step: int) -> ThreadId:
        return waiters[self._pick(len(waiters))]


def dfs_next(path: list[tuple[int, int]]) -> Optional[list[int]]:
    """Prefix for the next unexplored schedule, or None once the tree is exhausted."""
    path = list(path)
    while path and path[-1][0] == path[-1][1] - 1:
        path.pop()
    if not path:
        return None
    return [c for c, _ in path[:-1]] + [path[-1][0] + 1]


@dataclass
class DfsResult:
    schedules: int = 0
    outcome_counts: Counter = field(default_factory=Counter)
    outcomes: set = field(default_factory=set)
    partial: bool = False

    @property
    def classes(self) -> set[str]:
        return set(self.outcome_counts)


def explore_dfs(run_one: Callable[[DfsStrategy], Execution], max_schedules: Optional[int] = None,
                on_execution: Optional[Callable[[Execution], None]] = None) -> DfsResult:
    """Enumerate every decision sequence of a bounded program exactly once."""
    result = DfsResult()
    prefix: list[int] = []
    while True:
        strat = DfsStrategy(prefix)
        ex = run_one(strat)
        result.schedules += 1
        result.outcome_counts[ex.outcome.kind.label] += 1
        result.outcomes.add(ex.outcome)
        if on_execution is not None:
            on_execution(ex)
        nxt = dfs_next(strat.path)
        if nxt is None:
            return result
        if max_schedules is not None and result.schedules >= max_schedules:
            result.partial = True
            return result
        prefix = nxt


def make_strategy(name: str, seed: int = 0, *, depth: int = 3, horizon: int = DEFAULT_MAX_STEPS,
                  schedule: Optional[Schedule] = None) -> Strategy:
    if name == "random":
        return RandomStrategy(seed)
    if name == "pct":
        return PCTStrategy(seed, depth, horizon)
    if name == "pos":
        return POSStrategy(seed)
    if name == "replay":
        if schedule is None:
            raise UsageError("replay strategy needs a schedule")
        return ReplayStrategy(schedule)
    if name == "dfs":
        return DfsStrategy()
    raise UsageError(f"unknown strategy {name!r}; expected one of {STRATEGY_NAMES}")
