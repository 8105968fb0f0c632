"""Controlled concurrency testing with shadow locking."""

from .core import (
    Choose,
    Event,
    EventKind,
    Outcome,
    OutcomeKind,
    ProtocolError,
    ReplayMismatch,
    ResourceId,
    ResourceKind,
    Schedule,
    SpuriousWake,
    StrategyError,
    Trace,
    UsageError,
    Wake,
    trace_digest,
)
from .engine import Engine, Execution
from .primitives import (
    AtomicInt,
    Latch,
    Monitor,
    Semaphore,
    ThreadHandle,
    Volatile,
    assert_now,
    current_thread_id,
    park,
    sleep,
    spawn,
    unpark,
    yield_,
)
from .strategies import (
    PCTStrategy,
    POSStrategy,
    RandomStrategy,
    ReplayStrategy,
    explore_dfs,
    make_strategy,
)

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "Execution",
    "Choose",
    "Event",
    "EventKind",
    "Outcome",
    "OutcomeKind",
    "ProtocolError",
    "ReplayMismatch",
    "ResourceId",
    "ResourceKind",
    "Schedule",
    "SpuriousWake",
    "StrategyError",
    "Trace",
    "UsageError",
    "Wake",
    "trace_digest",
    "AtomicInt",
    "Latch",
    "Monitor",
    "Semaphore",
    "ThreadHandle",
    "Volatile",
    "assert_now",
    "current_thread_id",
    "park",
    "sleep",
    "spawn",
    "unpark",
    "yield_",
    "PCTStrategy",
    "POSStrategy",
    "RandomStrategy",
    "ReplayStrategy",
    "explore_dfs",
    "make_strategy",
]
