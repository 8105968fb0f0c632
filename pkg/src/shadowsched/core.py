"""State model shared by the engine, strategies, oracle and harness."""

from __future__ import annotations

import enum
import hashlib
import struct
from dataclasses import dataclass, field
from typing import Optional, Union

ThreadId = int

SCHEDULE_VERSION = 1


class ShadowSchedError(Exception):
    """Base class for every error raised by this package."""


class ProtocolError(ShadowSchedError):
    """Misuse of a modeled primitive (exit without enter, notify without owning, ...)."""


class UsageError(ShadowSchedError):
    """API called outside of its contract (e.g. a primitive used outside a run)."""


class StrategyError(ShadowSchedError):
    """A strategy returned a decision that was not among the offered options."""


class ReplayMismatch(ShadowSchedError):
    """A recorded schedule diverged from the program being replayed."""

    def __init__(self, message: str, step_index: int, enabled: tuple = ()) -> None:
        super().__init__(f"step {step_index}: {message} (enabled={list(enabled)})")
        self.step_index = step_index
        self.enabled = enabled


class ResourceKind(enum.Enum):
    RUN = 0
    MONITOR = 1
    ATOMIC = 2
    VOLATILE = 3
    SEMAPHORE = 4
    LATCH = 5
    PARK = 6


@dataclass(frozen=True, order=True)
class ResourceId:
    index: int
    kind: ResourceKind = field(compare=False)

    def __str__(self) -> str:
        return f"{self.kind.name.lower()}#{self.index}"


class EventKind(enum.Enum):
    # values are the on-the-wire codes used by trace_digest; never renumber
    THREAD_START = 1
    THREAD_EXIT = 2
    SHADOW_ACQUIRE = 3
    SHADOW_RELEASE = 4
    MONITOR_ENTER = 5
    MONITOR_EXIT = 6
    WAIT_ENTER = 7
    WAIT_RESUME = 8
    NOTIFY = 9
    NOTIFY_ALL = 10
    ATOMIC_OP = 11
    VOLATILE_READ = 12
    VOLATILE_WRITE = 13
    SEM_ACQUIRE = 14
    SEM_RELEASE = 15
    LATCH_COUNT_DOWN = 16
    LATCH_AWAIT = 17
    PARK = 18
    UNPARK = 19
    SLEEP_POINT = 20
    YIELD_POINT = 21
    ASSERT_CHECK = 22
    SPURIOUS_WAKE = 23


@dataclass(frozen=True)
class Event:
    thread: ThreadId
    kind: EventKind
    resource: Optional[ResourceId] = None
    value: Optional[int] = None
    index: int = 0
    step: int = 0


class OutcomeKind(enum.Enum):
    PASS = 0
    ASSERTION_VIOLATION = 1
    DEADLOCK = 2
    PANIC = 3
    BUDGET_EXCEEDED = 4

    @property
    def label(self) -> str:
        return _OUTCOME_LABELS[self]


_OUTCOME_LABELS = {
    OutcomeKind.PASS: "pass",
    OutcomeKind.ASSERTION_VIOLATION: "violation",
    OutcomeKind.DEADLOCK: "deadlock",
    OutcomeKind.PANIC: "panic",
    OutcomeKind.BUDGET_EXCEEDED: "budget",
}


@dataclass(frozen=True)
class Outcome:
    """Terminal classification of one execution.

    For deadlocks, ``cycle`` holds the wait-for cycle when one exists and
    ``blocked`` always lists every non-terminated thread.
    """

    kind: OutcomeKind
    message: str = ""
    cycle: tuple[ThreadId, ...] = ()
    blocked: tuple[ThreadId, ...] = ()

    @classmethod
    def passed(cls) -> Outcome:
        return cls(OutcomeKind.PASS)

    @classmethod
    def violation(cls, message: str) -> Outcome:
        return cls(OutcomeKind.ASSERTION_VIOLATION, message)

    @classmethod
    def deadlock(cls, cycle: tuple[ThreadId, ...], blocked: tuple[ThreadId, ...]) -> Outcome:
        return cls(OutcomeKind.DEADLOCK, "", tuple(cycle), tuple(blocked))

    @classmethod
    def panic(cls, message: str) -> Outcome:
        return cls(OutcomeKind.PANIC, message)

    @classmethod
    def budget_exceeded(cls, message: str = "") -> Outcome:
        return cls(OutcomeKind.BUDGET_EXCEEDED, message)

    @property
    def is_bug(self) -> bool:
        return self.kind in (OutcomeKind.ASSERTION_VIOLATION, OutcomeKind.DEADLOCK, OutcomeKind.PANIC)

    @property
    def wait_for(self) -> tuple[ThreadId, ...]:
        return self.cycle or self.blocked

    def __str__(self) -> str:
        if self.kind is OutcomeKind.DEADLOCK:
            if self.cycle:
                return f"deadlock(cycle={list(self.cycle)})"
            return f"deadlock(blocked={list(self.blocked)})"
        if self.message:
            return f"{self.kind.label}({self.message})"
        return self.kind.label


# -- schedule decisions ------------------------------------------------------


@dataclass(frozen=True)
class Choose:
    thread: ThreadId


@dataclass(frozen=True)
class SpuriousWake:
    thread: ThreadId
    resource: int


@dataclass(frozen=True)
class Wake:
    """Which waiter a single ``notify`` removes from its waiting set."""

    thread: ThreadId


ScheduleStep = Union[Choose, SpuriousWake, Wake]


@dataclass
class Schedule:
    seed: int = 0
    strategy: str = ""
    steps: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    target: str = ""
    expected_digest: Optional[str] = None
    version: int = SCHEDULE_VERSION


@dataclass
class Trace:
    events: list
    outcome: Outcome
    digest: str = ""

    def __post_init__(self) -> None:
        if not self.digest:
            self.digest = trace_digest(self)


# -- canonical encoding ------------------------------------------------------

TRACE_MAGIC = b"SSTRACE\x01"


def _blob(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def _int_field(value: Optional[int]) -> bytes:
    if value is None:
        return b"\x00"
    return b"\x01" + _blob(str(int(value)).encode("ascii"))


def encode_event(ev: Event) -> bytes:
    """Canonical bytes for one event (without the outer length prefix).

    Layout, all integers big-endian::

        u32 thread | u16 kind code
        u8 has_resource [ u32 resource index | u8 resource kind code ]
        u8 has_value [ u32 len | ascii decimal value ]
        u64 index | u64 step
    """
    parts = [struct.pack(">IH", ev.thread, ev.kind.value)]
    if ev.resource is None:
        parts.append(b"\x00")
    else:
        parts.append(b"\x01" + struct.pack(">IB", ev.resource.index, ev.resource.kind.value))
    parts.append(_int_field(ev.value))
    parts.append(struct.pack(">QQ", ev.index, ev.step))
    return b"".join(parts)


def encode_outcome(outcome: Outcome) -> bytes:
    """``u8 kind | blob(utf-8 message) | u32 n, u32*n cycle | u32 n, u32*n blocked``."""
    parts = [struct.pack(">B", outcome.kind.value), _blob(outcome.message.encode("utf-8"))]
    for seq in (outcome.cycle, outcome.blocked):
        parts.append(struct.pack(f">I{len(seq)}I", len(seq), *seq))
    return b"".join(parts)


def encode_trace(events, outcome: Outcome) -> bytes:
    """``magic | u32 event count | blob(event)* | outcome``."""
    parts = [TRACE_MAGIC, struct.pack(">I", len(events))]
    parts.extend(_blob(encode_event(ev)) for ev in events)
    parts.append(encode_outcome(outcome))
    return b"".join(parts)


def trace_digest(trace: Trace) -> str:
    """SHA-256 (hex) of the canonical trace encoding."""
    return hashlib.sha256(encode_trace(trace.events, trace.outcome)).hexdigest()
