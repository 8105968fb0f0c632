"""Exhaustive outcome enumeration over fine-grained and sync-point-scheduled traces."""

from __future__ import annotations

import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from .interp import (
    RUN,
    STATUS,
    UnboundedProgram,
    apply_spurious,
    enabled,
    initial_state,
    interp_step,
    is_switch_point,
    spurious_options,
    successors_fine,
    successors_sps,
    terminal,
    wake_options,
)
from .litmus import OUTCOME_CLASSES, LitmusProgram

DEFAULT_BUDGET = 2_000_000


@dataclass
class OutcomeSet:
    """Outcomes reachable by a program, plus how many schedules reach each class.

    ``schedules`` counts maximal decision paths (thread choices, notify
    designations and spurious-wake directives), not distinct outcomes.
    """

    outcomes: frozenset = frozenset()
    class_counts: Counter = field(default_factory=Counter)
    states: int = 0
    partial: bool = False
    mode: str = ""

    @property
    def schedules(self) -> int:
        return sum(self.class_counts.values())

    @property
    def classes(self) -> set:
        return {k[0] for k in self.outcomes}

    def bugs(self) -> frozenset:
        return frozenset(k for k in self.outcomes if k[0] in ("violation", "deadlock"))

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "partial": self.partial,
            "states": self.states,
            "schedules": self.schedules,
            "class_counts": {c: self.class_counts.get(c, 0) for c in OUTCOME_CLASSES},
            "distinct_outcomes": len(self.outcomes),
        }


class _BudgetExhausted(Exception):
    pass


def _enumerate(prog: LitmusProgram, successors: Callable, budget: int, spurious_limit: int,
               mode: str) -> OutcomeSet:
    memo: dict = {}
    on_stack: set = set()
    idx = {c: i for i, c in enumerate(OUTCOME_CLASSES)}

    def visit(state):
        hit = memo.get(state)
        if hit is not None:
            return hit
        key = terminal(prog, state, spurious_limit)
        if key is not None:
            counts = [0] * len(OUTCOME_CLASSES)
            counts[idx[key[0]]] = 1
            res = (frozenset((key,)), tuple(counts))
        else:
            if state in on_stack:
                raise UnboundedProgram(f"{prog.name}: state cycle, program is not bounded")
            if len(memo) >= budget:
                raise _BudgetExhausted
            on_stack.add(state)
            outs: set = set()
            counts = [0] * len(OUTCOME_CLASSES)
            for _, nxt in successors(prog, state, spurious_limit):
                o, c = visit(nxt)
                outs |= o
                for i, n in enumerate(c):
                    counts[i] += n
            on_stack.discard(state)
            res = (frozenset(outs), tuple(counts))
        memo[state] = res
        return res

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20_000))
    try:
        outs, counts = visit(initial_state(prog))
    except _BudgetExhausted:
        return OutcomeSet(partial=True, states=len(memo), mode=mode)
    finally:
        sys.setrecursionlimit(old)
    cc = Counter({c: n for c, n in zip(OUTCOME_CLASSES, counts) if n})
    return OutcomeSet(outs, cc, len(memo), False, mode)


def enumerate_fine_grained(prog: LitmusProgram, budget: int = DEFAULT_BUDGET,
                           spurious_limit: int = 0) -> OutcomeSet:
    """All outcomes when a context switch may happen before any instruction."""
    return _enumerate(prog, successors_fine, budget, spurious_limit, "fine")


def enumerate_sps(prog: LitmusProgram, budget: int = DEFAULT_BUDGET,
                  spurious_limit: int = 0) -> OutcomeSet:
    """All outcomes when threads switch only at synchronization instructions."""
    return _enumerate(prog, successors_sps, budget, spurious_limit, "sps")


def _weighted_segment(prog: LitmusProgram, state: tuple, t: int) -> list:
    # like run_segment, but each notify designation carries probability 1/len(waiters)
    out = []
    opts = wake_options(prog, state, t)
    stack = [(1.0 / len(opts), interp_step(prog, state, t, w)) for w in opts]
    while stack:
        p, s = stack.pop()
        if s[6] is not None or s[0][t][STATUS] != RUN or is_switch_point(prog, s, t):
            out.append((p, s))
            continue
        opts = wake_options(prog, s, t)
        stack.extend((p / len(opts), interp_step(prog, s, t, w)) for w in opts)
    return out


def random_walk_mass(prog: LitmusProgram, spurious_limit: int = 0) -> dict:
    """Probability of each outcome class when every SPS decision is uniform.

    This is the distribution a uniform random scheduler samples from: at each
    step every enabled thread (and spurious-wake directive) is equally likely,
    and a single notify picks each waiter with equal probability.
    """
    memo: dict = {}

    def visit(state) -> dict:
        hit = memo.get(state)
        if hit is not None:
            return hit
        key = terminal(prog, state, spurious_limit)
        if key is not None:
            res = {key[0]: 1.0}
        else:
            branches = []
            for t in range(len(state[0])):
                if enabled(prog, state, t):
                    branches.append(_weighted_segment(prog, state, t))
            for t in spurious_options(state, spurious_limit) if spurious_limit else ():
                branches.append([(1.0, apply_spurious(state, t))])
            res = {}
            for branch in branches:
                for p, nxt in branch:
                    for c, q in visit(nxt).items():
                        res[c] = res.get(c, 0.0) + q * p / len(branches)
        memo[state] = res
        return res

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20_000))
    try:
        return visit(initial_state(prog))
    finally:
        sys.setrecursionlimit(old)
