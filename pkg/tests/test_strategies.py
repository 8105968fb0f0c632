import statistics
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import litmus, run
from shadowsched import AtomicInt, Volatile, spawn
from shadowsched.core import Choose, OutcomeKind, ReplayMismatch, ResourceId, ResourceKind, Schedule
from shadowsched.engine import EnabledSet
from shadowsched.harness.corpus import ticket_handshake, single_thread
from shadowsched.harness.runner import RunConfig, run_search
from shadowsched.oracle import dfs_litmus, enumerate_sps, parse_litmus
from shadowsched.oracle.enumerate import random_walk_mass
from shadowsched.rng import Rng
from shadowsched.strategies import (
    PriorityMap,
    ReplayStrategy,
    choose_pct,
    choose_pos,
    choose_random,
    competes,
    explore_dfs,
    make_strategy,
    sample_change_points,
)

A = ResourceId(5, ResourceKind.MONITOR)
B = ResourceId(6, ResourceKind.VOLATILE)


def _prio(values: dict) -> PriorityMap:
    p = PriorityMap(Rng(7))
    p.prio.update(values)
    return p


# -- random -----------------------------------------------------------------


def test_random_forced_move():
    assert choose_random(EnabledSet((1,), {1: A}), Rng(0)) == Choose(1)


def test_random_is_fair_between_two():
    rng = Rng(2024)
    en = EnabledSet((1, 2), {1: A, 2: B})
    n = 100_000
    c = Counter(choose_random(en, rng).thread for _ in range(n))
    assert abs(c[1] / n - 0.5) <= 0.02


def test_random_ticket_handshake_matches_oracle_mass():
    report = run_search("ticket_handshake", RunConfig(iterations=1000, seed=0, keep_going=True))
    mass = random_walk_mass(litmus("ticket_handshake"))
    freq = {k: v / 1000 for k, v in report.counts().items()}
    assert set(freq) == {"pass", "deadlock", "violation"}
    for cls, p in mass.items():
        assert abs(freq[cls] - p) <= 0.05, (cls, freq[cls], p)


# -- PCT --------------------------------------------------------------------


def test_pct_argmax_without_change_point():
    assert choose_pct(EnabledSet((1, 2), {1: A, 2: B}), _prio({1: 5, 2: 2}), frozenset(), 0) == Choose(1)


def test_pct_change_point_demotes_after_choosing():
    prio = _prio({1: 5, 2: 2})
    en = EnabledSet((1, 2), {1: A, 2: B})
    assert choose_pct(en, prio, frozenset({4}), 4) == Choose(1)
    assert prio.prio[1] < prio.prio[2]
    assert choose_pct(en, prio, frozenset({4}), 5) == Choose(2)


def test_change_points_distinct_and_in_range():
    cps = sample_change_points(Rng(1), 3, 10)
    assert len(cps) == 3 and all(0 <= c < 10 for c in cps)
    assert sample_change_points(Rng(1), 5, 3) == frozenset({0, 1, 2})


def test_pct_finds_lost_notify():
    rep = run_search("lost_notify", RunConfig(strategy="pct", seed=1, iterations=10_000))
    assert rep.found_bug
    assert rep.first_failure.outcome.startswith("deadlock")


# -- POS --------------------------------------------------------------------


def test_pos_different_resource_keeps_priority():
    prio = _prio({1: 9, 2: 4})
    assert choose_pos(EnabledSet((1, 2), {1: A, 2: B}), prio) == Choose(1)
    assert prio.prio == {1: 9, 2: 4}


def test_pos_same_resource_rerandomizes():
    prio = _prio({1: 9, 2: 4})
    assert choose_pos(EnabledSet((1, 2), {1: A, 2: A}), prio) == Choose(1)
    assert prio.prio[1] == 9 and prio.prio[2] != 4


def test_unstarted_thread_competes_with_everything():
    run_res = ResourceId(2, ResourceKind.RUN)
    assert competes(A, run_res) and competes(run_res, B)
    assert not competes(A, B) and not competes(None, run_res)


def test_pos_finds_atomicity_violation():
    rep = run_search("atomicity", RunConfig(strategy="pos", seed=0, iterations=200))
    assert rep.found_bug and "violation" in rep.first_failure.outcome


@given(st.dictionaries(st.integers(0, 50), st.integers(-10**6, 10**6), min_size=1, max_size=8,
                       ).filter(lambda d: len(set(d.values())) == len(d)), st.randoms())
def test_argmax_independent_of_order(prios, rnd):
    p = _prio(prios)
    order = list(prios)
    rnd.shuffle(order)
    assert p.argmax(order) == max(prios, key=prios.get)


def test_priorities_distinct():
    p = PriorityMap(Rng(3))
    p.admit(range(200))
    assert len(set(p.prio.values())) == 200


# -- determinism ----------------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["random", "pct", "pos"]), st.integers(0, 2**64 - 1))
def test_seed_determinism(name, seed):
    a = run(ticket_handshake, make_strategy(name, seed, horizon=12))
    b = run(ticket_handshake, make_strategy(name, seed, horizon=12))
    assert a.schedule.steps == b.schedule.steps
    assert a.trace.digest == b.trace.digest


# -- replay -----------------------------------------------------------------------


def test_replay_reproduces_digest():
    for seed in range(20):
        ex = run(ticket_handshake, make_strategy("random", seed))
        again = run(ticket_handshake, ReplayStrategy(ex.schedule))
        assert again.trace.digest == ex.trace.digest


def test_truncated_replay_is_budget_exceeded():
    ex = run(ticket_handshake, make_strategy("random", 3))
    s = ex.schedule
    short = Schedule(s.seed, s.strategy, s.steps[:3], s.params)
    out = run(ticket_handshake, ReplayStrategy(short)).outcome
    assert out.kind is OutcomeKind.BUDGET_EXCEEDED
    assert "exhausted at step 3" in out.message


def test_replay_against_variant_mismatches_at_divergence():
    def base():
        v = Volatile(0)
        h = spawn(v.set, 1)
        v.get()
        h.join()

    def variant():
        v = Volatile(0)
        h = spawn(v.set, 1)
        g = spawn(v.set, 2)  # extra thread
        v.get()
        h.join()
        g.join()

    rec = run(variant, make_strategy("random", 0))
    # find a recording that actually schedules the extra thread early
    seed = 0
    while not any(step == Choose(2) for step in rec.schedule.steps[:3]):
        seed += 1
        rec = run(variant, make_strategy("random", seed))
    first = next(i for i, step in enumerate(rec.schedule.steps) if step == Choose(2))
    with pytest.raises(ReplayMismatch) as err:
        run(base, ReplayStrategy(rec.schedule))
    assert err.value.step_index == first


# -- DFS ----------------------------------------------------------------------------


def test_dfs_single_thread_one_schedule():
    res = explore_dfs(lambda s: run(single_thread, s))
    assert res.schedules == 1 and res.classes == {"pass"}


def test_dfs_ticket_handshake_all_classes():
    res = explore_dfs(lambda s: run(ticket_handshake, s))
    assert res.classes == {"pass", "deadlock", "violation"}
    assert res.schedules == enumerate_sps(litmus("ticket_handshake")).schedules


_INDEPENDENT = """
litmus v1 independent
var a atomic 0
var b atomic 0
thread main
  spawn w1 r0
  spawn w2 r1
  join r0
  join r1
thread w1
  rmw a 1 r0
  rmw a 1 r0
thread w2
  rmw b 1 r0
  rmw b 1 r0
"""


def test_dfs_independent_threads_count_matches_oracle():
    prog = parse_litmus(_INDEPENDENT)
    assert dfs_litmus(prog).schedules == enumerate_sps(prog).schedules


def test_dfs_python_independent_threads_count_matches_oracle():
    def main():
        a, b = AtomicInt(0), AtomicInt(0)
        h1 = spawn(lambda: (a.get_and_increment(), a.get_and_increment()))
        h2 = spawn(lambda: (b.get_and_increment(), b.get_and_increment()))
        h1.join()
        h2.join()

    res = explore_dfs(lambda s: run(main, s))
    assert res.schedules == enumerate_sps(parse_litmus(_INDEPENDENT)).schedules


def test_strategy_means_are_reported():
    # sanity only: every strategy eventually finds the atomicity bug for every seed
    for name in ("random", "pct", "pos"):
        its = []
        for seed in range(10):
            rep = run_search("atomicity", RunConfig(strategy=name, seed=seed, iterations=500, validate=False))
            assert rep.found_bug
            its.append(rep.first_failure.iteration + 1)
        assert statistics.mean(its) < 50
