"""Search, replay and oracle-suite drivers used by the CLI and the tests."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

from ..core import ReplayMismatch, Schedule, Trace, UsageError, Wake
from ..engine import DEFAULT_MAX_STEPS, Engine, Execution
from ..rng import MASK64, derive_seed
from ..strategies import STRATEGY_NAMES, DfsStrategy, ReplayStrategy, dfs_next, make_strategy
from .corpus import Target, get_target
from .schedule_io import load_schedule, save_schedule
from .validate import validate_execution

log = logging.getLogger(__name__)

# seed-stream position reserved for the PCT horizon calibration run
CALIBRATION_INDEX = 1 << 40


@dataclass
class RunConfig:
    strategy: str = "random"
    seed: int = 0
    iterations: Optional[int] = 1000
    time_budget: Optional[float] = None
    max_steps: int = DEFAULT_MAX_STEPS
    pct_depth: Optional[int] = None
    pct_horizon: Optional[int] = None
    spurious: bool = False
    spurious_limit: int = 1
    jobs: int = 1
    out_dir: Optional[Union[str, Path]] = None
    keep_going: bool = False
    validate: bool = True

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGY_NAMES or self.strategy == "replay":
            raise UsageError(f"search strategy must be one of random, pct, pos, dfs; got {self.strategy!r}")
        if (self.iterations is None) == (self.time_budget is None):
            raise UsageError("give exactly one of iterations and time_budget")
        if self.iterations is not None and self.iterations < 1:
            raise UsageError("iterations must be positive")
        if self.time_budget is not None and self.time_budget <= 0:
            raise UsageError("time budget must be positive")
        if self.max_steps < 1:
            raise UsageError("max_steps must be positive")
        if self.strategy == "pct":
            if self.pct_depth is None:
                self.pct_depth = 3
            if self.pct_depth < 1:
                raise UsageError("PCT depth must be >= 1")
        elif self.pct_depth is not None:
            raise UsageError("--depth only applies to the pct strategy")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        self.seed &= MASK64


@dataclass
class Failure:
    iteration: int
    seed: int
    outcome: str
    digest: str
    schedule_path: Optional[str] = None


@dataclass
class RunReport:
    target: str
    strategy: str
    outcomes: list = field(default_factory=list)
    first_failure: Optional[Failure] = None
    execs_per_second: float = 0.0
    elapsed: float = 0.0
    params: dict = field(default_factory=dict)
    validation_errors: list = field(default_factory=list)
    dfs_exhausted: bool = False
    first_schedule: Optional[Schedule] = None

    @property
    def iterations(self) -> int:
        return len(self.outcomes)

    @property
    def found_bug(self) -> bool:
        return self.first_failure is not None

    def counts(self) -> dict:
        out: dict = {}
        for o in self.outcomes:
            out[o] = out.get(o, 0) + 1
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = self.counts()
        d["iterations"] = self.iterations
        del d["outcomes"], d["first_schedule"]
        return d


def _engine(strategy, config: RunConfig) -> Engine:
    return Engine(strategy, max_steps=config.max_steps, spurious=config.spurious,
                  spurious_limit=config.spurious_limit)


def execute(fn: Callable[[], None], strategy, config: RunConfig) -> Execution:
    return _engine(strategy, config).run(fn)


def decision_steps(schedule: Schedule) -> int:
    return sum(1 for s in schedule.steps if not isinstance(s, Wake))


def calibrate_horizon(fn: Callable[[], None], config: RunConfig) -> int:
    """Step count of one seeded random execution: the range PCT draws change points from."""
    probe = make_strategy("random", derive_seed(config.seed, CALIBRATION_INDEX))
    ex = execute(fn, probe, config)
    return max(1, decision_steps(ex.schedule))


def _strategy_for(config: RunConfig, i: int, horizon: Optional[int]):
    return make_strategy(config.strategy, derive_seed(config.seed, i), depth=config.pct_depth or 3,
                         horizon=horizon or config.max_steps)


def _schedule_params(config: RunConfig, strategy) -> dict:
    params = dict(strategy.params)
    params.update(max_steps=config.max_steps, spurious=config.spurious,
                  spurious_limit=config.spurious_limit)
    return params


def _run_range(fn, config: RunConfig, indices, horizon, deadline: Optional[float]):
    """Run the given iteration indices in order; yields (i, seed, execution, strategy)."""
    for i in indices:
        if deadline is not None and time.monotonic() >= deadline:
            return
        strat = _strategy_for(config, i, horizon)
        yield i, strat.seed, execute(fn, strat, config), strat


def _chunk_worker(args) -> list:
    target_name, fn, config, start, stop, stride, horizon, time_left = args
    if fn is None:
        fn = get_target(target_name).fn
    deadline = time.monotonic() + time_left if time_left is not None else None
    indices = range(start, stop, stride) if stop is not None else _count(start, stride)
    out = []
    for i, seed, ex, strat in _run_range(fn, config, indices, horizon, deadline):
        rec = _record(ex, config, strat, i, seed)
        out.append(rec)
        if rec["bug"] and not config.keep_going:
            break
    return out


def _count(start: int, stride: int):
    i = start
    while True:
        yield i
        i += stride


def _record(ex: Execution, config: RunConfig, strat, i: int, seed: int) -> dict:
    errors = validate_execution(ex).errors if config.validate else []
    rec = {"i": i, "seed": seed, "outcome": ex.outcome.kind.label, "text": str(ex.outcome),
           "bug": ex.outcome.is_bug, "digest": ex.trace.digest, "errors": errors, "schedule": None}
    if ex.outcome.is_bug:
        s = ex.schedule
        rec["schedule"] = Schedule(s.seed, s.strategy, list(s.steps), _schedule_params(config, strat),
                                   "", ex.trace.digest)
    return rec


def run_search(target: Union[str, Target], config: RunConfig) -> RunReport:
    """Run a target repeatedly under a search strategy; persist the first failing schedule."""
    tgt = get_target(target) if isinstance(target, str) else target
    report = RunReport(tgt.name, config.strategy)
    horizon = config.pct_horizon
    if config.strategy == "pct" and horizon is None:
        horizon = calibrate_horizon(tgt.fn, config)
    if config.strategy == "pct":
        report.params = {"depth": config.pct_depth, "horizon": horizon}

    t0 = time.perf_counter()
    if config.strategy == "dfs":
        records = _dfs_records(tgt.fn, config, report)
    elif config.jobs == 1:
        deadline = time.monotonic() + config.time_budget if config.time_budget else None
        indices = range(config.iterations) if config.iterations else _count(0, 1)
        records = []
        for i, seed, ex, strat in _run_range(tgt.fn, config, indices, horizon, deadline):
            rec = _record(ex, config, strat, i, seed)
            records.append(rec)
            if rec["bug"] and not config.keep_going:
                break
    else:
        records = _parallel_records(tgt, config, horizon)
    report.elapsed = time.perf_counter() - t0

    records.sort(key=lambda r: r["i"])
    if not config.keep_going:
        # position-based: everything up to and including the lowest failing index
        for k, rec in enumerate(records):
            if rec["bug"]:
                records = records[:k + 1]
                break
    report.outcomes = [r["outcome"] for r in records]
    report.execs_per_second = len(records) / report.elapsed if report.elapsed > 0 else 0.0
    for r in records:
        report.validation_errors.extend(f"iteration {r['i']}: {e}" for e in r["errors"])
    first = next((r for r in records if r["bug"]), None)
    if first is not None:
        fail = Failure(first["i"], first["seed"], first["text"], first["digest"])
        sched = first["schedule"]
        sched.target = tgt.name
        if config.out_dir is not None:
            name = f"{tgt.name.replace(':', '_')}-{config.strategy}-{config.seed}-{first['i']}.json"
            fail.schedule_path = str(save_schedule(sched, Path(config.out_dir) / name))
        report.first_failure = fail
        report.first_schedule = sched
    return report


def _dfs_records(fn, config: RunConfig, report: RunReport) -> list:
    records = []
    prefix: list = []
    deadline = time.monotonic() + config.time_budget if config.time_budget else None
    i = 0
    while True:
        strat = DfsStrategy(prefix)
        ex = execute(fn, strat, config)
        rec = _record(ex, config, strat, i, 0)
        records.append(rec)
        i += 1
        nxt = dfs_next(strat.path)
        if nxt is None:
            report.dfs_exhausted = True
            break
        if rec["bug"] and not config.keep_going:
            break
        if config.iterations is not None and i >= config.iterations:
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        prefix = nxt
    return records


def _parallel_records(tgt: Target, config: RunConfig, horizon) -> list:
    jobs = config.jobs
    fn = None if _registered(tgt) else tgt.fn  # registered targets are re-resolved by name
    if config.iterations is not None:
        n = config.iterations
        size = -(-n // jobs)
        tasks = [(tgt.name, fn, config, lo, min(n, lo + size), 1, horizon, None)
                 for lo in range(0, n, size)]
    else:
        tasks = [(tgt.name, fn, config, w, None, jobs, horizon, config.time_budget) for w in range(jobs)]
    records = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for chunk in pool.map(_chunk_worker, tasks):
            records.extend(chunk)
    return records


def _registered(tgt: Target) -> bool:
    try:
        return get_target(tgt.name).fn.__qualname__ == tgt.fn.__qualname__
    except UsageError:
        return False


@dataclass
class ReplayResult:
    trace: Trace
    execution: Execution
    digest_matches: Optional[bool]


def run_replay(target: Union[str, Target], schedule: Union[str, Path, Schedule]) -> ReplayResult:
    """Re-execute a recorded schedule; raises ReplayMismatch on divergence or digest mismatch."""
    tgt = get_target(target) if isinstance(target, str) else target
    sched = schedule if isinstance(schedule, Schedule) else load_schedule(schedule)
    p = sched.params
    engine = Engine(ReplayStrategy(sched), max_steps=int(p.get("max_steps", DEFAULT_MAX_STEPS)),
                    spurious=bool(p.get("spurious", False)), spurious_limit=int(p.get("spurious_limit", 1)))
    ex = engine.run(tgt.fn)
    match = None
    if sched.expected_digest:
        match = ex.trace.digest == sched.expected_digest
        if not match:
            raise ReplayMismatch(f"trace digest {ex.trace.digest[:16]} differs from recorded "
                                 f"{sched.expected_digest[:16]}", len(sched.steps))
    return ReplayResult(ex.trace, ex, match)


# -- oracle suite ------------------------------------------------------------------


@dataclass
class OracleSuiteReport:
    programs: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def failures(self) -> list:
        return [p for p in self.programs if p["verdict"] == "fail"]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        return json.dumps({"elapsed": self.elapsed, "programs": self.programs}, indent=2, default=str)


def run_oracle_suite(corpus_dir: Union[str, Path, None] = None, budget: int = 2_000_000,
                     spurious_modes: tuple = (0, 1)) -> OracleSuiteReport:
    """DRF check, dual enumeration and completeness verdict for every litmus program."""
    from ..oracle import check_drf, check_theorem1, load_corpus
    from .corpus import litmus_dir

    rep = OracleSuiteReport()
    t0 = time.perf_counter()
    for prog in load_corpus(corpus_dir or litmus_dir()):
        for sl in spurious_modes:
            drf = check_drf(prog, budget, sl)
            res = check_theorem1(prog, budget, sl, drf=drf)
            entry = res.to_dict()
            expect = prog.expect if sl == 0 else prog.expect_spurious
            problems = []
            if prog.drf is not None and drf.racy is not None and (not drf.racy) != prog.drf:
                problems.append(f"race check says {drf.verdict}, file declares drf {'yes' if prog.drf else 'no'}")
            if res.status == "unequal":
                problems.append("SPS misses a fine-grained bug")
            if res.status != "skipped" and not res.sps_subset:
                problems.append("SPS outcome not reachable fine-grained")
            if res.status != "skipped" and expect is not None and res.sps.classes != set(expect):
                problems.append(f"classes {sorted(res.sps.classes)} != expected {sorted(expect)}")
            if res.status == "skipped" and not (drf.racy and prog.drf is False):
                entry["note"] = "skipped: " + res.reason
            entry["problems"] = problems
            entry["verdict"] = "fail" if problems else ("skipped" if res.status == "skipped" else "pass")
            rep.programs.append(entry)
    rep.elapsed = time.perf_counter() - t0
    return rep
