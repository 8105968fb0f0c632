"""Command line: ``shadowsched run | replay | oracle``.

Exit codes: 0 nothing found, 1 bug found (or oracle check failed), 2 tool error.

Every option can also come from an environment variable named
``SHADOWSCHED_<OPTION>`` (upper case, dashes as underscores), e.g.
``SHADOWSCHED_SEED=7`` or ``SHADOWSCHED_SPURIOUS=1``.  Flags on the command
line win over the environment.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from ..core import ShadowSchedError
from .corpus import TARGETS
from .runner import RunConfig, run_oracle_suite, run_replay, run_search

ENV_PREFIX = "SHADOWSCHED_"
EXIT_OK, EXIT_BUG, EXIT_ERROR = 0, 1, 2

_TRUE = {"1", "true", "yes", "on"}


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _env_int(name: str, default=None):
    v = _env(name)
    return default if v is None else int(v, 0)


def _env_flag(name: str) -> bool:
    return (_env(name) or "").strip().lower() in _TRUE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shadowsched", description="Controlled concurrency testing.")
    p.add_argument("-v", "--verbose", action="store_true", default=_env_flag("verbose"))
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="search a target for bugs")
    run.add_argument("--target", default=_env("target"), required=_env("target") is None,
                     help=f"registered target ({', '.join(sorted(TARGETS))}) or litmus:NAME")
    run.add_argument("--strategy", choices=["random", "pct", "pos", "dfs"], default=_env("strategy", "random"))
    run.add_argument("--depth", type=int, default=_env_int("depth"), help="PCT change points (default 3)")
    run.add_argument("--horizon", type=int, default=_env_int("horizon"),
                     help="PCT step range (default: calibrated from one random run)")
    run.add_argument("--seed", type=lambda s: int(s, 0), default=_env_int("seed", 0))
    budget = run.add_mutually_exclusive_group()
    budget.add_argument("--iters", type=int, default=None)
    budget.add_argument("--time", type=float, default=None, help="time budget in seconds")
    run.add_argument("--max-steps", type=int, default=_env_int("max_steps", 10_000))
    run.add_argument("--spurious", action="store_true", default=_env_flag("spurious"))
    run.add_argument("--keep-going", action="store_true", default=_env_flag("keep_going"))
    run.add_argument("--jobs", type=int, default=_env_int("jobs", 1))
    run.add_argument("--out", default=_env("out"), required=_env("out") is None,
                     help="directory for failing schedules")
    run.add_argument("--json", action="store_true", help="print the report as JSON")

    rep = sub.add_parser("replay", help="replay a schedule file")
    rep.add_argument("--target", default=_env("target"), required=_env("target") is None)
    rep.add_argument("--schedule", default=_env("schedule"), required=_env("schedule") is None)

    orc = sub.add_parser("oracle", help="run the completeness oracle over a litmus corpus")
    orc.add_argument("--corpus", default=_env("corpus"), help="directory of .litmus files (default: bundled)")
    orc.add_argument("--budget", type=int, default=_env_int("budget", 2_000_000), help="state budget")
    orc.add_argument("--no-spurious", action="store_true", help="skip the spurious-wake variant")
    orc.add_argument("--json", action="store_true")
    return p


def _cmd_run(args) -> int:
    iters, budget = args.iters, args.time
    if iters is None and budget is None:
        budget = float(_env("time")) if _env("time") else None
        iters = _env_int("iters", None if budget else 1000)
    cfg = RunConfig(strategy=args.strategy, seed=args.seed, iterations=iters, time_budget=budget,
                    max_steps=args.max_steps, pct_depth=args.depth if args.strategy == "pct" else None,
                    pct_horizon=args.horizon, spurious=args.spurious, jobs=args.jobs,
                    out_dir=args.out, keep_going=args.keep_going)
    report = run_search(args.target, cfg)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, default=str))
    else:
        counts = ", ".join(f"{k}={v}" for k, v in sorted(report.counts().items()))
        print(f"{report.target} [{report.strategy}] {report.iterations} executions, "
              f"{report.execs_per_second:.0f}/s: {counts}")
        if report.params:
            print(f"  params: {report.params}")
        f = report.first_failure
        if f:
            print(f"  first failure at iteration {f.iteration} (seed {f.seed}): {f.outcome}")
            print(f"  schedule: {f.schedule_path}")
            print(f"  digest:   {f.digest}")
        for e in report.validation_errors[:10]:
            print(f"  trace check: {e}")
    if report.validation_errors:
        return EXIT_ERROR
    return EXIT_BUG if report.found_bug else EXIT_OK


def _cmd_replay(args) -> int:
    res = run_replay(args.target, args.schedule)
    ex = res.execution
    print(f"outcome: {ex.outcome}")
    print(f"digest:  {res.trace.digest}" + ("" if res.digest_matches is None else " (matches)"))
    return EXIT_BUG if ex.outcome.is_bug else EXIT_OK


def _cmd_oracle(args) -> int:
    rep = run_oracle_suite(args.corpus, args.budget, (0,) if args.no_spurious else (0, 1))
    if args.json:
        print(rep.to_json())
    else:
        for p in rep.programs:
            fine, sps = p["fine"], p["sps"]
            counts = f"fine={fine['schedules']} sps={sps['schedules']}" if fine and sps else p.get("note", "")
            print(f"{p['verdict']:7} {p['name']:18} spurious={p['spurious_limit']} drf={p['drf']:7} "
                  f"{p['status']:8} {counts}")
            for problem in p["problems"]:
                print(f"        {problem}")
        print(f"{len(rep.programs)} checks, {len(rep.failures)} failed, {rep.elapsed:.1f}s")
    return EXIT_OK if rep.ok else EXIT_BUG


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"run": _cmd_run, "replay": _cmd_replay, "oracle": _cmd_oracle}[args.command](args)
    except (ShadowSchedError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
