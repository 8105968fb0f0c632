from __future__ import annotations

from typing import Sequence

import pytest

from shadowsched.core import Choose
from shadowsched.engine import Engine, Execution
from shadowsched.harness.corpus import litmus_dir
from shadowsched.oracle import load_litmus
from shadowsched.strategies import RandomStrategy, Strategy


class ScriptedStrategy(Strategy):
    """Takes ``prefs[i]`` at step i when it is enabled, else the lowest enabled thread."""

    name = "scripted"

    def __init__(self, prefs: Sequence[int] = ()) -> None:
        super().__init__(0)
        self.prefs = list(prefs)
        self.seen: list = []

    def choose(self, view):
        self.seen.append(view.enabled.threads)
        i = len(self.seen) - 1
        want = self.prefs[i] if i < len(self.prefs) else None
        if want in view.enabled.threads:
            return Choose(want)
        return Choose(view.enabled.threads[0])


def run(fn, strategy=None, **kw) -> Execution:
    return Engine(strategy or RandomStrategy(0), **kw).run(fn)


def litmus(name: str):
    return load_litmus(litmus_dir() / f"{name}.litmus")


@pytest.fixture
def scripted():
    return ScriptedStrategy


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
