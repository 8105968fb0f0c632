"""Brute-force oracle: a litmus interpreter with fine-grained and sync-point enumeration."""

from .bridge import dfs_litmus, litmus_target, run_litmus
from .drf import Access, DrfReport, check_drf
from .enumerate import OutcomeSet, enumerate_fine_grained, enumerate_sps
from .interp import UnboundedProgram, initial_state, interp_step
from .litmus import LitmusProgram, LitmusSyntaxError, load_corpus, load_litmus, parse_litmus
from .theorem import TheoremReport, check_theorem1

__all__ = [
    "Access",
    "DrfReport",
    "LitmusProgram",
    "LitmusSyntaxError",
    "OutcomeSet",
    "TheoremReport",
    "UnboundedProgram",
    "check_drf",
    "check_theorem1",
    "dfs_litmus",
    "enumerate_fine_grained",
    "enumerate_sps",
    "initial_state",
    "interp_step",
    "litmus_target",
    "load_corpus",
    "load_litmus",
    "parse_litmus",
    "run_litmus",
]
