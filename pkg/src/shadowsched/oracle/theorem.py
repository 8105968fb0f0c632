"""Completeness check: every bug reachable by some interleaving is reachable at sync points."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .drf import DrfReport, check_drf
from .enumerate import DEFAULT_BUDGET, OutcomeSet, enumerate_fine_grained, enumerate_sps
from .litmus import LitmusProgram


@dataclass
class TheoremReport:
    name: str
    status: str                     # "equal", "unequal" or "skipped"
    reason: str = ""
    equal: Optional[bool] = None    # fine-grained bugs are a subset of SPS outcomes
    full_equal: Optional[bool] = None
    sps_subset: Optional[bool] = None
    diff: frozenset = frozenset()
    fine: Optional[OutcomeSet] = None
    sps: Optional[OutcomeSet] = None
    drf: Optional[DrfReport] = None
    spurious_limit: int = 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "reason": self.reason,
            "equal": self.equal,
            "full_equal": self.full_equal,
            "sps_subset_of_fine": self.sps_subset,
            "diff": sorted(map(repr, self.diff)),
            "drf": self.drf.verdict if self.drf else None,
            "fine": self.fine.summary() if self.fine else None,
            "sps": self.sps.summary() if self.sps else None,
            "spurious_limit": self.spurious_limit,
        }


def check_theorem1(prog: LitmusProgram, budget: int = DEFAULT_BUDGET, spurious_limit: int = 0,
                   drf: Optional[DrfReport] = None) -> TheoremReport:
    """Compare fine-grained and SPS outcome sets of a data-race-free program."""
    rep = TheoremReport(prog.name, "skipped", spurious_limit=spurious_limit)
    rep.drf = drf if drf is not None else check_drf(prog, budget, spurious_limit)
    if rep.drf.racy is None:
        rep.reason = "race check exceeded its budget"
        return rep
    if rep.drf.racy:
        a, b = rep.drf.witness
        rep.reason = f"racy: {a} vs {b}"
        return rep
    rep.fine = enumerate_fine_grained(prog, budget, spurious_limit)
    rep.sps = enumerate_sps(prog, budget, spurious_limit)
    if rep.fine.partial or rep.sps.partial:
        rep.reason = "enumeration exceeded its budget"
        return rep
    rep.equal = rep.fine.bugs() <= rep.sps.outcomes
    rep.full_equal = rep.fine.outcomes == rep.sps.outcomes
    rep.sps_subset = rep.sps.outcomes <= rep.fine.outcomes
    rep.diff = rep.fine.outcomes ^ rep.sps.outcomes
    rep.status = "equal" if rep.equal else "unequal"
    return rep
