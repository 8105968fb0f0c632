"""Schedule files: versioned JSON with a fixed field order.

::

    {"version": 1, "seed": 42, "strategy": "random", "params": {...},
     "targetName": "ticket_handshake", "expectedDigest": "ab12...",
     "steps": [{"t": 0}, {"t": 1}, {"wake": 2}, {"sw": [1, 3]}, ...]}

``t`` is a scheduling choice, ``wake`` the waiter a single notify removes,
``sw`` a spurious-wake directive ``[thread, resource index]``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

from ..core import SCHEDULE_VERSION, Choose, Schedule, ShadowSchedError, SpuriousWake, Wake


class ScheduleFormatError(ShadowSchedError):
    def __init__(self, message: str, offset: Optional[int] = None) -> None:
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"bad schedule file{where}: {message}")
        self.offset = offset


def step_to_json(step) -> dict:
    if isinstance(step, Choose):
        return {"t": step.thread}
    if isinstance(step, Wake):
        return {"wake": step.thread}
    if isinstance(step, SpuriousWake):
        return {"sw": [step.thread, step.resource]}
    raise TypeError(f"not a schedule step: {step!r}")


def step_from_json(obj) -> object:
    if isinstance(obj, dict) and len(obj) == 1:
        (key, val), = obj.items()
        if key in ("t", "wake") and isinstance(val, int) and not isinstance(val, bool) and val >= 0:
            return Choose(val) if key == "t" else Wake(val)
        if key == "sw" and isinstance(val, list) and len(val) == 2 and all(
                isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in val):
            return SpuriousWake(val[0], val[1])
    raise ValueError(f"bad step {obj!r}")


def dumps_schedule(s: Schedule) -> str:
    doc = {
        "version": s.version,
        "seed": s.seed,
        "strategy": s.strategy,
        "params": dict(sorted(s.params.items())),
        "targetName": s.target,
    }
    if s.expected_digest:
        doc["expectedDigest"] = s.expected_digest
    head = json.dumps(doc, separators=(", ", ": "))[:-1]
    steps = ",\n  ".join(json.dumps(step_to_json(st), separators=(",", ":")) for st in s.steps)
    return f'{head}, "steps": [\n  {steps}\n]}}\n' if steps else f'{head}, "steps": []}}\n'


def _offset_of(raw: bytes, needle: str) -> Optional[int]:
    i = raw.find(needle.encode())
    return i if i >= 0 else None


def loads_schedule(data: Union[str, bytes]) -> Schedule:
    raw = data.encode("utf-8") if isinstance(data, str) else data
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ScheduleFormatError(str(exc), exc.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScheduleFormatError(exc.msg, len(text[:exc.pos].encode("utf-8"))) from None
    if not isinstance(doc, dict):
        raise ScheduleFormatError("top level must be an object", 0)
    version = doc.get("version")
    if version != SCHEDULE_VERSION:
        raise ScheduleFormatError(f"unsupported version {version!r} (expected {SCHEDULE_VERSION})",
                                  _offset_of(raw, '"version"'))
    for key, typ in (("seed", int), ("strategy", str), ("params", dict), ("targetName", str),
                     ("steps", list)):
        if not isinstance(doc.get(key), typ):
            raise ScheduleFormatError(f"field {key!r} missing or not a {typ.__name__}",
                                      _offset_of(raw, f'"{key}"'))
    digest = doc.get("expectedDigest")
    if digest is not None and not isinstance(digest, str):
        raise ScheduleFormatError("expectedDigest must be a string", _offset_of(raw, '"expectedDigest"'))
    steps = []
    for i, obj in enumerate(doc["steps"]):
        try:
            steps.append(step_from_json(obj))
        except ValueError as exc:
            raise ScheduleFormatError(f"step {i}: {exc}", _step_offset(raw, i)) from None
    return Schedule(doc["seed"], doc["strategy"], steps, doc["params"], doc["targetName"], digest, version)


def _step_offset(raw: bytes, index: int) -> Optional[int]:
    start = raw.find(b'"steps"')
    if start < 0:
        return None
    # steps are written one per line; count step objects from the array start
    pos = raw.find(b"[", start)
    for _ in range(index + 1):
        pos = raw.find(b"{", pos + 1)
        if pos < 0:
            return None
    return pos


def save_schedule(s: Schedule, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_schedule(s))
    return path


def load_schedule(path: Union[str, Path]) -> Schedule:
    return loads_schedule(Path(path).read_bytes())
