"""JSON-lines records, report and checkpoint files, and the table of published values.

Every integer is written as a decimal string: trajectory values outgrow any
fixed-width number type a JSON reader might map them to.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .cycles import (
    CycleRecord,
    OutcomeTag,
    canonical_cycle,
    detect_outcome,
    principal_cycle,
    stopping_time,
)
from .errors import CollatzError, SchemaMismatch
from .mapcore import Budget, MapParams, make_params
from .search import TAGS, ScanRecord, ScanReport

SCHEMA_VERSION = 1

_INT_ECHO_KEYS = {"b", "m", "from", "to", "max_steps", "max_bits", "count", "seed",
                  "b_max", "s0_max"}


def record_to_dict(rec: ScanRecord) -> dict:
    d = {
        "b": str(rec.b),
        "m": str(rec.m),
        "s0": str(rec.s0),
        "outcome": rec.outcome.value,
        "steps": str(rec.steps),
    }
    if rec.steps_to_one is not None:
        d["steps_to_one"] = str(rec.steps_to_one)
    if rec.cycle_min is not None:
        d["cycle_min"] = str(rec.cycle_min)
        d["cycle_length"] = str(rec.cycle_length)
    d["peak_bits"] = str(rec.peak_bits)
    return d


def _opt(d: dict, key: str) -> int | None:
    v = d.get(key)
    return None if v is None else int(v)


def record_from_dict(d: dict) -> ScanRecord:
    return ScanRecord(
        int(d["b"]), int(d["m"]), int(d["s0"]), OutcomeTag(d["outcome"]),
        int(d["steps"]), int(d["peak_bits"]),
        steps_to_one=_opt(d, "steps_to_one"),
        cycle_min=_opt(d, "cycle_min"),
        cycle_length=_opt(d, "cycle_length"),
    )


def write_records(sink: IO[str], records: Iterable[ScanRecord]) -> int:
    """Write one JSON object per line and flush; returns the number written."""
    n = 0
    for rec in records:
        sink.write(json.dumps(record_to_dict(rec), separators=(",", ":")))
        sink.write("\n")
        n += 1
    sink.flush()
    return n


def read_records(source: IO[str]) -> Iterator[ScanRecord]:
    for line in source:
        line = line.strip()
        if line:
            yield record_from_dict(json.loads(line))


def _echo_out(spec: dict) -> dict:
    out = {}
    for k, v in spec.items():
        if isinstance(v, bool) or v is None:
            out[k] = v
        elif isinstance(v, int):
            out[k] = str(v)
        elif isinstance(v, (list, tuple)):
            out[k] = [str(x) for x in v]
        else:
            out[k] = v
    return out


def _echo_in(spec: dict) -> dict:
    out = {}
    for k, v in spec.items():
        if isinstance(v, str) and k in _INT_ECHO_KEYS:
            out[k] = int(v)
        elif isinstance(v, list):
            out[k] = [int(x) for x in v]
        else:
            out[k] = v
    return out


def cycle_to_dict(c: CycleRecord) -> dict:
    return {
        "b": str(c.params.b),
        "m": str(c.params.m),
        "min": str(c.min_element),
        "length": str(c.length),
        "elements": [str(e) for e in c.elements],
    }


def cycle_from_dict(d: dict) -> CycleRecord:
    params = make_params(int(d["b"]), int(d["m"]))
    cyc = canonical_cycle([int(e) for e in d["elements"]], params)
    if cyc.length != int(d["length"]) or cyc.min_element != int(d["min"]):
        raise ValueError(f"inconsistent cycle entry {d}")
    return cyc


def report_to_dict(r: ScanReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "spec": _echo_out(r.spec),
        "counts": {k: str(v) for k, v in sorted(r.counts.items())},
        "skipped": str(r.skipped),
        "cycles": [cycle_to_dict(r.cycles[k]) for k in sorted(r.cycles)],
        "max_stopping_time": None if r.max_stopping_time is None else str(r.max_stopping_time),
        "max_stopping_start": None if r.max_stopping_start is None else str(r.max_stopping_start),
    }


def _check_version(d: dict) -> None:
    v = d.get("schema_version")
    if v != SCHEMA_VERSION:
        raise SchemaMismatch(f"schema_version {v!r}, expected {SCHEMA_VERSION}")


def report_from_dict(d: dict) -> ScanReport:
    _check_version(d)
    cycles = [cycle_from_dict(c) for c in d.get("cycles", [])]
    return ScanReport(
        spec=_echo_in(d["spec"]),
        counts={k: int(d["counts"].get(k, "0")) for k in TAGS},
        skipped=int(d.get("skipped", "0")),
        cycles={c.key: c for c in sorted(cycles, key=lambda c: c.key)},
        max_stopping_time=_opt(d, "max_stopping_time"),
        max_stopping_start=_opt(d, "max_stopping_start"),
    )


def dumps_report(r: ScanReport) -> str:
    return json.dumps(report_to_dict(r), indent=2, sort_keys=True) + "\n"


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_report(path, r: ScanReport) -> None:
    _atomic_write(path, dumps_report(r))


def load_report(path) -> ScanReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


@dataclass
class Checkpoint:
    spec: dict
    next_start: int
    report: ScanReport
    schema_version: int = SCHEMA_VERSION


def checkpoint_to_dict(c: Checkpoint) -> dict:
    return {
        "schema_version": c.schema_version,
        "spec": _echo_out(c.spec),
        "next_start": str(c.next_start),
        "report": report_to_dict(c.report),
    }


def checkpoint_from_dict(d: dict) -> Checkpoint:
    _check_version(d)
    return Checkpoint(_echo_in(d["spec"]), int(d["next_start"]), report_from_dict(d["report"]))


def save_checkpoint(path, c: Checkpoint) -> None:
    """Write a checkpoint via temp file and rename."""
    _atomic_write(path, json.dumps(checkpoint_to_dict(c), indent=2, sort_keys=True) + "\n")


def load_checkpoint(path) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        return checkpoint_from_dict(json.load(fh))


# --- printed data --------------------------------------------------------

@dataclass(frozen=True)
class PaperFixture:
    id: str
    params: MapParams
    s0: int
    kind: str  # "cycle", "principal" or "stopping_time"
    expected: tuple | int
    long_running: bool = False
    printed: tuple | int | None = None


# Listings exactly as printed, closing repeat dropped.
_PRINTED_CYCLES = {
    "b3m1": (3, 1, 5, [7, 30, 10, 42, 14, 57, 19, 78, 26, 105, 35, 141, 47, 189, 63, 21]),
    "b4m1": (4, 1, 11, [23, 116, 29, 148, 37, 188, 47, 236, 59, 296, 74, 372, 93, 468,
                        117, 588, 147, 736, 184, 45, 232, 58, 292, 73, 368, 92]),
    "b6m1": (6, 1, 7, [23, 162, 27, 192, 32, 228, 38, 270, 45, 318, 53, 372,
                       62, 438, 73, 516, 85, 606, 101, 708, 118, 828, 138]),
    "b9m1": (9, 1, 31, [35, 351, 39, 396, 44, 441, 49, 495, 55, 558, 62, 621,
                        69, 693, 77, 774, 86, 864, 96, 963, 107, 1071, 119,
                        1197, 133, 1332, 148, 1485, 165, 1656, 184, 1845,
                        205, 2052, 228, 2286, 254, 2547, 283, 2835, 315]),
    "b2m2": (2, 2, 23, [37, 188, 94, 47, 236, 118, 59, 296, 148, 74]),
}

_PRINTED_PRINCIPAL = {
    "hotpo": (2, 1, [1, 4, 2]),
    "b5m3": (5, 3, [1, 250, 50, 10, 2, 375, 75, 15, 3, 500, 100, 20, 4, 625, 125, 25, 5]),
}

# Printed entries that break closure under the map, with the value the map
# actually produces at that position.
ERRATA = {
    "b4m1": {45: 46},
    "b6m1": {85: 86},
}

STOPPING_TIME_DATUM = ("b10m9", 10, 9, 10**9 + 1, 5000000829)


def _rotate_min_first(values: list[int]) -> tuple[int, ...]:
    i = values.index(min(values))
    return tuple(values[i:] + values[:i])


def paper_fixtures() -> list[PaperFixture]:
    out = []
    for fid, (b, m, s0, vals) in _PRINTED_CYCLES.items():
        fix = ERRATA.get(fid, {})
        corrected = [fix.get(v, v) for v in vals]
        out.append(PaperFixture(fid, make_params(b, m), s0, "cycle",
                                _rotate_min_first(corrected),
                                printed=_rotate_min_first(vals)))
    for fid, (b, m, vals) in _PRINTED_PRINCIPAL.items():
        rot = _rotate_min_first(vals)
        out.append(PaperFixture(fid, make_params(b, m), 1, "principal", rot, printed=rot))
    fid, b, m, s0, t = STOPPING_TIME_DATUM
    out.append(PaperFixture(fid, make_params(b, m), s0, "stopping_time", t,
                            long_running=True, printed=t))
    return out


def verify_fixture(fx: PaperFixture, budget: Budget | None = None) -> tuple[bool, object]:
    """Recompute a fixture; returns ``(matches, computed_value)``."""
    try:
        if fx.kind == "principal":
            got = principal_cycle(fx.params).elements
        elif fx.kind == "cycle":
            out = detect_outcome(fx.params, fx.s0, budget)
            got = out.cycle.elements if out.cycle is not None else out.tag.value
        else:
            got = stopping_time(fx.params, fx.s0, budget or Budget(max_steps=10**11))
    except CollatzError as exc:
        return False, exc
    return got == fx.expected, got
