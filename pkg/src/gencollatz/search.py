"""Range, random and conjecture scans for cycles that avoid 1."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .cycles import (
    _BUDGET,
    _CYCLE,
    _DIP,
    _ONE,
    CycleRecord,
    OutcomeTag,
    TrajectoryOutcome,
    _cycle_from,
    _tail_length,
    _walk,
    detect_outcome,
)
from .errors import InvalidParams, SpecMismatch
from .mapcore import Budget, MapParams, make_params

log = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 4096
TAGS = tuple(t.value for t in OutcomeTag)
_RANGE_KEYS = ("from", "to")


@dataclass(frozen=True)
class ScanSpec:
    params: MapParams
    from_start: int
    to_start: int
    skip_trivial: bool | None = None
    budget: Budget = field(default_factory=Budget)
    workers: int = 1
    fail_fast: bool = False

    def __post_init__(self):
        if self.from_start < 1:
            raise InvalidParams(f"from_start must be >= 1, got {self.from_start}")
        if self.to_start <= self.from_start:
            raise InvalidParams(
                f"empty range [{self.from_start}, {self.to_start})"
            )
        if self.workers < 1:
            raise InvalidParams(f"workers must be >= 1, got {self.workers}")
        if self.skip_trivial is None:
            # Trivial starts are foregone conclusions; skip them when scanning from 1.
            object.__setattr__(self, "skip_trivial", self.from_start == 1)

    def echo(self) -> dict:
        return {
            "kind": "range",
            "b": self.params.b,
            "m": self.params.m,
            "from": self.from_start,
            "to": self.to_start,
            "skip_trivial": self.skip_trivial,
            "fail_fast": self.fail_fast,
            **budget_echo(self.budget),
        }


def budget_echo(budget: Budget) -> dict:
    return {"max_steps": budget.max_steps, "max_bits": budget.max_bits}


@dataclass(frozen=True)
class ScanRecord:
    b: int
    m: int
    s0: int
    outcome: OutcomeTag
    steps: int
    peak_bits: int
    steps_to_one: int | None = None
    cycle_min: int | None = None
    cycle_length: int | None = None

    def __post_init__(self):
        reached = self.outcome is OutcomeTag.REACHED_ONE
        cycled = self.outcome is OutcomeTag.ENTERED_CYCLE
        if (self.steps_to_one is not None) != reached:
            raise ValueError("steps_to_one is present exactly for reached_one records")
        if (self.cycle_min is not None) != cycled or (self.cycle_length is not None) != cycled:
            raise ValueError("cycle fields are present exactly for entered_cycle records")

    @classmethod
    def from_outcome(cls, params: MapParams, s0: int, out: TrajectoryOutcome) -> "ScanRecord":
        cyc = out.cycle
        return cls(
            params.b, params.m, s0, out.tag, out.steps_consumed, out.peak_bits,
            steps_to_one=out.steps_to_one,
            cycle_min=cyc.min_element if cyc is not None else None,
            cycle_length=cyc.length if cyc is not None else None,
        )


@dataclass
class ScanReport:
    """Aggregated scan result.

    ``spec`` echoes everything that determines the result (worker count and
    memoization do not).  ``cycles`` maps ``(b, m, min_element)`` to the
    canonical cycle.  ``wall_time`` is informational and excluded from
    equality and from serialized reports.
    """

    spec: dict
    counts: dict = field(default_factory=lambda: dict.fromkeys(TAGS, 0))
    skipped: int = 0
    cycles: dict = field(default_factory=dict)
    max_stopping_time: int | None = None
    max_stopping_start: int | None = None
    wall_time: float = field(default=0.0, compare=False)

    @classmethod
    def empty(cls, spec: dict) -> "ScanReport":
        spec = dict(spec)
        for k in _RANGE_KEYS:
            if k in spec:
                spec[k] = None
        return cls(spec)

    @property
    def scanned(self) -> int:
        return sum(self.counts.values())

    @property
    def counterexamples(self) -> list[CycleRecord]:
        return [self.cycles[k] for k in sorted(self.cycles)]

    def add(self, rec: ScanRecord, cycle: CycleRecord | None = None) -> None:
        self.counts[rec.outcome.value] += 1
        if rec.outcome is OutcomeTag.REACHED_ONE:
            self._offer_max(rec.steps_to_one, rec.s0)
        elif rec.outcome is OutcomeTag.ENTERED_CYCLE and cycle is not None:
            self.cycles.setdefault(cycle.key, cycle)

    def _offer_max(self, t: int | None, s0: int | None) -> None:
        if t is None:
            return
        if (self.max_stopping_time is None or t > self.max_stopping_time
                or (t == self.max_stopping_time and s0 < self.max_stopping_start)):
            self.max_stopping_time = t
            self.max_stopping_start = s0

    def absorb(self, other: "ScanReport") -> None:
        for k, v in other.counts.items():
            self.counts[k] = self.counts.get(k, 0) + v
        self.skipped += other.skipped
        for k, c in other.cycles.items():
            self.cycles.setdefault(k, c)
        self._offer_max(other.max_stopping_time, other.max_stopping_start)
        self.wall_time += other.wall_time


def _family(spec: dict) -> dict:
    return {k: v for k, v in spec.items() if k not in _RANGE_KEYS}


def merge_reports(a: ScanReport, b: ScanReport) -> ScanReport:
    """Combine two reports of the same scan family (associative, commutative)."""
    if _family(a.spec) != _family(b.spec):
        raise SpecMismatch(f"cannot merge {a.spec} with {b.spec}")
    spec = dict(a.spec)
    for k, pick in (("from", min), ("to", max)):
        if k in spec:
            vals = [v for v in (a.spec.get(k), b.spec.get(k)) if v is not None]
            spec[k] = pick(vals) if vals else None
    out = ScanReport(spec)
    out.absorb(a)
    out.absorb(b)
    out.cycles = {k: out.cycles[k] for k in sorted(out.cycles)}
    return out


def is_trivial_start(params: MapParams, s0: int) -> bool:
    b = params.b
    while s0 % b == 0:
        s0 //= b
    return s0 < params.b_pow_m


class OutcomeCache:
    """Outcome classes of already-resolved values, for the frontier trick.

    A start is followed only until its trajectory first drops below the
    start; the remainder is inherited from the value it dropped to, whose
    class (reached 1 with a known stopping time, or a specific cycle) is
    resolved on demand and remembered.  Inherited results are exact: stopping
    times and peaks compose additively and by max, and cycle tails are
    recounted directly.  A start whose continuation ran out of budget is
    re-run from scratch so budget outcomes match an uncached run.

    With ``memoize=False`` every start is walked in full.
    """

    def __init__(self, params: MapParams, budget: Budget, memoize: bool = True,
                 accelerate: bool = True):
        self.params = params
        self.budget = budget
        self.memoize = memoize
        self.accelerate = accelerate
        self._memo: dict[int, tuple] = {}
        self._cycles: dict[int, CycleRecord] = {}

    def __len__(self):
        return len(self._memo)

    def _cycle_containing(self, value: int) -> CycleRecord:
        cyc = self._cycles.get(value)
        if cyc is None:
            cyc = _cycle_from(self.params, value)
            if not cyc.verify():
                raise AssertionError(f"cycle through {value} failed re-verification")
            for e in cyc.elements:
                self._cycles[e] = cyc
        return cyc

    def _final(self, x: int, raw) -> tuple:
        kind = raw[0]
        if kind == _ONE:
            return (_ONE, raw[1], raw[2].bit_length(), None)
        if kind == _CYCLE:
            cyc = self._cycle_containing(raw[1])
            mu = _tail_length(self.params, x, set(cyc.elements))
            return (_CYCLE, mu + cyc.length, raw[3].bit_length(), cyc)
        return (_BUDGET, raw[1], raw[2].bit_length(), None)

    def _fresh(self, x: int) -> tuple:
        return self._final(x, _walk(self.params, x, self.budget, accelerate=self.accelerate))

    def _compose(self, x: int, raw, below: tuple) -> tuple:
        _, _, k, path_peak = raw
        peak_bits = max(path_peak.bit_length(), below[2])
        if below[0] == _ONE:
            total = k + below[1]
            if total <= self.budget.max_steps:
                return (_ONE, total, peak_bits, None)
            return self._fresh(x)
        if below[0] == _CYCLE:
            cyc = below[3]
            mu = _tail_length(self.params, x, set(cyc.elements))
            return (_CYCLE, mu + cyc.length, peak_bits, cyc)
        return self._fresh(x)

    def resolve(self, s0: int) -> tuple:
        """Return ``(kind, steps, peak_bits, cycle_or_None)`` for ``s0``."""
        if not self.memoize:
            return self._fresh(s0)
        memo = self._memo
        chain = []
        x = s0
        while True:
            hit = memo.get(x)
            if hit is not None:
                res = hit
                break
            raw = _walk(self.params, x, self.budget, floor=x, accelerate=self.accelerate)
            if raw[0] != _DIP:
                res = self._final(x, raw)
                memo[x] = res
                break
            chain.append((x, raw))
            x = raw[1]
        for x, raw in reversed(chain):
            res = self._compose(x, raw, res)
            memo[x] = res
        return res

    def outcome(self, s0: int) -> TrajectoryOutcome:
        kind, steps, peak_bits, cyc = self.resolve(s0)
        if kind == _ONE:
            return TrajectoryOutcome(OutcomeTag.REACHED_ONE, steps, peak_bits, steps_to_one=steps)
        if kind == _CYCLE:
            return TrajectoryOutcome(OutcomeTag.ENTERED_CYCLE, steps, peak_bits, cycle=cyc)
        return TrajectoryOutcome(OutcomeTag.BUDGET_EXCEEDED, steps, peak_bits)


_KIND_TAG = {_ONE: OutcomeTag.REACHED_ONE, _CYCLE: OutcomeTag.ENTERED_CYCLE,
             _BUDGET: OutcomeTag.BUDGET_EXCEEDED}


@dataclass
class _BlockResult:
    report: ScanReport
    records: list | None
    hit: int | None


def _scan_block(b, m, lo, hi, skip_trivial, max_steps, max_bits, memoize,
                fail_fast, want_records, cache=None) -> _BlockResult:
    params = make_params(b, m)
    if cache is None:
        cache = OutcomeCache(params, Budget(max_steps, max_bits), memoize)
    report = ScanReport({})
    counts = dict.fromkeys((_ONE, _CYCLE, _BUDGET), 0)
    records = [] if want_records else None
    bm = params.b_pow_m
    resolve = cache.resolve
    best_t = -1
    best_s = None
    hit = None
    for s in range(lo, hi):
        if skip_trivial:
            r = s
            while r % b == 0:
                r //= b
            if r < bm:
                report.skipped += 1
                continue
        kind, steps, peak_bits, cyc = resolve(s)
        counts[kind] += 1
        if kind == _ONE:
            if steps > best_t:
                best_t, best_s = steps, s
        elif kind == _CYCLE:
            report.cycles.setdefault(cyc.key, cyc)
        if records is not None:
            records.append(ScanRecord(
                b, m, s, _KIND_TAG[kind], steps, peak_bits,
                steps_to_one=steps if kind == _ONE else None,
                cycle_min=cyc.min_element if cyc is not None else None,
                cycle_length=cyc.length if cyc is not None else None,
            ))
        if fail_fast and kind == _CYCLE:
            hit = s
            break
    for kind, n in counts.items():
        report.counts[_KIND_TAG[kind].value] = n
    if best_s is not None:
        report._offer_max(best_t, best_s)
    return _BlockResult(report, records, hit)


def _block_args(spec: ScanSpec, lo: int, hi: int, memoize: bool, want_records: bool):
    return (spec.params.b, spec.params.m, lo, hi, spec.skip_trivial,
            spec.budget.max_steps, spec.budget.max_bits, memoize, spec.fail_fast,
            want_records)


def _run_blocks(args_list, workers: int, cache=None):
    """Yield block results in submission order.

    In-process runs share ``cache`` across blocks; worker processes start
    each block with an empty one.  Results are the same either way.
    """
    if workers <= 1 or len(args_list) <= 1:
        for args in args_list:
            yield _scan_block(*args, cache=cache)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_scan_block, *args) for args in args_list]
        try:
            for fut in futures:
                yield fut.result()
        finally:
            for fut in futures:
                fut.cancel()


def scan_range(spec: ScanSpec, *, sink: Callable[[Iterable[ScanRecord]], object] | None = None,
               memoize: bool = True, block_size: int = DEFAULT_BLOCK_SIZE,
               checkpoint_path=None, resume=None, max_blocks: int | None = None) -> ScanReport:
    """Classify every start in ``[from_start, to_start)``.

    The range is cut into fixed blocks aligned on ``from_start``; results are
    merged in block order, so the report does not depend on ``workers``.
    ``sink`` receives each block's records in order.  With
    ``checkpoint_path`` a checkpoint is written after every merged wave of
    blocks; ``resume`` continues from a loaded checkpoint.  ``max_blocks``
    stops early after that many blocks (the report is then partial).
    """
    from .persistence import Checkpoint, save_checkpoint

    echo = spec.echo()
    if resume is not None:
        if resume.spec != echo:
            raise SpecMismatch("checkpoint was written for a different scan")
        report = resume.report
        start = resume.next_start
    else:
        report = ScanReport(dict(echo))
        start = spec.from_start
    t0 = time.perf_counter()
    bounds = []
    lo = start
    while lo < spec.to_start:
        hi = min(lo + block_size, spec.to_start)
        bounds.append((lo, hi))
        lo = hi
    if max_blocks is not None:
        bounds = bounds[:max_blocks]
    wave = max(1, spec.workers) * 4 if spec.workers > 1 else 1
    shared = OutcomeCache(spec.params, spec.budget, memoize) if spec.workers <= 1 else None
    next_start = start
    done = False
    for w in range(0, len(bounds), wave):
        chunk = bounds[w:w + wave]
        args = [_block_args(spec, lo, hi, memoize, sink is not None) for lo, hi in chunk]
        for (lo, hi), res in zip(chunk, _run_blocks(args, spec.workers, shared)):
            report.absorb(res.report)
            if sink is not None:
                sink(res.records)
            next_start = hi
            if res.hit is not None:
                next_start = res.hit + 1
                done = True
                break
        report.cycles = {k: report.cycles[k] for k in sorted(report.cycles)}
        report.wall_time += time.perf_counter() - t0
        t0 = time.perf_counter()
        if checkpoint_path is not None:
            save_checkpoint(checkpoint_path, Checkpoint(echo, next_start, report))
        log.debug("scanned up to %d: %s", next_start, report.counts)
        if done:
            break
    return report


class SplitMix64:
    """The splitmix64 generator (Steele, Lea and Flood increment and mixer)."""

    GAMMA = 0x9E3779B97F4A7C15
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next(self) -> int:
        self.state = (self.state + self.GAMMA) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def below(self, span: int) -> int:
        """Uniform integer in [0, span) by rejection sampling."""
        if span < 1:
            raise InvalidParams("empty range")
        words = max(1, (span.bit_length() + 63) // 64)
        total = 1 << (64 * words)
        limit = total - total % span
        while True:
            x = 0
            for _ in range(words):
                x = (x << 64) | self.next()
            if x < limit:
                return x % span

    def between(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (inclusive)."""
        if hi < lo:
            raise InvalidParams(f"empty range [{lo}, {hi}]")
        return lo + self.below(hi - lo + 1)


DEFAULT_S0_RANGE = (1, 10**6)


def draw_triples(b_range, m_range, count: int, seed: int, s0_range=DEFAULT_S0_RANGE):
    rng = SplitMix64(seed)
    out = []
    for _ in range(count):
        b = rng.between(*b_range)
        m = rng.between(*m_range)
        s0 = rng.between(*s0_range)
        out.append((b, m, s0))
    return out


def _random_block(triples, max_steps, max_bits):
    budget = Budget(max_steps, max_bits)
    report = ScanReport({})
    for b, m, s0 in triples:
        params = make_params(b, m)
        out = detect_outcome(params, s0, budget)
        if out.cycle is not None and not out.cycle.verify():
            raise AssertionError(f"cycle from {(b, m, s0)} failed re-verification")
        report.add(ScanRecord.from_outcome(params, s0, out), out.cycle)
    return report


def random_scan(b_range, m_range, count: int, seed: int, budget: Budget | None = None,
                s0_range=DEFAULT_S0_RANGE, workers: int = 1) -> ScanReport:
    """Classify ``count`` random (b, m, s0) triples drawn from a seeded splitmix64 stream.

    Ranges are inclusive ``(lo, hi)`` pairs.  Each triple consumes draws for
    b, m and s0 in that order.
    """
    budget = budget or Budget()
    b_range, m_range, s0_range = (tuple(int(x) for x in r) for r in (b_range, m_range, s0_range))
    for name, (lo, hi), least in (("b", b_range, 2), ("m", m_range, 1), ("s0", s0_range, 1)):
        if hi < lo:
            raise InvalidParams(f"empty {name} range [{lo}, {hi}]")
        if lo < least:
            raise InvalidParams(f"{name} range must start at >= {least}")
    if count < 1:
        raise InvalidParams(f"count must be >= 1, got {count}")
    echo = {
        "kind": "random",
        "b_range": list(b_range),
        "m_range": list(m_range),
        "s0_range": list(s0_range),
        "count": count,
        "seed": seed,
        **budget_echo(budget),
    }
    t0 = time.perf_counter()
    triples = draw_triples(b_range, m_range, count, seed, s0_range)
    report = ScanReport(echo)
    size = max(1, -(-count // (workers * 4))) if workers > 1 else count
    chunks = [triples[i:i + size] for i in range(0, count, size)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_random_block, chunks,
                                  [budget.max_steps] * len(chunks), [budget.max_bits] * len(chunks)))
    else:
        parts = [_random_block(c, budget.max_steps, budget.max_bits) for c in chunks]
    for p in parts:
        report.absorb(p)
    report.cycles = {k: report.cycles[k] for k in sorted(report.cycles)}
    report.wall_time = time.perf_counter() - t0
    return report


def conjecture_scan(b_max: int, s0_max: int, budget: Budget | None = None, workers: int = 1,
                    skip_trivial: bool = True, memoize: bool = True, sink=None) -> ScanReport:
    """Scan m = b - 1 for every b in [2, b_max] over starts [1, s0_max).

    Any cycle in the result is a counter-example to convergence for those
    maps; it is reported, not raised.
    """
    if b_max < 2:
        raise InvalidParams(f"b_max must be >= 2, got {b_max}")
    if s0_max < 2:
        raise InvalidParams(f"s0_max must be >= 2, got {s0_max}")
    budget = budget or Budget()
    echo = {"kind": "conjecture", "b_max": b_max, "s0_max": s0_max,
            "skip_trivial": skip_trivial, **budget_echo(budget)}
    report = ScanReport(echo)
    for b in range(2, b_max + 1):
        spec = ScanSpec(make_params(b, b - 1), 1, s0_max, skip_trivial, budget, workers)
        part = scan_range(spec, memoize=memoize, sink=sink)
        report.absorb(part)
        if part.cycles:
            log.warning("counter-example for b=%d, m=%d: %s", b, b - 1,
                        [c.min_element for c in part.counterexamples])
    report.cycles = {k: report.cycles[k] for k in sorted(report.cycles)}
    return report

