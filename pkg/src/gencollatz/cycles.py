"""Trajectory classification, limit cycles, trivial starts and stopping times."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .errors import (
    BudgetExceeded,
    EmptyCycle,
    NonConvergent,
    NotClosed,
    TooLarge,
)
from .mapcore import Budget, MapParams, _check_positive, step, valuation

PROPOSITION_GUARD = 10**8


class OutcomeTag(enum.Enum):
    REACHED_ONE = "reached_one"
    ENTERED_CYCLE = "entered_cycle"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class CycleRecord:
    params: MapParams
    elements: tuple[int, ...]
    length: int = field(init=False)
    min_element: int = field(init=False)
    is_principal: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "length", len(self.elements))
        object.__setattr__(self, "min_element", self.elements[0])
        object.__setattr__(self, "is_principal", self.elements[0] == 1)

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.params.b, self.params.m, self.min_element)

    def verify(self) -> bool:
        """Re-traverse the cycle under the map."""
        els = self.elements
        n = len(els)
        return all(step(self.params, els[i]) == els[(i + 1) % n] for i in range(n))


@dataclass(frozen=True)
class TrajectoryOutcome:
    """Terminal classification of one trajectory.

    ``steps_consumed`` is the stopping time for ``REACHED_ONE``, the index of
    the first repeated value (tail length plus period) for ``ENTERED_CYCLE``,
    and the index at which the budget tripped for ``BUDGET_EXCEEDED``.
    ``peak_bits`` is the bit length of the largest value seen over those steps.
    """

    tag: OutcomeTag
    steps_consumed: int
    peak_bits: int
    steps_to_one: int | None = None
    cycle: CycleRecord | None = None


class StartKind(enum.Enum):
    TRIVIAL = "trivial"
    NON_TRIVIAL = "non_trivial"


@dataclass(frozen=True)
class StartClass:
    tag: StartKind
    s: int | None = None
    N: int | None = None

    @property
    def trivial(self) -> bool:
        return self.tag is StartKind.TRIVIAL


def canonical_cycle(values, params: MapParams) -> CycleRecord:
    """Rotate a cycle listing so its minimum comes first, checking closure."""
    values = [int(v) for v in values]
    if not values:
        raise EmptyCycle("a cycle needs at least one element")
    if len(set(values)) != len(values):
        raise NotClosed("cycle listing repeats a value within one period")
    n = len(values)
    for i in range(n):
        if step(params, values[i]) != values[(i + 1) % n]:
            raise NotClosed(
                f"f({values[i]}) = {step(params, values[i])}, expected {values[(i + 1) % n]}"
            )
    i = values.index(min(values))
    return CycleRecord(params, tuple(values[i:] + values[:i]))


def _cycle_from(params: MapParams, start: int) -> CycleRecord:
    els = [start]
    n = step(params, start)
    while n != start:
        els.append(n)
        n = step(params, n)
    return canonical_cycle(els, params)


def principal_cycle(params: MapParams) -> CycleRecord:
    """The cycle through 1, generated by simulation."""
    return _cycle_from(params, 1)


def principal_cycle_pattern(params: MapParams) -> list[int]:
    """Closed-form listing 1, (2b^m, ..., 2b), 2, (3b^m, ..., 3b), 3, ..., b."""
    b, m = params.b, params.m
    out = [1]
    for k in range(2, b + 1):
        out.extend(k * b**j for j in range(m, 0, -1))
        out.append(k)
    return out


def classify_start(params: MapParams, s0: int) -> StartClass:
    _check_positive(s0)
    N, s = valuation(s0, params.b)
    if s < params.b_pow_m:
        return StartClass(StartKind.TRIVIAL, s, N)
    return StartClass(StartKind.NON_TRIVIAL)


# Raw engine results, kept as plain tuples on the hot path.
_ONE, _CYCLE, _BUDGET, _DIP = 0, 1, 2, 3


def _walk(params: MapParams, s0: int, budget: Budget, floor: int | None = None,
          accelerate: bool = True):
    """Follow the trajectory of ``s0`` over macro-steps with Brent cycle finding.

    Returns one of
      (_ONE, steps, peak)
      (_CYCLE, value_on_cycle, steps, peak)
      (_BUDGET, steps, peak)
      (_DIP, value, steps, peak)   only when ``floor`` is given
    where ``steps`` counts elementary map applications and ``peak`` is the
    largest elementary value seen.
    """
    b = params.b
    m = params.m
    bm = params.b_pow_m
    pure_cost = m + 1
    max_steps = budget.max_steps
    limit = 1 << budget.max_bits
    peak = s0
    if s0 >= limit:
        return (_BUDGET, 0, peak)
    steps = 0
    n = s0
    if n % b == 0:
        v, n = valuation(n, b)
        if v > max_steps:
            return (_BUDGET, max_steps, peak)
        steps = v
    if n == 1:
        return (_ONE, steps, peak)
    if floor is not None and n < floor:
        return (_DIP, n, steps, peak)

    tortoise = n
    hare = n
    power = 1
    lam = 0
    # Runs worth skipping need q = hare // b^m well below b^m.
    fast_zone = bm * bm if accelerate else 0
    while True:
        if lam == power:
            tortoise = hare
            power <<= 1
            lam = 0
        if hare < fast_zone:
            q = hare // bm
            d = q + 1
            g = gcd(d, b)
            if g > 1 and hare % g:
                # hare + k*d is never divisible by b: skip the clean part of
                # the run in closed form and leave the last macro-step to the
                # general path below.
                run = ((q + 1) * bm - 1 - hare) // d + 1
                e = min(run, power - lam)
                room = (max_steps - steps) // pure_cost + 1
                if room < e:
                    e = room
                lo = -(-limit // bm)
                if hare + e * d >= lo:
                    e = min(e, max(1, -(-(lo - hare) // d)))
                if tortoise > hare:
                    gap = tortoise - hare
                    if gap % d == 0 and gap // d < e:
                        e = gap // d
                if e > 1:
                    hare += (e - 1) * d
                    steps += (e - 1) * pure_cost
                    lam += e - 1
                    if bm * hare > peak:
                        peak = bm * hare
        t = hare + 1 + hare // bm
        big = bm * t
        if steps >= max_steps:
            return (_BUDGET, max_steps, peak)
        if big > peak:
            peak = big
        if big >= limit:
            return (_BUDGET, steps + 1, peak)
        cost = pure_cost
        if t % b == 0:
            t //= b
            cost += 1
            while t % b == 0:
                if cost - pure_cost > 64:
                    v, t = valuation(t, b)
                    cost += v
                    break
                t //= b
                cost += 1
        if steps + cost > max_steps:
            return (_BUDGET, max_steps, peak)
        steps += cost
        hare = t
        lam += 1
        if hare == 1:
            return (_ONE, steps, peak)
        if floor is not None and hare < floor:
            return (_DIP, hare, steps, peak)
        if hare == tortoise:
            return (_CYCLE, hare, steps, peak)


def _tail_length(params: MapParams, s0: int, members: set[int]) -> int:
    """Elementary steps from ``s0`` to the first value in ``members``."""
    b = params.b
    n = s0
    idx = 0
    while n % b == 0:
        if n in members:
            return idx
        n //= b
        idx += 1
    bm = params.b_pow_m
    while n not in members:
        t = n + 1 + n // bm
        v, nxt = valuation(t, b)
        if nxt in members:
            # Entry may happen part way through this macro-step.
            while n not in members:
                n = step(params, n)
                idx += 1
            return idx
        idx += 1 + params.m + v
        n = nxt
    return idx


def _cycle_outcome(params: MapParams, s0: int, on_cycle: int, peak: int) -> TrajectoryOutcome:
    cycle = _cycle_from(params, on_cycle)
    mu = _tail_length(params, s0, set(cycle.elements))
    return TrajectoryOutcome(
        OutcomeTag.ENTERED_CYCLE,
        steps_consumed=mu + cycle.length,
        peak_bits=peak.bit_length(),
        cycle=cycle,
    )


def _to_outcome(params: MapParams, s0: int, raw) -> TrajectoryOutcome:
    kind = raw[0]
    if kind == _ONE:
        return TrajectoryOutcome(
            OutcomeTag.REACHED_ONE, raw[1], raw[2].bit_length(), steps_to_one=raw[1]
        )
    if kind == _CYCLE:
        return _cycle_outcome(params, s0, raw[1], raw[3])
    if kind == _BUDGET:
        return TrajectoryOutcome(OutcomeTag.BUDGET_EXCEEDED, raw[1], raw[2].bit_length())
    raise AssertionError(f"unexpected engine result {raw!r}")


def detect_outcome(params: MapParams, s0: int, budget: Budget | None = None,
                   accelerate: bool = True) -> TrajectoryOutcome:
    """Classify the trajectory of ``s0`` as reaching 1, cycling, or over budget.

    Cycle finding is Brent's algorithm over macro-steps; a found cycle is
    rebuilt by elementary re-traversal and verified closed.  Reaching the
    principal cycle is reported as ``REACHED_ONE``.
    """
    _check_positive(s0)
    budget = budget or Budget()
    return _to_outcome(params, s0, _walk(params, s0, budget, accelerate=accelerate))


def stopping_time(params: MapParams, s0: int, budget: Budget | None = None,
                  accelerate: bool = True) -> int:
    """Number of map applications until 1 first appears (0 when ``s0 == 1``).

    Raises NonConvergent when a cycle avoiding 1 is entered and
    BudgetExceeded when the budget runs out first.
    """
    _check_positive(s0)
    budget = budget or Budget()
    raw = _walk(params, s0, budget, accelerate=accelerate)
    if raw[0] == _ONE:
        return raw[1]
    if raw[0] == _CYCLE:
        raise NonConvergent(_cycle_from(params, raw[1]))
    raise BudgetExceeded(raw[1], raw[2].bit_length())


@dataclass
class PropositionReport:
    params: MapParams
    starts: int
    failures: list[int]
    max_stopping_time: int
    max_stopping_start: int | None

    @property
    def passed(self) -> bool:
        return not self.failures


def _graph_stopping_times(params: MapParams) -> np.ndarray:
    """Stopping times of every value in [1, b^m] via pointer doubling.

    Below b^m a macro-step never leaves [1, b^m]: the quotient by b^m is 0,
    so the expansion lands on b^m * (s + 1) and divides back down to at most
    b^m.  The successor graph on that interval is therefore exact and
    closed.  Entries that never reach 1 come back as -1.
    """
    b, m, bm = params.b, params.m, params.b_pow_m
    s = np.arange(bm + 1, dtype=np.int64)
    divisible = s % b == 0
    t = np.where(divisible, s, s + 1)
    cost = np.where(divisible, 0, m + 1).astype(np.int64)
    while True:
        hit = (t % b == 0) & (t > 0)
        if not hit.any():
            break
        t = np.where(hit, t // b, t)
        cost += hit
    nxt = t
    nxt[0] = 0
    nxt[1] = 1
    cost[0] = cost[1] = 0
    for _ in range(int(bm).bit_length() + 1):
        cost = cost + cost[nxt]
        nxt = nxt[nxt]
    return np.where(nxt == 1, cost, -1)


def proposition_check(params: MapParams, budget: Budget | None = None,
                      method: str = "graph") -> PropositionReport:
    """Check that every start below b^m reaches 1.

    ``method="graph"`` resolves all starts at once on the closed successor
    graph; ``method="direct"`` runs :func:`detect_outcome` per start.  Both
    report the same failures and maxima.
    """
    budget = budget or Budget()
    bm = params.b_pow_m
    if bm - 1 > PROPOSITION_GUARD:
        raise TooLarge(f"b^m - 1 = {bm - 1} starts exceeds the guard {PROPOSITION_GUARD}")
    if method == "graph":
        times = _graph_stopping_times(params)[1:bm]
        over = (times < 0) | (times > budget.max_steps)
        failures = [int(i) + 1 for i in np.flatnonzero(over)]
        if failures:
            # Confirm with the direct engine; only its verdict counts.
            failures = [
                s for s in failures
                if detect_outcome(params, s, budget).tag is not OutcomeTag.REACHED_ONE
            ]
        ok = np.where(over, -1, times)
        best = int(ok.argmax()) if len(ok) else 0
        return PropositionReport(params, bm - 1, failures, int(ok[best]) if len(ok) else 0,
                                 best + 1 if len(ok) else None)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    failures = []
    best_t, best_s = 0, None
    for s in range(1, bm):
        out = detect_outcome(params, s, budget)
        if out.tag is not OutcomeTag.REACHED_ONE:
            failures.append(s)
        elif best_s is None or out.steps_to_one > best_t:
            best_t, best_s = out.steps_to_one, s
    return PropositionReport(params, bm - 1, failures, best_t, best_s)
