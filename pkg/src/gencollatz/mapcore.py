"""The generalized Collatz map f(n, b, m) and its accelerated forms.

Divide by b when n is divisible by b; otherwise expand to
``(b**m + 1) * n + b**m - (n mod b**m)``.  Python ints are exact at every
magnitude and already keep small values in a compact single-word form, so
they serve directly as the unbounded natural-number type.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import gcd
from typing import Iterator

from .errors import DivisibleInput, InvalidParams, ZeroInput

DEFAULT_MAX_STEPS = 10**8
DEFAULT_MAX_BITS = 16384


class StepKind(enum.Enum):
    DIVIDE = "divide"
    EXPAND = "expand"


@dataclass(frozen=True)
class MapParams:
    b: int
    m: int
    b_pow_m: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.b, bool) or isinstance(self.m, bool):
            raise InvalidParams("b and m must be integers")
        if not isinstance(self.b, int) or not isinstance(self.m, int):
            raise InvalidParams("b and m must be integers")
        if self.b < 2:
            raise InvalidParams(f"base b must be >= 2, got {self.b}")
        if self.m < 1:
            raise InvalidParams(f"exponent m must be >= 1, got {self.m}")
        object.__setattr__(self, "b_pow_m", self.b**self.m)


def make_params(b: int, m: int) -> MapParams:
    return MapParams(int(b), int(m))


@dataclass(frozen=True)
class Budget:
    """Limits on a single trajectory computation.

    ``max_steps`` counts elementary map applications and ``max_bits`` caps
    the bit length of any value on the trajectory.
    """

    max_steps: int = DEFAULT_MAX_STEPS
    max_bits: int = DEFAULT_MAX_BITS

    def __post_init__(self):
        if self.max_steps < 1:
            raise InvalidParams(f"max_steps must be >= 1, got {self.max_steps}")
        if self.max_bits < 8:
            raise InvalidParams(f"max_bits must be >= 8, got {self.max_bits}")


def _check_positive(n: int) -> None:
    if n == 0:
        raise ZeroInput("the map is only defined for positive integers")
    if n < 0:
        raise InvalidParams(f"negative input {n}")


def step_kind(params: MapParams, n: int) -> StepKind:
    return StepKind.DIVIDE if n % params.b == 0 else StepKind.EXPAND


def step(params: MapParams, n: int) -> int:
    """Apply the map once."""
    _check_positive(n)
    if n % params.b == 0:
        return n // params.b
    bm = params.b_pow_m
    return (bm + 1) * n + bm - n % bm


def valuation(n: int, b: int) -> tuple[int, int]:
    """Return ``(v, r)`` with ``n == r * b**v`` and ``r`` not divisible by b.

    Strips powers b**(2**k) first so huge powers of b cost O(log v) big
    divisions instead of v of them.
    """
    _check_positive(n)
    if b < 2:
        raise InvalidParams(f"base must be >= 2, got {b}")
    if n % b:
        return 0, n
    # Square up until the power no longer divides, then walk back down.
    powers = [b]
    while True:
        nxt = powers[-1] * powers[-1]
        if nxt > n or n % nxt:
            break
        powers.append(nxt)
    v = 0
    for k in range(len(powers) - 1, -1, -1):
        q, r = divmod(n, powers[k])
        if r == 0:
            n = q
            v += 1 << k
    return v, n


def _expand_quotient(params: MapParams, n: int) -> int:
    # For n not divisible by b, f(n) = b**m * (n + 1 + n // b**m).
    return n + 1 + n // params.b_pow_m


def macro_step(params: MapParams, n: int) -> tuple[int, int]:
    """One expansion followed by every division it enables.

    Returns ``(next, elementary_steps)`` where ``next`` is the first later
    trajectory value not divisible by b.
    """
    _check_positive(n)
    if n % params.b == 0:
        raise DivisibleInput(f"{n} is divisible by b={params.b}")
    t = n + 1 + n // params.b_pow_m
    if t % params.b:
        return t, 1 + params.m
    v, t = valuation(t, params.b)
    return t, 1 + params.m + v


def pure_run_length(params: MapParams, n: int) -> int:
    """Number of upcoming macro-steps from ``n`` that perform no extra division.

    While ``n // b**m`` stays at q, every such macro-step adds exactly
    ``d = q + 1``.  Returns K such that the next K macro-steps are all
    ``n -> n + d`` (and K+1 would not be). Only a positive K when the run can
    be skipped in closed form: d and b share a factor that n lacks, which
    makes ``n + k*d`` never divisible by b.  Returns 0 otherwise.
    """
    b = params.b
    q = n // params.b_pow_m
    d = q + 1
    g = gcd(d, b)
    if g == 1 or n % g == 0:
        return 0
    # Largest k keeping n + k*d below the next multiple of b**m: the first k
    # steps stay pure, the step taking the value past (q+1)*b**m changes d.
    return ((q + 1) * params.b_pow_m - 1 - n) // d + 1


def trajectory(params: MapParams, s0: int, budget: Budget | None = None) -> Iterator[int]:
    """Yield S0, S1, S2, ... lazily.

    Stops after ``budget.max_steps`` values, or after yielding the first
    value wider than ``budget.max_bits``.  With no budget the stream is
    unbounded.
    """
    _check_positive(s0)
    b = params.b
    bm = params.b_pow_m
    limit = budget.max_steps if budget is not None else None
    max_bits = budget.max_bits if budget is not None else None
    n = s0
    produced = 0
    while limit is None or produced < limit:
        yield n
        produced += 1
        if max_bits is not None and n.bit_length() > max_bits:
            return
        n = n // b if n % b == 0 else (bm + 1) * n + bm - n % bm
