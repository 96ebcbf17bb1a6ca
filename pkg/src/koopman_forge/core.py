"""Exact substrate: rational scalars, half-open subintervals of [0,1),
dyadic partitions, and rational step functions.

Everything computes over ``fractions.Fraction``; floats appear only in
display helpers (square roots, decimal rendering).  All values are
immutable and all operations are pure, so the layer is safe to share
across concurrent callers.

Convention: every interval is half-open ``[lo, hi)``.  Boundary points
carry no Lebesgue measure, so this is equivalent mod null sets to the
closed-interval picture, but it makes partitions of [0,1) genuine
pointwise partitions.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

#: The universal exact scalar.  Stored in lowest terms with positive
#: denominator, arithmetic and comparison are exact, equality decidable.
Rat = Fraction

RatLike = Union[Fraction, int]

#: Hard ceiling on dyadic levels unless overridden: 2**16 cells.
DEFAULT_MAX_LEVEL = 16

ZERO = Fraction(0)
ONE = Fraction(1)


class ValidationError(ValueError):
    """Input data violates a structural invariant of its type."""


class ResourceLimitError(RuntimeError):
    """An operation exceeds the configured size limit."""


def resolve_max_level(max_level: int | None) -> int:
    return DEFAULT_MAX_LEVEL if max_level is None else max_level


def check_level(n: int, max_level: int | None = None) -> int:
    """Validate a dyadic level against the resource limit and return it."""
    if n < 0:
        raise ValidationError(f"dyadic level must be >= 0, got {n}")
    limit = resolve_max_level(max_level)
    if n > limit:
        raise ResourceLimitError(f"dyadic level {n} exceeds limit {limit}")
    return n


def parse_rat(value: object) -> Fraction:
    """Parse a rational from JSON data: "p/q", "p", or an int.

    Floats are rejected; the whole pipeline is exact.
    """
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a rational: {value!r}") from exc
    raise ValidationError(f"not a rational: {value!r}")


def format_rat(x: RatLike) -> str:
    """Canonical "p/q" form, denominator always explicit."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def decimal_str(x: Fraction | float, digits: int = 12) -> str:
    """Render a value to ``digits`` significant digits, round-half-even.

    Exact for Fraction inputs; floats go through their exact binary
    expansion, so the output is reproducible.
    """
    with localcontext() as ctx:
        ctx.prec = digits
        ctx.rounding = ROUND_HALF_EVEN
        if isinstance(x, Fraction):
            d = Decimal(x.numerator) / Decimal(x.denominator)
        else:
            d = +Decimal(x)
    return str(d)


def sqrt_float(x: RatLike) -> float:
    """Floating square root of an exact nonnegative quantity (display only)."""
    x = Fraction(x)
    if x < 0:
        raise ValidationError(f"square root of negative value {x}")
    return math.sqrt(x.numerator / x.denominator)


@dataclass(frozen=True)
class Interval:
    """Half-open interval [lo, hi) with 0 <= lo <= hi <= 1."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if not (ZERO <= self.lo <= self.hi <= ONE):
            raise ValidationError(
                f"invalid interval [{self.lo}, {self.hi}): need 0 <= lo <= hi <= 1"
            )

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_empty(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: RatLike) -> bool:
        return self.lo <= x < self.hi

    def intersect(self, other: "Interval") -> "Interval | None":
        """Intersection, or None when it has zero length."""
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo >= hi:
            return None
        return Interval(lo, hi)

    def shift(self, offset: RatLike) -> "Interval":
        return Interval(self.lo + offset, self.hi + offset)

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi})"

    def to_json_obj(self) -> dict:
        return {"lo": format_rat(self.lo), "hi": format_rat(self.hi)}

    @classmethod
    def from_json_obj(cls, obj: object) -> "Interval":
        if not isinstance(obj, dict):
            raise ValidationError(f"interval must be an object, got {obj!r}")
        return cls(parse_rat(obj.get("lo")), parse_rat(obj.get("hi")))


def dyadic_partition(n: int, max_level: int | None = None) -> list[Interval]:
    """The 2**n cells [(j-1)/2**n, j/2**n), j = 1..2**n, left to right."""
    check_level(n, max_level)
    denom = 2**n
    return [Interval(Fraction(j, denom), Fraction(j + 1, denom)) for j in range(denom)]


def dyadic_cell(j: int, n: int, max_level: int | None = None) -> Interval:
    """Cell number ``j`` (1-based, classical indexing) of the level-n partition."""
    check_level(n, max_level)
    denom = 2**n
    if not 1 <= j <= denom:
        raise ValidationError(f"cell index {j} out of range 1..{denom}")
    return Interval(Fraction(j - 1, denom), Fraction(j, denom))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Rational-breakpoint step function on [0,1).

    ``f(x) = values[i]`` on ``[breakpoints[i], breakpoints[i+1])``.
    Breakpoints are strictly increasing from 0 to 1.  Adjacent cells with
    equal values may be present; :meth:`canonical` merges them, and
    equality compares canonical forms.
    """

    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        bps = tuple(Fraction(b) for b in self.breakpoints)
        vals = tuple(Fraction(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        if len(bps) < 2 or len(vals) != len(bps) - 1:
            raise ValidationError("breakpoints/values lengths do not match")
        if bps[0] != 0 or bps[-1] != 1:
            raise ValidationError("breakpoints must start at 0 and end at 1")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValidationError("breakpoints must be strictly increasing")

    # -- constructors ------------------------------------------------

    @classmethod
    def constant(cls, value: RatLike) -> "StepFunction":
        return cls((ZERO, ONE), (Fraction(value),))

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls.constant(0)

    @classmethod
    def one(cls) -> "StepFunction":
        return cls.constant(1)

    @classmethod
    def indicator(cls, interval: Interval) -> "StepFunction":
        """Characteristic function of a half-open subinterval."""
        if interval.is_empty:
            return cls.zero()
        bps: list[Fraction] = [ZERO]
        vals: list[Fraction] = []
        if interval.lo > 0:
            bps.append(interval.lo)
            vals.append(ZERO)
        vals.append(ONE)
        if interval.hi < 1:
            bps.append(interval.hi)
            vals.append(ZERO)
        bps.append(ONE)
        return cls(tuple(bps), tuple(vals))

    @classmethod
    def rademacher(cls) -> "StepFunction":
        """+1 on [0,1/2), -1 on [1/2,1)."""
        return cls((ZERO, Fraction(1, 2), ONE), (ONE, Fraction(-1)))

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple[Interval, RatLike]]) -> "StepFunction":
        """Assemble from (interval, value) cells that tile [0,1)."""
        cells = sorted(
            ((iv, Fraction(v)) for iv, v in pieces if not iv.is_empty),
            key=lambda p: p[0].lo,
        )
        if not cells:
            raise ValidationError("no cells given")
        bps = [ZERO]
        vals = []
        for iv, v in cells:
            if iv.lo != bps[-1]:
                raise ValidationError(f"cells do not tile [0,1): gap/overlap at {bps[-1]}")
            bps.append(iv.hi)
            vals.append(v)
        if bps[-1] != 1:
            raise ValidationError("cells do not cover [0,1)")
        return cls(tuple(bps), tuple(vals))

    # -- structure ---------------------------------------------------

    def cells(self) -> Iterator[tuple[Interval, Fraction]]:
        for i, v in enumerate(self.values):
            yield Interval(self.breakpoints[i], self.breakpoints[i + 1]), v

    def pieces_in(self, window: Interval) -> Iterator[tuple[Interval, Fraction]]:
        """The cells of f clipped to ``window``, in order."""
        if window.is_empty:
            return
        i = bisect_right(self.breakpoints, window.lo) - 1
        while i < len(self.values) and self.breakpoints[i] < window.hi:
            lo = max(self.breakpoints[i], window.lo)
            hi = min(self.breakpoints[i + 1], window.hi)
            if lo < hi:
                yield Interval(lo, hi), self.values[i]
            i += 1

    def value_at(self, x: RatLike) -> Fraction:
        if not (ZERO <= x < ONE):
            raise ValidationError(f"point {x} outside [0,1)")
        return self.values[bisect_right(self.breakpoints, Fraction(x)) - 1]

    def canonical(self) -> "StepFunction":
        """Merge adjacent cells with equal values; normal form for equality."""
        bps = [self.breakpoints[0]]
        vals: list[Fraction] = []
        for i, v in enumerate(self.values):
            if vals and v == vals[-1]:
                bps[-1] = self.breakpoints[i + 1]
            else:
                vals.append(v)
                bps.append(self.breakpoints[i + 1])
        return StepFunction(tuple(bps), tuple(vals))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        a, b = self.canonical(), other.canonical()
        return a.breakpoints == b.breakpoints and a.values == b.values

    def __hash__(self) -> int:
        c = self.canonical()
        return hash((c.breakpoints, c.values))

    # -- algebra -----------------------------------------------------

    def _zip_with(self, other: "StepFunction", op) -> "StepFunction":
        bps = _merge_breakpoints(self.breakpoints, other.breakpoints)
        i = j = 0
        vals = []
        for lo in bps[:-1]:
            while self.breakpoints[i + 1] <= lo:
                i += 1
            while other.breakpoints[j + 1] <= lo:
                j += 1
            vals.append(op(self.values[i], other.values[j]))
        return StepFunction(bps, tuple(vals))

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return self._zip_with(other, lambda a, b: a + b)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self._zip_with(other, lambda a, b: a - b)

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.breakpoints, tuple(-v for v in self.values))

    def __mul__(self, other: "StepFunction | RatLike") -> "StepFunction":
        if isinstance(other, StepFunction):
            return self._zip_with(other, lambda a, b: a * b)
        c = Fraction(other)
        return StepFunction(self.breakpoints, tuple(v * c for v in self.values))

    __rmul__ = __mul__

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.values)

    def norm_sq(self) -> Fraction:
        """Exact squared L2 norm."""
        total = ZERO
        for i, v in enumerate(self.values):
            total += v * v * (self.breakpoints[i + 1] - self.breakpoints[i])
        return total

    def __str__(self) -> str:
        parts = ", ".join(
            f"[{self.breakpoints[i]},{self.breakpoints[i+1]})->{v}"
            for i, v in enumerate(self.values)
        )
        return f"step({parts})"

    # -- serialization -----------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "breakpoints": [format_rat(b) for b in self.breakpoints],
            "values": [format_rat(v) for v in self.values],
        }

    @classmethod
    def from_json_obj(cls, obj: object) -> "StepFunction":
        if not isinstance(obj, dict) or "breakpoints" not in obj or "values" not in obj:
            raise ValidationError("step function JSON needs 'breakpoints' and 'values'")
        bps = [parse_rat(b) for b in obj["breakpoints"]]
        vals = [parse_rat(v) for v in obj["values"]]
        return cls(tuple(bps), tuple(vals))


def _merge_breakpoints(
    a: Sequence[Fraction], b: Sequence[Fraction]
) -> tuple[Fraction, ...]:
    out: list[Fraction] = []
    i = j = 0
    while i < len(a) or j < len(b):
        if j >= len(b) or (i < len(a) and a[i] <= b[j]):
            x = a[i]
            i += 1
            if j < len(b) and b[j] == x:
                j += 1
        else:
            x = b[j]
            j += 1
        if not out or out[-1] != x:
            out.append(x)
    return tuple(out)


def step_inner(f: StepFunction, g: StepFunction) -> Fraction:
    """Exact L2 inner product, integrated on the common refinement."""
    bps = _merge_breakpoints(f.breakpoints, g.breakpoints)
    i = j = 0
    total = ZERO
    for lo, hi in zip(bps, bps[1:]):
        while f.breakpoints[i + 1] <= lo:
            i += 1
        while g.breakpoints[j + 1] <= lo:
            j += 1
        total += f.values[i] * g.values[j] * (hi - lo)
    return total


def step_l2_dist_sq(f: StepFunction, g: StepFunction) -> Fraction:
    """Exact squared L2 distance."""
    d = f - g
    return d.norm_sq()


def step_l2_dist(f: StepFunction, g: StepFunction) -> float:
    """L2 distance as a float; use :func:`step_l2_dist_sq` for exact work."""
    return sqrt_float(step_l2_dist_sq(f, g))
