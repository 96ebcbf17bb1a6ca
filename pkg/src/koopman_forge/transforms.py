"""Measure-preserving transformations of [0,1).

Two concrete kinds:

* :class:`PiecewiseTranslation`: invertible interval exchanges.  The
  constructor proves invertibility: the source intervals must tile
  [0,1) exactly and so must their translated images.  Construction
  fails loudly otherwise; there is no repair.

* :class:`PiecewiseAffineMap`: piecewise-affine, Lebesgue-preserving,
  possibly non-invertible (doubling, tent).  The constructor verifies
  measure preservation exactly: the pushforward density, a step
  function with breakpoints at the branch-image endpoints, must be
  identically 1.

Orientation-reversing branches map half-open intervals to left-open
ones; results are re-closed on the left, a null-set adjustment under
Lebesgue measure.  Likewise a branch value of exactly 1 (attainable
only at a single point of a reversing branch) wraps to 0.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .core import (
    ONE,
    ZERO,
    Interval,
    RatLike,
    ResourceLimitError,
    StepFunction,
    ValidationError,
    format_rat,
    parse_rat,
    resolve_max_level,
)


@dataclass(frozen=True)
class Piece:
    """One translated piece: x -> x + offset on ``source``."""

    source: Interval
    offset: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "offset", Fraction(self.offset))
        if self.source.is_empty:
            raise ValidationError(f"piece source {self.source} has zero length")
        _ = self.image  # reject pieces that translate outside [0,1)

    @property
    def image(self) -> Interval:
        return self.source.shift(self.offset)


@dataclass(frozen=True)
class Branch:
    """One affine branch: x -> slope*x + intercept on ``source``."""

    source: Interval
    slope: Fraction
    intercept: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "slope", Fraction(self.slope))
        object.__setattr__(self, "intercept", Fraction(self.intercept))
        if self.source.is_empty:
            raise ValidationError(f"branch source {self.source} has zero length")
        if self.slope == 0:
            raise ValidationError("branch slope must be nonzero")
        _ = self.image  # reject branches that map outside [0,1)

    @property
    def image(self) -> Interval:
        """Image of the source as a half-open interval (left-closed by
        convention for reversing branches)."""
        a = self.slope * self.source.lo + self.intercept
        b = self.slope * self.source.hi + self.intercept
        lo, hi = (a, b) if self.slope > 0 else (b, a)
        if not (ZERO <= lo and hi <= ONE):
            raise ValidationError(
                f"branch image [{lo}, {hi}) leaves [0,1)"
            )
        return Interval(lo, hi)

    def invert_point(self, y: RatLike) -> Fraction:
        return (Fraction(y) - self.intercept) / self.slope


def _check_tiling(intervals: Sequence[Interval], what: str) -> None:
    """Intervals, already sorted by lo, must tile [0,1) exactly."""
    if not intervals:
        raise ValidationError(f"{what}: empty")
    cursor = ZERO
    for iv in intervals:
        if iv.lo != cursor:
            raise ValidationError(
                f"{what}: gap or overlap at {cursor} (next piece starts at {iv.lo})"
            )
        cursor = iv.hi
    if cursor != ONE:
        raise ValidationError(f"{what}: cover stops at {cursor}, not 1")


class PiecewiseTranslation:
    """Invertible interval exchange given by finitely many translated pieces.

    Pieces are stored in canonical form: sorted by source, adjacent
    pieces with equal offsets merged.  Equality compares canonical
    forms, so e.g. composing a map with its inverse compares equal to
    the identity.
    """

    __slots__ = ("_pieces", "_los")

    def __init__(self, pieces: Iterable[Piece | tuple]) -> None:
        normalized = []
        for p in pieces:
            if not isinstance(p, Piece):
                src, off = p
                p = Piece(src if isinstance(src, Interval) else Interval(*src), off)
            normalized.append(p)
        normalized.sort(key=lambda p: p.source.lo)
        _check_tiling([p.source for p in normalized], "piecewise translation sources")
        images = sorted((p.image for p in normalized), key=lambda iv: iv.lo)
        _check_tiling(images, "piecewise translation images")
        merged: list[Piece] = []
        for p in normalized:
            if merged and merged[-1].offset == p.offset:
                prev = merged[-1]
                merged[-1] = Piece(Interval(prev.source.lo, p.source.hi), p.offset)
            else:
                merged.append(p)
        self._pieces = tuple(merged)
        self._los = [p.source.lo for p in merged]

    @property
    def pieces(self) -> tuple[Piece, ...]:
        return self._pieces

    def __len__(self) -> int:
        return len(self._pieces)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PiecewiseTranslation):
            return NotImplemented
        return self._pieces == other._pieces

    def __hash__(self) -> int:
        return hash(self._pieces)

    def __repr__(self) -> str:
        inner = "; ".join(
            f"{p.source} -> {p.image}" for p in self._pieces
        )
        return f"PiecewiseTranslation({inner})"

    def piece_at(self, x: RatLike) -> Piece:
        x = Fraction(x)
        if not (ZERO <= x < ONE):
            raise ValidationError(f"point {x} outside [0,1)")
        return self._pieces[bisect_right(self._los, x) - 1]

    def __call__(self, x: RatLike) -> Fraction:
        x = Fraction(x)
        return x + self.piece_at(x).offset

    def preimage(self, window: Interval) -> list[Interval]:
        """Disjoint intervals whose union is T^{-1}(window), sorted."""
        out = []
        for p in self._pieces:
            # translate the window back and clip to the source
            lo = max(p.source.lo, window.lo - p.offset)
            hi = min(p.source.hi, window.hi - p.offset)
            if lo < hi:
                out.append(Interval(lo, hi))
        assert sum((iv.length for iv in out), ZERO) == window.length
        return out

    def inverse(self) -> "PiecewiseTranslation":
        return PiecewiseTranslation(
            Piece(p.image, -p.offset) for p in self._pieces
        )

    def compose(self, other: "PiecewiseTranslation") -> "PiecewiseTranslation":
        """self after other: x -> self(other(x))."""
        pieces = []
        for p in other._pieces:
            img = p.image
            for q in self._pieces:
                lo = max(img.lo, q.source.lo)
                hi = min(img.hi, q.source.hi)
                if lo < hi:
                    src = Interval(lo - p.offset, hi - p.offset)
                    pieces.append(Piece(src, p.offset + q.offset))
        return PiecewiseTranslation(pieces)

    def power(self, m: int, max_level: int | None = None) -> "PiecewiseTranslation":
        """m-fold composition; negative m uses the inverse."""
        if m < 0:
            return self.inverse().power(-m, max_level)
        cap = 4 ** resolve_max_level(max_level)
        acc = identity()
        for _ in range(m):
            acc = acc.compose(self)
            if len(acc) > cap:
                raise ResourceLimitError(
                    f"piece count {len(acc)} exceeds limit {cap}"
                )
        return acc

    def to_json_obj(self) -> dict:
        return {
            "pieces": [
                {
                    "lo": format_rat(p.source.lo),
                    "hi": format_rat(p.source.hi),
                    "offset": format_rat(p.offset),
                }
                for p in self._pieces
            ]
        }

    @classmethod
    def from_json_obj(cls, obj: object) -> "PiecewiseTranslation":
        if not isinstance(obj, dict) or "pieces" not in obj:
            raise ValidationError("piecewise translation JSON needs 'pieces'")
        pieces = []
        for entry in obj["pieces"]:
            if not isinstance(entry, dict):
                raise ValidationError(f"bad piece entry: {entry!r}")
            pieces.append(
                Piece(
                    Interval(parse_rat(entry.get("lo")), parse_rat(entry.get("hi"))),
                    parse_rat(entry.get("offset")),
                )
            )
        return cls(pieces)


class PiecewiseAffineMap:
    """Lebesgue-preserving piecewise-affine map, possibly non-invertible.

    Measure preservation is verified exactly at construction: the
    pushforward density sum(1/|slope|) over branches covering y must be
    1 for every y, checked cell by cell on the arrangement of all
    branch-image endpoints.  For rational branch data this finite check
    is complete.
    """

    __slots__ = ("_branches", "_los")

    def __init__(self, branches: Iterable[Branch | tuple]) -> None:
        normalized = []
        for b in branches:
            if not isinstance(b, Branch):
                src, slope, intercept = b
                b = Branch(
                    src if isinstance(src, Interval) else Interval(*src),
                    slope,
                    intercept,
                )
            normalized.append(b)
        normalized.sort(key=lambda b: b.source.lo)
        _check_tiling([b.source for b in normalized], "piecewise affine sources")
        images = [b.image for b in normalized]
        self._check_density(normalized, images)
        merged: list[Branch] = []
        for b in normalized:
            if (
                merged
                and merged[-1].slope == b.slope
                and merged[-1].intercept == b.intercept
            ):
                prev = merged[-1]
                merged[-1] = Branch(
                    Interval(prev.source.lo, b.source.hi), b.slope, b.intercept
                )
            else:
                merged.append(b)
        self._branches = tuple(merged)
        self._los = [b.source.lo for b in merged]

    @staticmethod
    def _check_density(branches: Sequence[Branch], images: Sequence[Interval]) -> None:
        cuts = sorted({ZERO, ONE, *(iv.lo for iv in images), *(iv.hi for iv in images)})
        for lo, hi in zip(cuts, cuts[1:]):
            density = sum(
                (
                    1 / abs(b.slope)
                    for b, iv in zip(branches, images)
                    if iv.lo <= lo and hi <= iv.hi
                ),
                ZERO,
            )
            if density != 1:
                raise ValidationError(
                    f"map does not preserve Lebesgue measure: pushforward "
                    f"density is {density} on [{lo}, {hi})"
                )

    @property
    def branches(self) -> tuple[Branch, ...]:
        return self._branches

    def __len__(self) -> int:
        return len(self._branches)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PiecewiseAffineMap):
            return NotImplemented
        return self._branches == other._branches

    def __hash__(self) -> int:
        return hash(self._branches)

    def __repr__(self) -> str:
        inner = "; ".join(
            f"{b.source}: {b.slope}*x + {b.intercept}" for b in self._branches
        )
        return f"PiecewiseAffineMap({inner})"

    def branch_at(self, x: RatLike) -> Branch:
        x = Fraction(x)
        if not (ZERO <= x < ONE):
            raise ValidationError(f"point {x} outside [0,1)")
        return self._branches[bisect_right(self._los, x) - 1]

    def __call__(self, x: RatLike) -> Fraction:
        x = Fraction(x)
        b = self.branch_at(x)
        y = b.slope * x + b.intercept
        # single boundary point of a reversing branch wraps to 0
        return ZERO if y == 1 else y

    def preimage(self, window: Interval) -> list[Interval]:
        """Disjoint intervals whose union is T^{-1}(window), sorted.

        For reversing branches the true preimage is left-open; it is
        reported left-closed (null-set adjustment).
        """
        out = []
        for b in self._branches:
            u = b.invert_point(window.lo)
            v = b.invert_point(window.hi)
            if b.slope < 0:
                u, v = v, u
            lo = max(b.source.lo, u)
            hi = min(b.source.hi, v)
            if lo < hi:
                out.append(Interval(lo, hi))
        assert sum((iv.length for iv in out), ZERO) == window.length
        return out

    def to_json_obj(self) -> dict:
        return {
            "branches": [
                {
                    "lo": format_rat(b.source.lo),
                    "hi": format_rat(b.source.hi),
                    "slope": format_rat(b.slope),
                    "intercept": format_rat(b.intercept),
                }
                for b in self._branches
            ]
        }

    @classmethod
    def from_json_obj(cls, obj: object) -> "PiecewiseAffineMap":
        if not isinstance(obj, dict) or "branches" not in obj:
            raise ValidationError("piecewise affine JSON needs 'branches'")
        branches = []
        for entry in obj["branches"]:
            if not isinstance(entry, dict):
                raise ValidationError(f"bad branch entry: {entry!r}")
            branches.append(
                Branch(
                    Interval(parse_rat(entry.get("lo")), parse_rat(entry.get("hi"))),
                    parse_rat(entry.get("slope")),
                    parse_rat(entry.get("intercept")),
                )
            )
        return cls(branches)


MeasurePreservingMap = Union[PiecewiseTranslation, PiecewiseAffineMap]


def koopman_apply(T: MeasurePreservingMap, f: StepFunction) -> StepFunction:
    """The composition operator: f -> f o T.

    An exact isometry of L2 for measure-preserving T; the result's
    breakpoints are branch endpoints and preimages of f's breakpoints.
    """
    cells: list[tuple[Interval, Fraction]] = []
    if isinstance(T, PiecewiseTranslation):
        for p in T.pieces:
            for cell, v in f.pieces_in(p.image):
                cells.append((cell.shift(-p.offset), v))
    else:
        for b in T.branches:
            pulled = []
            for cell, v in f.pieces_in(b.image):
                u = b.invert_point(cell.lo)
                w = b.invert_point(cell.hi)
                if b.slope < 0:
                    u, w = w, u
                pulled.append((Interval(u, w), v))
            if b.slope < 0:
                pulled.reverse()
            cells.extend(pulled)
    return StepFunction.from_pieces(cells)


def map_from_json_obj(obj: object) -> MeasurePreservingMap:
    """Load either map kind, keyed on 'pieces' vs 'branches'."""
    if isinstance(obj, dict):
        if "pieces" in obj:
            return PiecewiseTranslation.from_json_obj(obj)
        if "branches" in obj:
            return PiecewiseAffineMap.from_json_obj(obj)
    raise ValidationError("map JSON needs a 'pieces' or 'branches' key")


# -- named example maps ---------------------------------------------


def identity() -> PiecewiseTranslation:
    return PiecewiseTranslation([Piece(Interval(ZERO, ONE), ZERO)])


def rotation(r: RatLike) -> PiecewiseTranslation:
    """Rotation x -> x + r mod 1, r taken mod 1."""
    r = Fraction(r) % 1
    if r == 0:
        return identity()
    return PiecewiseTranslation(
        [
            Piece(Interval(ZERO, 1 - r), r),
            Piece(Interval(1 - r, ONE), r - 1),
        ]
    )


def half_swap() -> PiecewiseTranslation:
    """Exchange [0,1/2) and [1/2,1)."""
    return rotation(Fraction(1, 2))


def doubling() -> PiecewiseAffineMap:
    """x -> 2x mod 1."""
    h = Fraction(1, 2)
    return PiecewiseAffineMap(
        [
            Branch(Interval(ZERO, h), Fraction(2), ZERO),
            Branch(Interval(h, ONE), Fraction(2), Fraction(-1)),
        ]
    )


def tent() -> PiecewiseAffineMap:
    """2x on [0,1/2), 2-2x on [1/2,1)."""
    h = Fraction(1, 2)
    return PiecewiseAffineMap(
        [
            Branch(Interval(ZERO, h), Fraction(2), ZERO),
            Branch(Interval(h, ONE), Fraction(-2), Fraction(2)),
        ]
    )


def identity_affine() -> PiecewiseAffineMap:
    return PiecewiseAffineMap([Branch(Interval(ZERO, ONE), Fraction(1), ZERO)])


def builtin_map(name: str) -> MeasurePreservingMap:
    """Look up a map by CLI name: identity, halfswap, doubling, tent,
    or rotation:p/q."""
    key = name.strip().lower()
    if key == "identity":
        return identity()
    if key == "halfswap":
        return half_swap()
    if key == "doubling":
        return doubling()
    if key == "tent":
        return tent()
    if key.startswith("rotation:"):
        return rotation(parse_rat(key.split(":", 1)[1]))
    raise ValidationError(f"unknown builtin map {name!r}")
