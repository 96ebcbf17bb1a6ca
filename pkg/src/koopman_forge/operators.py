"""Operator-theoretic layer: dyadic block matrices of Koopman operators,
the transfer (adjoint) operator, a strong-operator metric over a fixed
test family, the entrywise weak defect at a dyadic level, and the
range-distance diagnostic.

Matrix orientation is the flow convention: ``entries[j][k]`` is the
normalized mass moved from the j-th dyadic cell into the k-th one,
``2^n * mu(I_j intersect T^{-1}(I_k))``.  Row sums certify totality,
column sums certify measure preservation, so extraction doubles as a
verification of both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .core import (
    ONE,
    ZERO,
    Interval,
    ResourceLimitError,
    StepFunction,
    ValidationError,
    check_level,
    dyadic_partition,
    format_rat,
    parse_rat,
    step_inner,
    sqrt_float,
)
from .transforms import (
    MeasurePreservingMap,
    PiecewiseAffineMap,
    PiecewiseTranslation,
    koopman_apply,
)


def _require_power_of_two(size: int) -> int:
    n = size.bit_length() - 1
    if size <= 0 or 2**n != size:
        raise ValidationError("matrix size must be 2^n")
    return n


@dataclass(frozen=True)
class DoublyStochasticMatrix:
    """Normalized dyadic block matrix: 2^n x 2^n, entries >= 0, every row
    and every column summing to 1 exactly.

    The raw block masses are ``entries[j][k] / 2^n``.
    """

    n: int
    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(Fraction(e) for e in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        size = 2**self.n
        if len(rows) != size or any(len(row) != size for row in rows):
            raise ValidationError(
                f"matrix must be {size}x{size} for level {self.n}"
            )
        for row in rows:
            for e in row:
                if e < 0:
                    raise ValidationError(f"negative entry {e}")
        for j, row in enumerate(rows):
            if sum(row) != 1:
                raise ValidationError(f"row {j + 1} sums to {sum(row)}, not 1")
        for k in range(size):
            total = sum((row[k] for row in rows), ZERO)
            if total != 1:
                raise ValidationError(f"column {k + 1} sums to {total}, not 1")

    @property
    def size(self) -> int:
        return 2**self.n

    def block_mass(self, j: int, k: int) -> Fraction:
        """Raw overlap mass entries[j][k] / 2^n (0-based indices)."""
        return self.entries[j][k] / self.size

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Sequence[object]],
        max_level: int | None = None,
    ) -> "DoublyStochasticMatrix":
        n = _require_power_of_two(len(rows))
        check_level(n, max_level)
        return cls(n, tuple(tuple(parse_rat(e) for e in row) for row in rows))

    @classmethod
    def permutation(cls, perm: Sequence[int]) -> "DoublyStochasticMatrix":
        """Permutation matrix P[j][perm[j]] = 1 (0-based permutation)."""
        size = len(perm)
        n = _require_power_of_two(size)
        if sorted(perm) != list(range(size)):
            raise ValidationError(f"not a permutation of 0..{size - 1}: {perm}")
        rows = [[ZERO] * size for _ in range(size)]
        for j, k in enumerate(perm):
            rows[j][k] = ONE
        return cls(n, tuple(tuple(row) for row in rows))

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "entries": [[format_rat(e) for e in row] for row in self.entries],
        }

    @classmethod
    def from_json_obj(
        cls, obj: object, max_level: int | None = None
    ) -> "DoublyStochasticMatrix":
        if not isinstance(obj, dict) or "entries" not in obj:
            raise ValidationError("matrix JSON needs 'entries'")
        entries = obj["entries"]
        if not isinstance(entries, list) or not all(
            isinstance(row, list) for row in entries
        ):
            raise ValidationError("matrix 'entries' must be a list of rows")
        m = cls.from_rows(entries, max_level)
        declared = obj.get("n")
        if declared is not None and declared != m.n:
            raise ValidationError(
                f"declared level {declared} does not match size {m.size}"
            )
        return m


def koopman_matrix(
    T: MeasurePreservingMap, n: int, max_level: int | None = None
) -> DoublyStochasticMatrix:
    """Extract the level-n dyadic block matrix of T.

    ``entries[j][k] = 2^n * mu(I_j intersect T^{-1}(I_k))``, computed by
    exact preimage arithmetic.  The constructor re-checks double
    stochasticity, so a successful extraction certifies that T is
    total and measure-preserving at this resolution.
    """
    check_level(n, max_level)
    size = 2**n
    rows = [[ZERO] * size for _ in range(size)]
    cells = dyadic_partition(n, max_level)
    for k, cell in enumerate(cells):
        for iv in T.preimage(cell):
            # spread [iv.lo, iv.hi) over the source cells it meets
            j = int(iv.lo * size)
            while j < size and Fraction(j, size) < iv.hi:
                lo = max(iv.lo, Fraction(j, size))
                hi = min(iv.hi, Fraction(j + 1, size))
                if lo < hi:
                    rows[j][k] += (hi - lo) * size
                j += 1
    return DoublyStochasticMatrix(n, tuple(tuple(row) for row in rows))


def transfer_apply(T: MeasurePreservingMap, f: StepFunction) -> StepFunction:
    """The adjoint of the Koopman operator (the transfer operator).

    Characterized by
    ``step_inner(transfer_apply(T, f), g) == step_inner(f, koopman_apply(T, g))``
    for every step function g.  For an invertible T this is composition
    with the inverse; for an affine map each branch contributes
    ``f(branch^{-1}(y)) / |slope|`` on its image.
    """
    if isinstance(T, PiecewiseTranslation):
        return koopman_apply(T.inverse(), f)
    total = StepFunction.zero()
    for b in T.branches:
        img = b.image
        cells: list[tuple[Interval, Fraction]] = []
        if img.lo > 0:
            cells.append((Interval(ZERO, img.lo), ZERO))
        pushed = []
        weight = 1 / abs(b.slope)
        for cell, v in f.pieces_in(b.source):
            u = b.slope * cell.lo + b.intercept
            w = b.slope * cell.hi + b.intercept
            if b.slope < 0:
                u, w = w, u
            pushed.append((Interval(u, w), v * weight))
        if b.slope < 0:
            pushed.reverse()
        cells.extend(pushed)
        if img.hi < 1:
            cells.append((Interval(img.hi, ONE), ZERO))
        total = total + StepFunction.from_pieces(cells)
    return total


def range_distance_sq(T: MeasurePreservingMap, f: StepFunction) -> Fraction:
    """Exact squared L2 distance from f to the range of the Koopman
    operator of T.

    The Koopman operator is an isometry with closed range, and the
    orthogonal projection onto that range has norm ||T* f||, so
    dist^2 = ||f||^2 - ||T* f||^2.  Zero for every invertible T.
    """
    return f.norm_sq() - transfer_apply(T, f).norm_sq()


def range_distance(T: MeasurePreservingMap, f: StepFunction) -> float:
    """Float display of sqrt(range_distance_sq)."""
    return sqrt_float(range_distance_sq(T, f))


@dataclass(frozen=True)
class MetricBasis:
    """Ordered family of nonzero test functions; term j gets weight 2^-j
    (1-based position, not dyadic level)."""

    functions: tuple[StepFunction, ...]

    def __post_init__(self) -> None:
        fns = tuple(self.functions)
        object.__setattr__(self, "functions", fns)
        if not fns:
            raise ValidationError("metric basis must be nonempty")
        for i, f in enumerate(fns):
            if f.norm_sq() == 0:
                raise ValidationError(f"basis function {i + 1} is zero")

    @classmethod
    def dyadic(cls, max_level: int = 5) -> "MetricBasis":
        """All dyadic-cell indicators of levels 0..max_level, enumerated
        level by level, left to right within a level."""
        check_level(max_level)
        fns = []
        for lvl in range(max_level + 1):
            fns.extend(StepFunction.indicator(c) for c in dyadic_partition(lvl))
        return cls(tuple(fns))

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self) -> Iterator[StepFunction]:
        return iter(self.functions)

    def tail_bound(self) -> Fraction:
        """Truncation error bound: each dropped term is at most 2*2^-j."""
        return Fraction(2, 2 ** len(self.functions))


@dataclass(frozen=True)
class MetricTerm:
    """One summand of the operator metric, with its exact square."""

    index: int  # 1-based position j; weight is 2^-j
    ratio_sq: Fraction  # ||Tf - Sf||^2 / ||f||^2, exact
    value: float  # 2^-j * sqrt(ratio_sq)


@dataclass(frozen=True)
class MetricReport:
    """Truncated operator metric sum(j) ||Tf_j - Sf_j|| / (2^j ||f_j||)."""

    terms: tuple[MetricTerm, ...]
    value: float
    tail_bound: Fraction

    def __float__(self) -> float:
        return self.value


def op_metric(
    T: MeasurePreservingMap,
    S: MeasurePreservingMap,
    basis: MetricBasis | None = None,
) -> MetricReport:
    """Strong-operator metric between the Koopman operators of T and S,
    truncated to the basis.  Per-term squared ratios are exact; only the
    square roots and the total are floats."""
    if basis is None:
        basis = MetricBasis.dyadic()
    terms = []
    total = 0.0
    for j, f in enumerate(basis, start=1):
        diff_sq = (koopman_apply(T, f) - koopman_apply(S, f)).norm_sq()
        ratio_sq = diff_sq / f.norm_sq()
        value = sqrt_float(ratio_sq) / 2**j
        terms.append(MetricTerm(j, ratio_sq, value))
        total += value
    return MetricReport(tuple(terms), total, basis.tail_bound())


def weak_defect(
    T: MeasurePreservingMap,
    S: MeasurePreservingMap,
    n: int,
    max_level: int | None = None,
) -> Fraction:
    """Max entrywise difference of the level-n block matrices.

    Zero exactly when T and S agree weakly on every linear combination
    of dyadic-cell indicators of level <= n.
    """
    A = koopman_matrix(T, n, max_level)
    B = koopman_matrix(S, n, max_level)
    return max(
        abs(a - b) for ra, rb in zip(A.entries, B.entries) for a, b in zip(ra, rb)
    )
