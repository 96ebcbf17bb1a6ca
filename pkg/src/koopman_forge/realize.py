"""First-fit realization of doubly stochastic matrices by interval
exchanges, plus generators of test matrices and the approximation
driver.

Given a normalized 2^n x 2^n doubly stochastic matrix M, the j-th
dyadic source cell is subdivided left to right into pieces of length
M[j][k] / 2^n for k = 1..2^n (zero entries produce no piece), and the
piece for target k is translated onto the leftmost uncovered part of
the k-th target cell.  Processing sources in order makes the schedule
deterministic; column stochasticity makes every target cell end up
exactly covered, which is the invertibility certificate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Interval, ValidationError, ZERO, check_level
from .operators import (
    DoublyStochasticMatrix,
    MetricBasis,
    MetricReport,
    koopman_matrix,
    op_metric,
    weak_defect,
)
from .transforms import Piece, PiecewiseAffineMap, PiecewiseTranslation


class PlacementState:
    """Tracks, per target cell, how much is already covered by placed
    pieces.  Fill levels stay within [0, 2^-n]; a completed placement
    has every cell exactly full."""

    def __init__(self, n: int) -> None:
        self.size = 2**n
        self.cell_width = Fraction(1, self.size)
        self.fill = [ZERO] * self.size

    def place(self, k: int, amount: Fraction) -> Fraction:
        """Reserve ``amount`` at the left end of the uncovered part of
        target cell k (0-based); returns the reserved start point."""
        lo = Fraction(k, self.size) + self.fill[k]
        self.fill[k] += amount
        if self.fill[k] > self.cell_width:
            raise ValidationError(
                f"target cell {k + 1} overfull: column mass exceeds {self.cell_width}"
            )
        return lo

    def is_complete(self) -> bool:
        return all(level == self.cell_width for level in self.fill)


def realize_iet(
    M: DoublyStochasticMatrix, max_level: int | None = None
) -> PiecewiseTranslation:
    """Build an invertible piecewise translation whose level-n block
    matrix is exactly M (first-fit schedule, at most 4^n pieces).

    ``koopman_matrix(realize_iet(M), M.n) == M`` holds with exact
    rational equality.
    """
    check_level(M.n, max_level)
    state = PlacementState(M.n)
    pieces = []
    cursor = ZERO
    for j in range(M.size):
        for k in range(M.size):
            length = M.block_mass(j, k)
            if length == 0:
                continue
            target_lo = state.place(k, length)
            pieces.append(
                Piece(Interval(cursor, cursor + length), target_lo - cursor)
            )
            cursor += length
        assert cursor == Fraction(j + 1, M.size), "row mass must fill the source cell"
    assert state.is_complete(), "column mass must fill every target cell"
    return PiecewiseTranslation(pieces)


def birkhoff_combination(
    perms: Sequence[Sequence[int]], weights: Sequence[Fraction | int]
) -> DoublyStochasticMatrix:
    """Exact convex combination of permutation matrices (0-based
    permutations of 0..2^n-1).  Doubly stochastic by construction;
    weights must be nonnegative and sum to exactly 1."""
    if len(perms) != len(weights):
        raise ValidationError("need one weight per permutation")
    if not perms:
        raise ValidationError("need at least one permutation")
    ws = [Fraction(w) for w in weights]
    if any(w < 0 for w in ws):
        raise ValidationError("weights must be nonnegative")
    if sum(ws) != 1:
        raise ValidationError(f"weights sum to {sum(ws)}, not 1")
    size = len(perms[0])
    rows = [[ZERO] * size for _ in range(size)]
    for perm, w in zip(perms, ws):
        if sorted(perm) != list(range(size)):
            raise ValidationError(
                f"not a permutation of 0..{size - 1}: {list(perm)}"
            )
        for j, k in enumerate(perm):
            rows[j][k] += w
    return DoublyStochasticMatrix.from_rows(rows)


@dataclass(frozen=True)
class ApproximationStep:
    """One row of the approximation table for a target map S: the
    level-n approximant, its exact weak defects against S at every
    level m <= n (all zero by construction), and the operator metric
    to S."""

    n: int
    approximant: PiecewiseTranslation
    weak_defects: tuple[Fraction, ...]
    metric: MetricReport

    @property
    def piece_count(self) -> int:
        return len(self.approximant)


def approximation_sequence(
    S: PiecewiseAffineMap | PiecewiseTranslation,
    n_max: int,
    basis: MetricBasis | None = None,
    max_level: int | None = None,
) -> list[ApproximationStep]:
    """For n = 1..n_max, realize the level-n block matrix of S as an
    invertible map T_n and report weak defects and the operator metric.

    The defects vanish exactly; the metric column should shrink as n
    grows, exhibiting strong (= weak, on isometries) approximation of S
    by invertible maps.
    """
    if n_max < 1:
        raise ValidationError(f"n_max must be >= 1, got {n_max}")
    check_level(n_max, max_level)
    if basis is None:
        basis = MetricBasis.dyadic()
    steps = []
    for n in range(1, n_max + 1):
        T_n = realize_iet(koopman_matrix(S, n, max_level), max_level)
        defects = tuple(weak_defect(T_n, S, m, max_level) for m in range(1, n + 1))
        steps.append(ApproximationStep(n, T_n, defects, op_metric(T_n, S, basis)))
    return steps
