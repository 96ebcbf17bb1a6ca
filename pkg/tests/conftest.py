"""Shared random generators for property tests.

Everything is driven by an explicit seeded random.Random so failures
reproduce; weights and breakpoints stay on rational grids so all
arithmetic downstream is exact.
"""

from __future__ import annotations

import random
from fractions import Fraction

from koopman_forge import (
    DoublyStochasticMatrix,
    PiecewiseTranslation,
    StepFunction,
    birkhoff_combination,
    doubling,
    half_swap,
    identity,
    identity_affine,
    realize_iet,
    rotation,
    tent,
)


def rand_step_function(
    rng: random.Random, max_cells: int = 6, max_den: int = 16
) -> StepFunction:
    cuts = set()
    for _ in range(rng.randint(0, max_cells - 1)):
        d = rng.randint(2, max_den)
        cuts.add(Fraction(rng.randint(1, d - 1), d))
    bps = [Fraction(0)] + sorted(cuts) + [Fraction(1)]
    vals = [
        Fraction(rng.randint(-3, 3), rng.randint(1, 4))
        for _ in range(len(bps) - 1)
    ]
    return StepFunction(tuple(bps), tuple(vals))


def rand_permutation(rng: random.Random, size: int) -> tuple[int, ...]:
    p = list(range(size))
    rng.shuffle(p)
    return tuple(p)


def rand_weights(rng: random.Random, k: int, grid: int = 24) -> list[Fraction]:
    # k nonnegative rationals summing to exactly 1: gaps of sorted cuts
    cuts = sorted(Fraction(rng.randint(0, grid), grid) for _ in range(k - 1))
    edges = [Fraction(0)] + cuts + [Fraction(1)]
    return [edges[i + 1] - edges[i] for i in range(k)]


def rand_doubly_stochastic(
    rng: random.Random, n: int, terms: int = 3
) -> DoublyStochasticMatrix:
    perms = [rand_permutation(rng, 2**n) for _ in range(terms)]
    return birkhoff_combination(perms, rand_weights(rng, terms))


def rand_translation(rng: random.Random, n: int) -> PiecewiseTranslation:
    return realize_iet(rand_doubly_stochastic(rng, n))


def map_pool(rng: random.Random) -> list:
    """Mixed bag of invertible and non-invertible measure-preserving maps."""
    pool = [
        identity(),
        half_swap(),
        rotation(Fraction(1, 3)),
        rotation(Fraction(3, 8)),
        doubling(),
        tent(),
        identity_affine(),
    ]
    pool.extend(rand_translation(rng, rng.randint(1, 3)) for _ in range(5))
    return pool
