"""Measure-preserving maps: piecewise translations and affine branches."""

from __future__ import annotations

import random
from fractions import Fraction as F

import pytest

from conftest import map_pool, rand_step_function, rand_translation
from koopman_forge import (
    Branch,
    Interval,
    Piece,
    PiecewiseAffineMap,
    PiecewiseTranslation,
    ValidationError,
    builtin_map,
    doubling,
    half_swap,
    identity,
    identity_affine,
    koopman_apply,
    map_from_json_obj,
    rotation,
    tent,
)


# -- pieces and branches ------------------------------------------------


def test_piece_image():
    p = Piece(Interval(F(1, 4), F(1, 2)), F(1, 4))
    assert p.image == Interval(F(1, 2), F(3, 4))


def test_branch_images():
    up = Branch(Interval(0, F(1, 2)), F(2), F(0))
    assert up.image == Interval(0, 1)
    down = Branch(Interval(F(1, 2), 1), F(-2), F(2))
    assert down.image == Interval(0, 1)


def test_branch_must_stay_inside_unit_interval():
    with pytest.raises(ValidationError):
        Branch(Interval(0, 1), F(2), F(0))
    with pytest.raises(ValidationError):
        Branch(Interval(0, F(1, 2)), F(1), F(3, 4))
    with pytest.raises(ValidationError):
        Branch(Interval(0, F(1, 2)), F(0), F(0))


# -- piecewise translations ---------------------------------------------


def test_translation_requires_source_tiling():
    with pytest.raises(ValidationError):
        PiecewiseTranslation([Piece(Interval(0, F(1, 2)), F(0))])
    with pytest.raises(ValidationError):
        PiecewiseTranslation(
            [
                Piece(Interval(0, F(1, 2)), F(0)),
                Piece(Interval(F(1, 4), 1), F(0)),
            ]
        )


def test_translation_requires_image_tiling():
    # both halves land on [0, 1/2): not invertible
    with pytest.raises(ValidationError):
        PiecewiseTranslation(
            [
                Piece(Interval(0, F(1, 2)), F(0)),
                Piece(Interval(F(1, 2), 1), F(-1, 2)),
            ]
        )


def test_translation_merges_contiguous_equal_offsets():
    T = PiecewiseTranslation(
        [
            Piece(Interval(0, F(1, 4)), F(0)),
            Piece(Interval(F(1, 4), F(1, 2)), F(0)),
            Piece(Interval(F(1, 2), 1), F(0)),
        ]
    )
    assert T == identity()
    assert len(T) == 1


def test_rotation_pointwise():
    R = rotation(F(1, 4))
    assert R(F(0)) == F(1, 4)
    assert R(F(1, 2)) == F(3, 4)
    assert R(F(7, 8)) == F(1, 8)
    assert rotation(F(0)) == identity()
    assert rotation(F(1, 2)) == half_swap()


def test_translation_apply_matches_piece_arithmetic():
    rng = random.Random(201)
    for _ in range(40):
        T = rand_translation(rng, rng.randint(1, 3))
        for p in T.pieces:
            mid = (p.source.lo + p.source.hi) / 2
            assert T(mid) == mid + p.offset
            assert p.image.contains(T(p.source.lo))


def test_translation_rejects_points_outside_domain():
    with pytest.raises(ValidationError):
        identity()(F(3, 2))
    with pytest.raises(ValidationError):
        identity()(F(1))


def test_inverse_round_trip_pointwise():
    rng = random.Random(202)
    for _ in range(40):
        T = rand_translation(rng, rng.randint(1, 3))
        S = T.inverse()
        for _ in range(10):
            x = F(rng.randint(0, 47), 48)
            assert S(T(x)) == x
            assert T(S(x)) == x


def test_compose_matches_pointwise_composition():
    rng = random.Random(203)
    for _ in range(40):
        A = rand_translation(rng, rng.randint(1, 3))
        B = rand_translation(rng, rng.randint(1, 3))
        C = A.compose(B)  # x -> A(B(x))
        for _ in range(10):
            x = F(rng.randint(0, 47), 48)
            assert C(x) == A(B(x))


def test_group_laws():
    rng = random.Random(204)
    for _ in range(30):
        A = rand_translation(rng, rng.randint(1, 3))
        B = rand_translation(rng, rng.randint(1, 3))
        C = rand_translation(rng, rng.randint(1, 2))
        assert A.compose(identity()) == A
        assert identity().compose(A) == A
        assert A.compose(A.inverse()) == identity()
        assert A.inverse().compose(A) == identity()
        assert A.compose(B).compose(C) == A.compose(B.compose(C))
        assert A.compose(B).inverse() == B.inverse().compose(A.inverse())


def test_powers():
    R = rotation(F(1, 8))
    assert R.power(0) == identity()
    assert R.power(3) == rotation(F(3, 8))
    assert R.power(8) == identity()
    assert R.power(-1) == rotation(F(7, 8))
    rng = random.Random(205)
    for _ in range(20):
        T = rand_translation(rng, 2)
        assert T.power(2) == T.compose(T)
        assert T.power(-2) == T.inverse().compose(T.inverse())


def test_translation_preimage_conserves_length():
    rng = random.Random(206)
    for _ in range(40):
        T = rand_translation(rng, rng.randint(1, 3))
        lo = F(rng.randint(0, 30), 32)
        hi = F(rng.randint(int(lo * 32) + 1, 32), 32)
        window = Interval(lo, hi)
        parts = T.preimage(window)
        assert sum(p.length for p in parts) == window.length
        for p in parts:
            mid = (p.lo + p.hi) / 2
            assert window.contains(T(mid))


def test_translation_json_round_trip():
    rng = random.Random(207)
    for _ in range(20):
        T = rand_translation(rng, rng.randint(1, 3))
        assert PiecewiseTranslation.from_json_obj(T.to_json_obj()) == T
        assert map_from_json_obj(T.to_json_obj()) == T


# -- piecewise affine maps ----------------------------------------------


def test_doubling_pointwise():
    D = doubling()
    assert D(F(0)) == F(0)
    assert D(F(1, 3)) == F(2, 3)
    assert D(F(2, 3)) == F(1, 3)
    assert D(F(1, 4)) == F(1, 2)
    assert D(F(3, 4)) == F(1, 2)


def test_tent_pointwise():
    T = tent()
    assert T(F(0)) == F(0)
    assert T(F(1, 4)) == F(1, 2)
    assert T(F(3, 4)) == F(1, 2)
    assert T(F(1, 2)) == F(0)  # peak value 1 wraps to 0 in [0,1)
    assert T(F(7, 8)) == F(1, 4)


def test_affine_requires_unit_density():
    # single expanding branch covers [0,1) only half the time
    with pytest.raises(ValidationError):
        PiecewiseAffineMap([Branch(Interval(0, F(1, 2)), F(1), F(0))])
    # two branches stack on the left half: density 2 there, 0 elsewhere
    with pytest.raises(ValidationError):
        PiecewiseAffineMap(
            [
                Branch(Interval(0, F(1, 2)), F(1), F(0)),
                Branch(Interval(F(1, 2), 1), F(1), F(-1, 2)),
            ]
        )
    # slope 3 with three branches is fine: a valid tripling map
    PiecewiseAffineMap(
        [
            Branch(Interval(0, F(1, 3)), F(3), F(0)),
            Branch(Interval(F(1, 3), F(2, 3)), F(3), F(-1)),
            Branch(Interval(F(2, 3), 1), F(3), F(-2)),
        ]
    )


def test_doubling_preimage():
    D = doubling()
    got = D.preimage(Interval(0, F(1, 2)))
    assert got == [Interval(0, F(1, 4)), Interval(F(1, 2), F(3, 4))]


def test_tent_preimage_of_reversing_branch():
    T = tent()
    got = T.preimage(Interval(0, F(1, 2)))
    assert got == [Interval(0, F(1, 4)), Interval(F(3, 4), 1)]
    assert sum(p.length for p in T.preimage(Interval(F(1, 3), F(2, 3)))) == F(1, 3)


def test_affine_preimage_conserves_length():
    rng = random.Random(208)
    for S in (doubling(), tent(), identity_affine()):
        for _ in range(30):
            lo = F(rng.randint(0, 30), 32)
            hi = F(rng.randint(int(lo * 32) + 1, 32), 32)
            window = Interval(lo, hi)
            parts = S.preimage(window)
            assert sum(p.length for p in parts) == window.length


def test_affine_json_round_trip():
    for S in (doubling(), tent(), identity_affine()):
        assert PiecewiseAffineMap.from_json_obj(S.to_json_obj()) == S
        assert map_from_json_obj(S.to_json_obj()) == S


# -- koopman action -----------------------------------------------------


def test_koopman_apply_is_composition():
    rng = random.Random(209)
    for T in map_pool(rng):
        for _ in range(15):
            f = rand_step_function(rng)
            g = koopman_apply(T, f)
            for iv, v in g.cells():
                mid = (iv.lo + iv.hi) / 2
                assert v == f.value_at(T(mid))


def test_koopman_apply_is_isometry():
    rng = random.Random(210)
    for T in map_pool(rng):
        for _ in range(15):
            f = rand_step_function(rng)
            assert koopman_apply(T, f).norm_sq() == f.norm_sq()


def test_koopman_functorial_on_compositions():
    rng = random.Random(211)
    for _ in range(25):
        A = rand_translation(rng, rng.randint(1, 3))
        B = rand_translation(rng, rng.randint(1, 3))
        f = rand_step_function(rng)
        lhs = koopman_apply(A.compose(B), f)
        rhs = koopman_apply(B, koopman_apply(A, f))
        assert lhs == rhs


# -- builtins ------------------------------------------------------------


def test_builtin_map_names():
    assert builtin_map("identity") == identity()
    assert builtin_map("halfswap") == half_swap()
    assert builtin_map("rotation:1/3") == rotation(F(1, 3))
    assert builtin_map("doubling") == doubling()
    assert builtin_map("tent") == tent()
    with pytest.raises(ValidationError):
        builtin_map("baker")
    with pytest.raises(ValidationError):
        builtin_map("rotation:x")
