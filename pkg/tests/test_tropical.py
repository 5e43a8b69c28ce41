from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from troamoeba.errors import ValidationError
from troamoeba.potential import Quadratic, identity_quadratic
from troamoeba.tropical import (
    TropicalPolynomial,
    build_gq_valuation,
    tropical_corners_1d,
    tropical_curve_2d,
    tropical_membership,
    tropical_membership_batch,
    tropical_value,
)

from conftest import G1

TRIPOD = [((0, 0), 0), ((1, 0), 0), ((0, 1), 0)]


def _rays(C):
    return sorted((C.vertices[i], tuple(int(c) for c in d)) for i, d in C.rays)


def test_tripod():
    C = tropical_curve_2d(TropicalPolynomial.from_items(TRIPOD))
    assert C.vertices == ((0, 0),)
    assert [d for _, d in _rays(C)] == [(-1, 0), (0, -1), (1, 1)]
    assert C.is_balanced() and not C.segments


def test_gq_tripod():
    T = build_gq_valuation(identity_quadratic(2), [(0, 0), (1, 0), (0, 1)])
    assert T.terms == {(0, 0): 0, (1, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)}
    C = tropical_curve_2d(T)
    assert C.vertices == ((Fraction(1, 2), Fraction(1, 2)),)
    assert C.is_balanced()


def test_two_term_line_and_weight():
    C = tropical_curve_2d(TropicalPolynomial.from_items([((0, 0), 0), ((1, 1), 0)]))
    assert sorted(tuple(int(c) for c in d) for _, d in C.rays) == [(-1, 1), (1, -1)]
    C2 = tropical_curve_2d(TropicalPolynomial.from_items([((0, 0), 0), ((2, 0), 0)]))
    assert set(C2.ray_weights) == {2}


def test_membership_exact_and_float():
    T = TropicalPolynomial.from_items(TRIPOD)
    assert tropical_membership(T, (Fraction(0), Fraction(-5)))
    assert not tropical_membership(T, (Fraction(1), Fraction(-5)))
    val, arg = tropical_value(T, (Fraction(3), Fraction(3)))
    assert val == 3 and arg == {(1, 0), (0, 1)}
    U = np.array([[0.0, -5.0], [1.0, -5.0], [2.0, 2.0 + 1e-12], [-1.0, -1.0]])
    assert tropical_membership_batch(T, U).tolist() == [True, False, True, False]


def test_corners_1d():
    T = TropicalPolynomial.from_items([((0,), 0), ((1,), Fraction(1, 3)), ((2,), 1)])
    assert tropical_corners_1d(T) == [Fraction(1, 3), Fraction(2, 3)]
    T = TropicalPolynomial.from_items([((0,), 0), ((1,), 1), ((2,), 0)])
    assert tropical_corners_1d(T) == [0]
    with pytest.raises(ValidationError):
        tropical_corners_1d(TropicalPolynomial.from_items(TRIPOD))


def test_invalid_polynomials():
    with pytest.raises(ValidationError):
        TropicalPolynomial.from_items([((0, 0), 0)])
    with pytest.raises(ValidationError):
        TropicalPolynomial.from_items([((0, 0), 0), ((1,), 0)])
    with pytest.raises(ValidationError):
        TropicalPolynomial.from_items([((0, 0), 0), ((1, 0), float("nan"))])
    with pytest.raises(ValidationError):
        TropicalPolynomial.from_items([((0, 0), 0), ((1, 0), 0)], coeffs={(0, 0): 1, (1, 0): 0})


def test_gq_uses_exact_values():
    T = build_gq_valuation(Quadratic(G1), [(0, 0), (1, 0), (0, 1), (1, 1)])
    assert T.terms[(1, 1)] == Fraction(3, 2) * 2 / 2 + Fraction(3, 4)


SIMPLEX2 = [(i, j) for i in range(3) for j in range(3 - i)]


@given(st.lists(st.fractions(-3, 3, max_denominator=7), min_size=6, max_size=6))
def test_random_curves_balanced_and_on_locus(vals):
    T = TropicalPolynomial.from_items(zip(SIMPLEX2, vals))
    C = tropical_curve_2d(T)
    assert C.is_balanced()
    for v in C.vertices:
        assert tropical_membership(T, v)
    for a, b in C.segments:
        mid = tuple((x + y) / 2 for x, y in zip(C.vertices[a], C.vertices[b]))
        assert len(tropical_value(T, mid)[1]) == 2
    for i, d in C.rays:
        far = tuple(x + 1000 * Fraction(c) for x, c in zip(C.vertices[i], d))
        assert tropical_membership(T, far)


@given(st.lists(st.fractions(-3, 3, max_denominator=5), min_size=3, max_size=3),
       st.fractions(-4, 4, max_denominator=3), st.fractions(-4, 4, max_denominator=3))
def test_off_curve_points_have_unique_max(vals, x, y):
    T = TropicalPolynomial.from_items(zip([(0, 0), (1, 0), (0, 1)], vals))
    C = tropical_curve_2d(T)
    (vx, vy), = C.vertices
    on = (x - vx == 0 and y <= vy) or (y - vy == 0 and x <= vx) or (x - vx == y - vy and x >= vx)
    assert tropical_membership(T, (x, y)) == on


def test_shift_invariance():
    T = TropicalPolynomial.from_items(zip(SIMPLEX2, [0, 1, 3, 1, 2, 3]))
    assert tropical_curve_2d(T).to_text() == tropical_curve_2d(T.shifted(Fraction(7, 3))).to_text()
