import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from troamoeba.errors import ValidationError
from troamoeba.potential import PotentialFamily, Quadratic, identity_quadratic
from troamoeba.quantization import (
    SectionData,
    bs_count,
    bs_fibers,
    convergence_table,
    density,
    dirac_concentration,
    f_m,
    fourier_pairing,
    h_m_s,
    log_section_norm_l1,
    norm_log_derivative,
    norm_log_derivative_fd,
    polarization_bound,
    polarization_gap,
    section_norm_l1,
)

from conftest import G1, interior_points


def test_f_m_segment():
    psi = identity_quadratic(1)
    for x in (0.1, 0.5, 0.9):
        assert f_m(psi, [0], [x]) == pytest.approx(x * x / 2)
        assert f_m(psi, [1], [x]) == pytest.approx(x * x / 2 - x)
    assert f_m(psi, [1], [1.0]) == pytest.approx(-0.5)


@given(st.integers(0, 2), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_f_m_minimised_at_m(k, a, b):
    psi = Quadratic(G1)
    m = [(0, 0), (1, 0), (0, 1)][k]
    x = np.array([a, b])
    assert f_m(psi, m, x) >= -psi.evaluate(np.asarray(m, float)[None])[0][0] - 1e-12


def test_h_split_consistent(simplex_family, rng):
    from troamoeba.quantization import _h_split
    X = interior_points(simplex_family.polytope, 50, rng)
    for s in (0.5, 7.0, 300.0):
        h0, f = _h_split(simplex_family, s, (1, 0), X)
        assert np.allclose(h0 + s * f, h_m_s(simplex_family, s, (1, 0), X), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("m", [(0,), (1,)])
@pytest.mark.parametrize("s", [0.5, 5.0, 60.0])
def test_norm_matches_scipy_quad_1d(seg_family, m, s):
    f = lambda x: math.exp(-h_m_s(seg_family, s, m, [x]))
    ref = 2 * math.pi * integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert section_norm_l1(seg_family, s, m) == pytest.approx(ref, rel=1e-6)


def test_norm_matches_scipy_dblquad_2d(simplex):
    F = PotentialFamily(simplex, Quadratic(G1))
    s, m = 3.0, (1, 0)
    f = lambda y, x: math.exp(-h_m_s(F, s, m, [x, y]))
    ref = (2 * math.pi) ** 2 * integrate.dblquad(f, 0, 1, 0, lambda x: 1 - x, epsabs=0, epsrel=1e-10)[0]
    assert section_norm_l1(F, s, m) == pytest.approx(ref, rel=1e-6)


def test_log_norm_finite_at_huge_s(seg_family):
    # the norm itself is ~ e^{s/2} and overflows; its logarithm does not
    s = 1e6
    v = log_section_norm_l1(seg_family, s, (1,))
    assert v / s == pytest.approx(0.5, abs=1e-4)


def test_dirac_concentration(simplex_family):
    fr = [dirac_concentration(simplex_family, s, (0, 0), 0.1) for s in (10, 100, 1000, 10000)]
    assert all(a < b for a, b in zip(fr, fr[1:]))
    assert fr[-1] > 0.999
    with pytest.raises(ValidationError):
        dirac_concentration(simplex_family, 10.0, (0, 0), 0.0)


@pytest.mark.parametrize("m", [(0,), (1,)])
def test_log_derivative_fd_and_limit(seg_family, m):
    for s in (5.0, 50.0):
        assert norm_log_derivative(seg_family, s, m) == pytest.approx(norm_log_derivative_fd(seg_family, s, m),
                                                                         rel=1e-3, abs=1e-5)
    assert norm_log_derivative(seg_family, 1e4, m) == pytest.approx(m[0] ** 2 / 2, abs=1e-3)


def test_convergence_table(seg_family):
    rows = convergence_table(seg_family, (1,), [10, 100, 1000, 10000], 0.1)
    assert [r["s"] for r in rows] == [10, 100, 1000, 10000]
    assert rows[-1]["mass_fraction"] > 0.998
    assert rows[-1]["log_derivative"] == pytest.approx(0.5, abs=1e-3)


def test_bs_counts(simplex, square2, hexa):
    assert (bs_count(simplex), bs_count(square2), bs_count(hexa)) == (3, 9, 7)
    codims = sorted(f.codim for f in bs_fibers(hexa))
    assert codims == [0, 2, 2, 2, 2, 2, 2]
    assert {f.torus_dim for f in bs_fibers(square2)} == {0, 1, 2}


def test_polarization(seg_family, simplex_family, rng):
    for s in (1.0, 10.0, 1e3):
        assert polarization_gap(seg_family, s, [0.5]) == pytest.approx(1 / (2 + s))
        for x in interior_points(simplex_family.polytope, 20, rng):
            assert polarization_gap(simplex_family, s, x) <= polarization_bound(simplex_family, s, x) * (1 + 1e-12)


def test_pairing_and_density(seg_family):
    assert fourier_pairing(seg_family, 20.0, (1,), lambda X: np.ones(len(X))) == pytest.approx(1.0)
    means = [fourier_pairing(seg_family, s, (1,), lambda X: X[:, 0]) for s in (10.0, 100.0, 1000.0)]
    assert all(a < b for a, b in zip(means, means[1:])) and means[-1] > 0.95
    total = integrate.quad(lambda x: density(seg_family, 5.0, (0,), [x])[0], 0, 1, epsrel=1e-10)[0]
    assert total == pytest.approx(1.0, rel=1e-6)


def test_section_data_validates(seg_family):
    SectionData((1,), seg_family, 3.0)
    with pytest.raises(ValidationError):
        SectionData((2,), seg_family, 3.0)
