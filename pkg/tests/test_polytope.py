from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from troamoeba.errors import EmptyInterior, NonPrimitiveNormal, NotAVertex, NotBounded, NotDelzant, OutsidePolytope
from troamoeba.polytope import build_polytope, det_exact, lattice_points, locate, vertex_chart

from conftest import interior_points


def test_simplex_vertices(simplex):
    assert sorted(simplex.vertices) == [(0, 0), (0, 1), (1, 0)]
    assert all(isinstance(c, Fraction) for v in simplex.vertices for c in v)


def test_square_delzant(square2):
    unit = build_polytope([((1, 0), 0), ((0, 1), 0), ((-1, 0), -1), ((0, -1), -1)])
    assert len(unit.vertices) == 4
    for facets in unit.vertex_facets:
        assert abs(det_exact([unit.normals[r] for r in facets])) == 1


def test_not_delzant_reports_vertex():
    with pytest.raises(NotDelzant) as err:
        build_polytope([((1, 0), 0), ((0, 1), 0), ((-1, -2), -2)])
    assert "-2" in str(err.value) or "2" in str(err.value)


@pytest.mark.parametrize("facets, exc", [
    ([((1, 0), 0), ((0, 1), 0)], NotBounded),
    ([((1, 0), 0), ((-1, 0), 0), ((0, 1), 0), ((0, -1), -1)], EmptyInterior),
    ([((2, 0), 0), ((0, 1), 0), ((-1, -1), -1)], NonPrimitiveNormal),
])
def test_invalid_polytopes(facets, exc):
    with pytest.raises(exc):
        build_polytope(facets)


def test_lattice_points(simplex, square2, hexa):
    assert lattice_points(simplex) == [(0, 0), (0, 1), (1, 0)]
    assert len(lattice_points(square2)) == 9
    pts = lattice_points(hexa)
    assert len(pts) == 7 and (0, 0) in pts
    assert pts == sorted(pts)


def test_locate(simplex):
    assert locate(simplex, [0.2, 0.3]).codim == 0
    edge = locate(simplex, [0.5, 0.5])
    assert edge.codim == 1 and simplex.normals[edge.active[0]] == (-1, -1)
    assert locate(simplex, [1, 0]).codim == 2
    with pytest.raises(OutsidePolytope):
        locate(simplex, [-0.1, 0.3])


def test_vertex_charts(simplex):
    c = vertex_chart(simplex, (0, 0), ordering=(0, 1))
    assert c.A == ((1, 0), (0, 1)) and c.lam == (0, 0)
    c = vertex_chart(simplex, (1, 0), ordering=(1, 2))
    assert c.A == ((0, 1), (-1, -1)) and c.lam == (0, -1)
    assert np.allclose(c([1, 0]), 0)
    with pytest.raises(NotAVertex):
        vertex_chart(simplex, (0.5, 0.5))


def test_square_vertex_chart():
    unit = build_polytope([((1, 0), 0), ((0, 1), 0), ((-1, 0), -1), ((0, -1), -1)])
    c = vertex_chart(unit, (1, 1))
    assert sorted(c.A) == sorted(((-1, 0), (0, -1))) and c.lam == (-1, -1)


def test_every_vertex_chart_is_unimodular(hexa):
    for v in hexa.vertices:
        c = vertex_chart(hexa, v)
        assert abs(det_exact(c.A)) == 1
        assert all(sum(a * x for a, x in zip(row, v)) - l == 0 for row, l in zip(c.A, c.lam))


def test_face_lattice_closed_under_intersection(hexa, square2):
    for P in (hexa, square2):
        active = {f.active for f in P.faces}
        for a, b in combinations(active, 2):
            meet = tuple(sorted(set(a) | set(b)))
            if P.faces and any(set(meet) <= set(P.vertex_facets[i]) for i in range(len(P.vertices))):
                assert meet in active


def test_face_lattice_text(simplex):
    text = simplex.face_lattice_text()
    assert text.startswith("dimension 2") and text.count("face codim") == 7


@given(st.tuples(st.integers(-5, 5), st.integers(-5, 5)))
def test_lattice_points_translate(k):
    from troamoeba.polytope import hexagon
    P = hexagon()
    moved = lattice_points(P.translate(k))
    assert moved == sorted(tuple(a + b for a, b in zip(m, k)) for m in lattice_points(P))


def test_locate_consistent(hexa, rng):
    X = interior_points(hexa, 50, rng, margin=0.0)
    # push half the points onto facets to exercise the active sets
    N = np.asarray(hexa.normals, dtype=float)
    X[::2] = X[::2] / np.max(-X[::2] @ N.T, axis=1)[:, None]  # all offsets are -1: radial push to the boundary
    for x in X:
        f = locate(hexa, x, tol=1e-9)
        L = hexa.ell(x)
        assert set(f.active) == set(np.flatnonzero(np.abs(L) <= 1e-9))
