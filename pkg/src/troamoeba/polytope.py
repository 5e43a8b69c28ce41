"""Delzant lattice polytopes: facets, vertices, face lattice, lattice points, charts.

A polytope is given by integer facet data ``(normal, offset)`` and describes

    P = { x : <normal_r, x> - offset_r >= 0  for all r }.

All combinatorics is exact (``fractions.Fraction``); only the boundedness and
interior probes use floating point LPs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import (
    EmptyInterior,
    NonPrimitiveNormal,
    NotAVertex,
    NotBounded,
    NotDelzant,
    OutsidePolytope,
    ValidationError,
)

DEFAULT_LOCATE_TOL = 1e-9


# -- exact linear algebra -----------------------------------------------------

def det_exact(rows: Sequence[Sequence]) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    a = [[Fraction(v) for v in row] for row in rows]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
    return det


def solve_exact(rows: Sequence[Sequence], rhs: Sequence) -> tuple[Fraction, ...] | None:
    """Solve a square system exactly; ``None`` if singular."""
    n = len(rows)
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[col])]
    return tuple(a[r][n] for r in range(n))


def inverse_exact(rows: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(rows)
    cols = [solve_exact(rows, [int(i == j) for i in range(n)]) for j in range(n)]
    if any(c is None for c in cols):
        raise ValidationError("singular matrix")
    return [[cols[j][i] for j in range(n)] for i in range(n)]


# -- types ---------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class FaceRef:
    """A face, identified by the sorted facet indices that vanish on it."""

    codim: int
    active: tuple[int, ...]

    @classmethod
    def of(cls, active: Iterable[int]) -> "FaceRef":
        act = tuple(sorted(set(active)))
        return cls(len(act), act)


@dataclass(frozen=True)
class AffineChart:
    """Chart ``l = A x - lam`` at a vertex; rows of ``A`` are the ordered normals."""

    vertex: tuple[Fraction, ...]
    facets: tuple[int, ...]
    A: tuple[tuple[int, ...], ...]
    lam: tuple[int, ...]

    def __call__(self, x):
        return np.asarray(self.A, dtype=float) @ np.asarray(x, dtype=float) - np.asarray(self.lam, dtype=float)


@dataclass(frozen=True)
class DelzantPolytope:
    normals: tuple[tuple[int, ...], ...]
    offsets: tuple[int, ...]
    vertices: tuple[tuple[Fraction, ...], ...] = field(repr=False)
    vertex_facets: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.normals[0])

    @property
    def n_facets(self) -> int:
        return len(self.normals)

    @cached_property
    def N(self) -> np.ndarray:
        """Normals as a float ``(d, n)`` array."""
        return np.asarray(self.normals, dtype=float)

    @cached_property
    def lam(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=float)

    @cached_property
    def vertex_array(self) -> np.ndarray:
        return np.asarray([[float(c) for c in v] for v in self.vertices])

    def ell(self, x) -> np.ndarray:
        """Facet functions ``l_r(x)``; ``x`` may be a single point or an ``(k, n)`` batch."""
        x = np.asarray(x, dtype=float)
        return x @ self.N.T - self.lam

    def ell_exact(self, x: Sequence) -> tuple[Fraction, ...]:
        xs = [Fraction(c) for c in x]
        return tuple(sum((a * b for a, b in zip(nu, xs)), Fraction(0)) - lam
                     for nu, lam in zip(self.normals, self.offsets))

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.ell(x) >= -tol))

    @cached_property
    def faces(self) -> tuple[FaceRef, ...]:
        """All faces, P itself included, sorted by codimension then active set.

        For a simple polytope every subset of the facets at a vertex cuts out a face.
        """
        seen = set()
        for act in self.vertex_facets:
            for k in range(len(act) + 1):
                for sub in itertools.combinations(act, k):
                    seen.add(sub)
        return tuple(sorted(FaceRef(len(a), a) for a in seen))

    def face_vertices(self, face: FaceRef) -> list[int]:
        s = set(face.active)
        return [i for i, act in enumerate(self.vertex_facets) if s.issubset(act)]

    @cached_property
    def centroid(self) -> np.ndarray:
        """Vertex average; strictly interior."""
        return self.vertex_array.mean(axis=0)

    @cached_property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertex_array
        return v.min(axis=0), v.max(axis=0)

    def face_chart(self, face: FaceRef) -> tuple[np.ndarray, np.ndarray]:
        """Integer affine parametrisation ``x = origin + B t`` of the face's affine span.

        ``origin`` is a vertex of the face (a lattice point) and the columns of ``B``
        form a basis of the face's direction lattice, read off the inverse vertex chart.
        """
        vi = self.face_vertices(face)[0]
        chart = self.vertex_chart(self.vertices[vi])
        Ainv = inverse_exact(chart.A)
        cols = [j for j, r in enumerate(chart.facets) if r not in face.active]
        B = np.asarray([[float(Ainv[i][j]) for j in cols] for i in range(self.dim)]).reshape(self.dim, len(cols))
        origin = np.asarray([float(c) for c in self.vertices[vi]])
        return origin, B

    def vertex_chart(self, v: Sequence, ordering: Sequence[int] | None = None) -> AffineChart:
        return vertex_chart(self, v, ordering)

    def lattice_points(self) -> list[tuple[int, ...]]:
        return lattice_points(self)

    def locate(self, x, tol: float = DEFAULT_LOCATE_TOL) -> FaceRef:
        return locate(self, x, tol)

    def translate(self, k: Sequence[int]) -> "DelzantPolytope":
        """``P + k``: offsets shift by ``<normal, k>``."""
        return build_polytope(
            (nu, lam + sum(a * b for a, b in zip(nu, k))) for nu, lam in zip(self.normals, self.offsets)
        )

    def transform(self, A: Sequence[Sequence[int]]) -> "DelzantPolytope":
        """``A P`` for unimodular integer ``A``: normals map by ``A^{-T}``."""
        Ainv = inverse_exact(A)
        out = []
        for nu, lam in zip(self.normals, self.offsets):
            new = [sum(Ainv[j][i] * nu[j] for j in range(self.dim)) for i in range(self.dim)]
            if any(c.denominator != 1 for c in new):
                raise ValidationError("base change must be unimodular")
            out.append(([int(c) for c in new], lam))
        return build_polytope(out)

    def face_lattice_text(self) -> str:
        """Face lattice as plain structured text, one face per line."""
        lines = [f"dimension {self.dim}", f"facets {self.n_facets}"]
        for r, (nu, lam) in enumerate(zip(self.normals, self.offsets)):
            lines.append(f"facet {r} normal {list(nu)} offset {lam}")
        for f in self.faces:
            verts = [_fmt_point(self.vertices[i]) for i in self.face_vertices(f)]
            lines.append(f"face codim {f.codim} active {list(f.active)} vertices {' '.join(verts)}")
        return "\n".join(lines) + "\n"


def _fmt_point(p) -> str:
    return "(" + ",".join(str(c) for c in p) + ")"


# -- operations ----------------------------------------------------------------

def build_polytope(facets: Iterable[tuple[Sequence[int], int]]) -> DelzantPolytope:
    """Validate facet data and certify the Delzant condition at every vertex."""
    facets = [(tuple(int(c) for c in nu), int(lam)) for nu, lam in facets]
    if not facets:
        raise ValidationError("no facets")
    n = len(facets[0][0])
    if n < 1 or any(len(nu) != n for nu, _ in facets):
        raise ValidationError("facet normals must share one positive dimension")
    if len(facets) < n + 1:
        raise NotBounded(f"need at least {n + 1} facets in dimension {n}, got {len(facets)}")
    for r, (nu, _) in enumerate(facets):
        if math.gcd(*nu) != 1:
            raise NonPrimitiveNormal(f"facet {r} normal {list(nu)} is not primitive")
    normals = tuple(nu for nu, _ in facets)
    offsets = tuple(lam for _, lam in facets)

    N = np.asarray(normals, dtype=float)
    lam = np.asarray(offsets, dtype=float)
    if np.linalg.matrix_rank(N) < n:
        raise NotBounded("normals do not span")
    # Chebyshev-type probe: maximise t with N x - lam >= t.
    res = linprog(np.r_[np.zeros(n), -1.0], A_ub=np.c_[-N, np.ones(len(N))], b_ub=-lam,
                  bounds=[(None, None)] * n + [(None, 1.0)], method="highs")
    if res.status == 2 or (res.status == 0 and -res.fun <= 1e-12):
        raise EmptyInterior("polytope has empty interior")
    for i in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = -sign
            r = linprog(c, A_ub=-N, b_ub=-lam, bounds=[(None, None)] * n, method="highs")
            if r.status == 3:
                raise NotBounded(f"unbounded in direction {'+' if sign > 0 else '-'}x{i + 1}")

    verts: dict[tuple[Fraction, ...], set[int]] = {}
    for sub in itertools.combinations(range(len(facets)), n):
        x = solve_exact([normals[r] for r in sub], [offsets[r] for r in sub])
        if x is None or x in verts:
            continue
        ells = [sum((a * b for a, b in zip(nu, x)), Fraction(0)) - l for nu, l in zip(normals, offsets)]
        if all(e >= 0 for e in ells):
            verts[x] = {r for r, e in enumerate(ells) if e == 0}
    vertices = tuple(sorted(verts))
    vertex_facets = []
    for v in vertices:
        act = tuple(sorted(verts[v]))
        if len(act) != n:
            raise NotDelzant(f"vertex {_fmt_point(v)} lies on {len(act)} facets (not simple)",
                             vertex=v, facets=act)
        d = det_exact([normals[r] for r in act])
        if abs(d) != 1:
            raise NotDelzant(
                f"vertex {_fmt_point(v)}: normals of facets {[r + 1 for r in act]} have determinant {d}",
                vertex=v, determinant=d, facets=act)
        vertex_facets.append(act)
    return DelzantPolytope(normals, offsets, vertices, tuple(vertex_facets))


def lattice_points(P: DelzantPolytope) -> list[tuple[int, ...]]:
    """All integer points of the closed polytope, lexicographically sorted."""
    lo = [math.floor(min(v[i] for v in P.vertices)) for i in range(P.dim)]
    hi = [math.ceil(max(v[i] for v in P.vertices)) for i in range(P.dim)]
    out = []
    for m in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        if all(sum(a * b for a, b in zip(nu, m)) >= lam for nu, lam in zip(P.normals, P.offsets)):
            out.append(tuple(m))
    return out


def locate(P: DelzantPolytope, x, tol: float = DEFAULT_LOCATE_TOL) -> FaceRef:
    """Minimal face containing ``x`` (within ``tol`` in the facet values)."""
    ell = P.ell(x)
    if np.any(ell < -tol):
        r = int(np.argmin(ell))
        raise OutsidePolytope(f"point {list(np.asarray(x, float))} violates facet {r} by {-ell[r]:.3g}")
    return FaceRef.of(np.flatnonzero(np.abs(ell) <= tol).tolist())


def vertex_chart(P: DelzantPolytope, v: Sequence, ordering: Sequence[int] | None = None) -> AffineChart:
    v = tuple(Fraction(c) for c in v)
    try:
        idx = P.vertices.index(v)
    except ValueError:
        raise NotAVertex(f"{_fmt_point(v)} is not a vertex") from None
    act = P.vertex_facets[idx]
    order = tuple(act if ordering is None else ordering)
    if sorted(order) != list(act):
        raise ValidationError(f"ordering {list(order)} is not a permutation of facets {list(act)}")
    return AffineChart(v, order, tuple(P.normals[r] for r in order), tuple(P.offsets[r] for r in order))


# -- named shapes used throughout tests and scenarios ---------------------------

def standard_simplex(n: int = 2, k: int = 1) -> DelzantPolytope:
    """``k`` times the standard simplex in R^n."""
    facets = [(tuple(int(i == j) for j in range(n)), 0) for i in range(n)]
    facets.append((tuple([-1] * n), -k))
    return build_polytope(facets)


def box(sides: Sequence[int]) -> DelzantPolytope:
    n = len(sides)
    facets = []
    for i, a in enumerate(sides):
        e = tuple(int(i == j) for j in range(n))
        facets.append((e, 0))
        facets.append((tuple(-c for c in e), -a))
    return build_polytope(facets)


def segment(a: int = 0, b: int = 1) -> DelzantPolytope:
    return build_polytope([((1,), a), ((-1,), -b)])


def hexagon() -> DelzantPolytope:
    """conv{(1,0),(1,1),(0,1),(-1,0),(-1,-1),(0,-1)}: the del Pezzo surface of degree 6."""
    return build_polytope([
        ((1, 0), -1), ((0, 1), -1), ((-1, 0), -1), ((0, -1), -1), ((-1, 1), -1), ((1, -1), -1),
    ])
