"""Tropical polynomials ``u -> max_m (m.u - v(m))`` and their corner loci.

In the plane the corner locus is computed exactly: every pair of terms gives a
bisector line, the other terms cut it down to an interval, and the surviving
intervals are the edges. With rational valuations all vertices and directions
are ``Fraction`` tuples.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateInput, ValidationError
from .potential import ConvexFunction

FLOAT_TIE_TOL = 1e-9


def _exact(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v.strip())
    v = float(v)
    if not math.isfinite(v):
        raise ValidationError(f"valuation {v} is not finite")
    return Fraction(repr(v))


@dataclass(frozen=True)
class TropicalPolynomial:
    """Terms ``m -> v(m)`` with optional complex coefficients ``a_m``."""

    terms: Mapping[tuple[int, ...], Fraction]
    coeffs: Mapping[tuple[int, ...], complex] | None = None

    def __post_init__(self):
        if len(self.terms) < 2:
            raise ValidationError("a tropical polynomial needs at least two terms")
        dims = {len(m) for m in self.terms}
        if len(dims) != 1:
            raise ValidationError("exponents of mixed dimension")
        if self.coeffs is not None:
            if set(self.coeffs) != set(self.terms):
                raise ValidationError("coefficients must be given for exactly the terms")
            if any(a == 0 for a in self.coeffs.values()):
                raise ValidationError("coefficients must be nonzero")

    @classmethod
    def from_items(cls, items: Iterable[tuple[Sequence[int], object]], coeffs=None) -> "TropicalPolynomial":
        terms = {tuple(int(c) for c in m): _exact(v) for m, v in items}
        if coeffs is not None:
            coeffs = {tuple(int(c) for c in m): complex(a) for m, a in coeffs.items()}
        return cls(terms, coeffs)

    @property
    def dim(self) -> int:
        return len(next(iter(self.terms)))

    @property
    def exponents(self) -> list[tuple[int, ...]]:
        return sorted(self.terms)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(M, v, a)`` as float/complex arrays in sorted exponent order."""
        ms = self.exponents
        M = np.asarray(ms, dtype=float)
        v = np.asarray([float(self.terms[m]) for m in ms])
        a = np.asarray([self.coeffs[m] if self.coeffs else 1.0 for m in ms], dtype=complex)
        return M, v, a

    def restrict(self, keep) -> "TropicalPolynomial | None":
        """Sub-polynomial on the exponents satisfying ``keep``; ``None`` if fewer than 2 remain."""
        ms = [m for m in self.terms if keep(m)]
        if len(ms) < 2:
            return None
        return TropicalPolynomial({m: self.terms[m] for m in ms},
                                  {m: self.coeffs[m] for m in ms} if self.coeffs else None)

    def with_coefficients(self, coeffs) -> "TropicalPolynomial":
        return TropicalPolynomial(dict(self.terms), {m: complex(coeffs[m]) for m in self.terms})

    def shifted(self, c) -> "TropicalPolynomial":
        c = _exact(c)
        return TropicalPolynomial({m: v + c for m, v in self.terms.items()}, self.coeffs)


@dataclass(frozen=True)
class PolyhedralComplex:
    """Vertices, bounded segments and rays, with lattice-length weights.

    Ray directions are primitive integer vectors when the input is rational.
    """

    vertices: tuple[tuple, ...]
    segments: tuple[tuple[int, int], ...] = ()
    rays: tuple[tuple[int, tuple], ...] = ()
    segment_weights: tuple[int, ...] = ()
    ray_weights: tuple[int, ...] = ()
    labels: tuple[str, ...] = field(default=(), compare=False)

    @property
    def dim(self) -> int:
        return len(self.vertices[0]) if self.vertices else 0

    def vertex_array(self) -> np.ndarray:
        return np.asarray([[float(c) for c in v] for v in self.vertices]).reshape(len(self.vertices), -1)

    def unit_rays(self) -> list[tuple[int, np.ndarray]]:
        out = []
        for i, d in self.rays:
            d = np.asarray([float(c) for c in d])
            out.append((i, d / np.linalg.norm(d)))
        return out

    def segment_array(self) -> np.ndarray:
        """``(k, 2, n)`` float array of segment endpoints."""
        V = self.vertex_array()
        if not self.segments:
            return np.zeros((0, 2, self.dim))
        return np.stack([V[[a for a, _ in self.segments]], V[[b for _, b in self.segments]]], axis=1)

    def is_balanced(self) -> bool:
        """Weighted primitive edge directions sum to zero at every vertex with edges."""
        sums: dict[int, list] = {}
        for (a, b), w in zip(self.segments, self.segment_weights or [1] * len(self.segments)):
            d = _primitive([Fraction(y) - Fraction(x) for x, y in zip(self.vertices[a], self.vertices[b])])
            _acc(sums, a, d, w)
            _acc(sums, b, [-c for c in d], w)
        for (a, d), w in zip(self.rays, self.ray_weights or [1] * len(self.rays)):
            _acc(sums, a, _primitive([Fraction(c) for c in d]), w)
        return all(all(c == 0 for c in s) for s in sums.values())

    def to_text(self) -> str:
        lines = [f"vertices {len(self.vertices)}"]
        lines += [" ".join(str(c) for c in v) for v in self.vertices]
        lines.append(f"segments {len(self.segments)}")
        ws = self.segment_weights or (1,) * len(self.segments)
        lines += [f"{a} {b} {w}" for (a, b), w in zip(self.segments, ws)]
        lines.append(f"rays {len(self.rays)}")
        wr = self.ray_weights or (1,) * len(self.rays)
        lines += [f"{a} {' '.join(str(c) for c in d)} {w}" for (a, d), w in zip(self.rays, wr)]
        return "\n".join(lines) + "\n"


def _acc(sums, i, d, w):
    s = sums.setdefault(i, [Fraction(0)] * len(d))
    for k, c in enumerate(d):
        s[k] += w * c


def _primitive(d: Sequence[Fraction]) -> list:
    """Scale a rational vector to a primitive integer vector with the same direction."""
    d = [Fraction(c) for c in d]
    den = math.lcm(*[c.denominator for c in d])
    ints = [int(c * den) for c in d]
    g = math.gcd(*ints)
    if g == 0:
        return ints
    return [c // g for c in ints]


# -- evaluation -----------------------------------------------------------------------

def tropical_value(T: TropicalPolynomial, u, tie_tol: float = 0.0):
    """``(max value, set of maximising exponents within tie_tol)``."""
    exact = all(isinstance(c, (Fraction, int)) for c in u) if not isinstance(u, np.ndarray) else False
    if exact:
        u = [Fraction(c) for c in u]
        vals = {m: sum((mi * ui for mi, ui in zip(m, u)), Fraction(0)) - v for m, v in T.terms.items()}
    else:
        uf = np.asarray(u, dtype=float)
        vals = {m: float(np.dot(m, uf)) - float(v) for m, v in T.terms.items()}
    best = max(vals.values())
    arg = {m for m, val in vals.items() if best - val <= tie_tol}
    return best, arg


def tropical_membership(T: TropicalPolynomial, u, tie_tol: float = FLOAT_TIE_TOL) -> bool:
    return len(tropical_value(T, u, tie_tol)[1]) >= 2


def tropical_membership_batch(T: TropicalPolynomial, U: np.ndarray, tie_tol: float = FLOAT_TIE_TOL) -> np.ndarray:
    M, v, _ = T.arrays()
    vals = np.asarray(U, dtype=float) @ M.T - v
    top = vals.max(axis=1)
    return np.sum(vals >= top[:, None] - tie_tol, axis=1) >= 2


# -- exact corner loci ---------------------------------------------------------------------

def _dot(a, b):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def tropical_curve_2d(T: TropicalPolynomial) -> PolyhedralComplex:
    """Exact corner locus of a planar tropical polynomial."""
    if T.dim != 2:
        raise ValidationError("tropical_curve_2d needs n = 2")
    items = [(m, T.terms[m]) for m in T.exponents]
    cells = {}
    for (mi, vi), (mj, vj) in itertools.combinations(items, 2):
        d = (mi[0] - mj[0], mi[1] - mj[1])
        direction = tuple(_primitive([Fraction(-d[1]), Fraction(d[0])]))
        dd = d[0] * d[0] + d[1] * d[1]
        u0 = (Fraction(d[0]) * (vi - vj) / dd, Fraction(d[1]) * (vi - vj) / dd)
        lo, hi = None, None
        feasible = True
        for mk, vk in items:
            if mk in (mi, mj):
                continue
            diff = (mi[0] - mk[0], mi[1] - mk[1])
            a = _dot(diff, direction)
            b = vi - vk - _dot(diff, u0)
            if a == 0:
                if b > 0:
                    feasible = False
                    break
            elif a > 0:
                t = b / a
                lo = t if lo is None or t > lo else lo
            else:
                t = b / a
                hi = t if hi is None or t < hi else hi
        if not feasible or (lo is not None and hi is not None and lo >= hi):
            continue
        key = _cell_key(u0, direction, lo, hi)
        if key not in cells:
            cells[key] = (u0, direction, lo, hi)
    if not cells:
        raise DegenerateInput("corner locus is empty")

    vertex_set = set()
    for u0, dvec, lo, hi in cells.values():
        for t in (lo, hi):
            if t is not None:
                vertex_set.add(_at(u0, dvec, t))
    lines = [c for c in cells.values() if c[2] is None and c[3] is None]
    for u0, dvec, _, _ in lines:
        vertex_set.add(u0)
    vertices = sorted(vertex_set)
    index = {v: i for i, v in enumerate(vertices)}

    segs, seg_w, rays, ray_w = [], [], [], []
    for u0, dvec, lo, hi in sorted(cells.values(), key=lambda c: _cell_sort(c)):
        probe = _probe(u0, dvec, lo, hi)
        w = _edge_weight(T, probe, dvec)
        if lo is not None and hi is not None:
            a, b = index[_at(u0, dvec, lo)], index[_at(u0, dvec, hi)]
            segs.append((min(a, b), max(a, b)))
            seg_w.append(w)
        elif lo is not None:
            rays.append((index[_at(u0, dvec, lo)], tuple(dvec)))
            ray_w.append(w)
        elif hi is not None:
            rays.append((index[_at(u0, dvec, hi)], tuple(-c for c in dvec)))
            ray_w.append(w)
        else:
            i = index[u0]
            rays.append((i, tuple(dvec)))
            rays.append((i, tuple(-c for c in dvec)))
            ray_w += [w, w]
    order = sorted(range(len(segs)), key=lambda k: segs[k])
    segs, seg_w = [segs[k] for k in order], [seg_w[k] for k in order]
    order = sorted(range(len(rays)), key=lambda k: rays[k])
    rays, ray_w = [rays[k] for k in order], [ray_w[k] for k in order]
    return PolyhedralComplex(tuple(vertices), tuple(segs), tuple(rays), tuple(seg_w), tuple(ray_w))


def _at(u0, d, t):
    return (u0[0] + t * d[0], u0[1] + t * d[1])


def _probe(u0, d, lo, hi):
    if lo is not None and hi is not None:
        return _at(u0, d, (lo + hi) / 2)
    if lo is not None:
        return _at(u0, d, lo + 1)
    if hi is not None:
        return _at(u0, d, hi - 1)
    return u0


def _cell_key(u0, d, lo, hi):
    if lo is not None and hi is not None:
        return ("seg",) + tuple(sorted([_at(u0, d, lo), _at(u0, d, hi)]))
    if lo is not None:
        return ("ray", _at(u0, d, lo), tuple(d))
    if hi is not None:
        return ("ray", _at(u0, d, hi), tuple(-c for c in d))
    # a full line: canonical point is the foot from the origin, direction up to sign
    sgn = 1 if (d[0], d[1]) > (0, 0) else -1
    return ("line", u0, (sgn * d[0], sgn * d[1]))


def _cell_sort(c):
    u0, d, lo, hi = c
    return (lo is None, hi is None, _probe(u0, d, lo, hi))


def _edge_weight(T: TropicalPolynomial, point, direction) -> int:
    """Lattice length of the dual edge: tied exponents at an interior point of the cell."""
    _, tied = tropical_value(T, point)
    normal = (direction[1], -direction[0])
    proj = sorted(tied, key=lambda m: m[0] * normal[0] + m[1] * normal[1])
    a, b = proj[0], proj[-1]
    return math.gcd(b[0] - a[0], b[1] - a[1])


def tropical_corners_1d(T: TropicalPolynomial) -> list[Fraction]:
    """Corner points of a one-variable tropical polynomial, sorted."""
    if T.dim != 1:
        raise ValidationError("tropical_corners_1d needs n = 1")
    items = [(m[0], v) for m, v in T.terms.items()]
    out = set()
    for (mi, vi), (mj, vj) in itertools.combinations(items, 2):
        if mi == mj:
            continue
        u = Fraction(vi - vj) / (mi - mj)
        top = max(m * u - v for m, v in items)
        if mi * u - vi == top:
            out.add(u)
    if not out:
        raise DegenerateInput("corner locus is empty")
    return sorted(out)


def build_gq_valuation(psi: ConvexFunction, points: Iterable[Sequence[int]], coeffs=None) -> TropicalPolynomial:
    """Valuation ``v(m) = psi(m)`` on the given lattice points; coefficients default to 1."""
    pts = [tuple(int(c) for c in m) for m in points]
    terms = {m: _exact(psi.exact_value(m)) for m in pts}
    a = {m: complex(coeffs[m]) if coeffs else 1.0 + 0j for m in pts}
    return TropicalPolynomial(terms, a)
