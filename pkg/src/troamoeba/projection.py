"""The cone partition ``R^n = U_p (grad psi(p) + C_p(P))`` and what is built on it.

``project_pi`` returns the apex point ``p`` of the cone containing ``y``;
equivalently ``p`` minimises ``psi(p) - y.p`` over P, and for quadratic ``psi``
it is the ``G^{-1}``-nearest point of ``grad psi(P)`` pulled back to P.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .amoeba import AmoebaSample
from .errors import NoFaceAccepted, NotQuadratic, RayNotStabilized, ValidationError
from .polytope import DelzantPolytope, FaceRef, solve_exact
from .potential import ConvexFunction, Quadratic, _Family
from .tropical import PolyhedralComplex

ACCEPT_TOL = 1e-9
RAY_HORIZON = 1e-8
RAY_CAP = 1e6
BISECT_TOL = 1e-13


@dataclass(frozen=True)
class NormalCone:
    face: FaceRef
    generators: np.ndarray
    metric: np.ndarray | None = None

    def contains(self, c, tol: float = 1e-9) -> bool:
        """Whether ``c`` is a nonnegative combination of the generators."""
        c = np.asarray(c, dtype=float)
        if len(self.generators) == 0:
            return bool(np.linalg.norm(c) <= tol)
        coef, *_ = np.linalg.lstsq(self.generators.T, c, rcond=None)
        return bool(np.all(coef >= -tol) and np.linalg.norm(self.generators.T @ coef - c) <= tol * (1 + np.linalg.norm(c)))


def normal_cone(P: DelzantPolytope, face: FaceRef, metric=None) -> NormalCone:
    """Outward cone at a face; with ``metric`` G the generators are ``-G^{-1} nu_r``."""
    gens = -P.N[list(face.active)].reshape(len(face.active), P.dim)
    if metric is not None:
        metric = np.asarray(metric, dtype=float)
        gens = np.linalg.solve(metric, gens.T).T
    return NormalCone(face, gens, metric)


@dataclass(frozen=True)
class ProjectionCertificate:
    point: np.ndarray
    face: FaceRef
    residual: np.ndarray
    coefficients: np.ndarray


class _FaceSolver:
    """Per-face minimisation of ``psi(p) - y.p`` over the affine span of the face."""

    def __init__(self, P: DelzantPolytope, psi: ConvexFunction, face: FaceRef):
        self.P, self.psi, self.face = P, psi, face
        self.act = list(face.active)
        self.origin, self.B = P.face_chart(face)
        self.Nact = P.N[self.act].reshape(len(self.act), P.dim)
        if isinstance(psi, Quadratic) and self.B.shape[1]:
            H = self.B.T @ psi.G @ self.B
            self.Hinv = np.linalg.inv(H)
        if not isinstance(psi, Quadratic) and self.B.shape[1]:
            self.fam = _Family(np.zeros((0, self.B.shape[1])), np.zeros(0), self.origin, self.B, psi, None,
                               include_gp=False)
            self.fam.start = np.zeros(self.B.shape[1])

    def solve(self, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stationary points ``p`` on the face span, cone coefficients and feasibility slack."""
        k = self.B.shape[1]
        if k == 0:
            X = np.broadcast_to(self.origin, Y.shape).copy()
        elif isinstance(self.psi, Quadratic):
            rhs = (Y - self.psi.b - self.origin @ self.psi.G) @ self.B
            X = self.origin + (rhs @ self.Hinv.T) @ self.B.T
        else:
            T, _, _ = self.fam.solve(Y @ self.B, 1.0, 0.0)
            X = self.fam.to_ambient(T)
        grad = self.psi.evaluate(X)[1]
        W = grad - Y  # = sum t_r nu_r over active facets
        if self.act:
            coef, *_ = np.linalg.lstsq(self.Nact.T, W.T, rcond=None)
            coef = coef.T
            fit = np.linalg.norm(coef @ self.Nact - W, axis=1)
        else:
            coef = np.zeros((len(Y), 0))
            fit = np.linalg.norm(W, axis=1)
        return X, coef, fit


def project_batch(psi: ConvexFunction, P: DelzantPolytope, Y, tol: float = ACCEPT_TOL):
    """``(points, face index into P.faces, cone coefficients list)`` for each row of ``Y``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != P.dim:
        raise ValidationError(f"points have dimension {Y.shape[1]}, the polytope {P.dim}")
    k = len(Y)
    X = np.full((k, P.dim), np.nan)
    which = np.full(k, -1)
    coefs: list = [None] * k
    best = np.full(k, np.inf)
    todo = np.arange(k)
    scale = 1.0 + np.abs(Y).max(axis=1)
    for fi, face in enumerate(P.faces):
        if not len(todo):
            break
        solver = _solver(P, psi, face)
        Xf, cf, fit = solver.solve(Y[todo])
        L = P.ell(Xf)
        viol = np.maximum(np.maximum(-L.min(axis=1), -cf.min(axis=1, initial=0.0)), fit / scale[todo])
        best[todo] = np.minimum(best[todo], viol)
        ok = viol <= tol * scale[todo]
        hit = todo[ok]
        X[hit] = Xf[ok]
        which[hit] = fi
        for j, c in zip(hit, cf[ok]):
            coefs[j] = c
        todo = todo[~ok]
    if len(todo):
        raise NoFaceAccepted(f"{len(todo)} point(s) accepted by no face", best_residual=float(best[todo].min()))
    return X, which, coefs


_SOLVERS: dict = {}


def _solver(P, psi, face) -> _FaceSolver:
    key = (id(P), id(psi), face)
    hit = _SOLVERS.get(key)
    if hit is None or hit[0] is not P or hit[1] is not psi:
        hit = (P, psi, _FaceSolver(P, psi, face))
        if len(_SOLVERS) > 4096:
            _SOLVERS.clear()
        _SOLVERS[key] = hit
    return hit[2]


def project_pi(psi: ConvexFunction, P: DelzantPolytope, y, tol: float = ACCEPT_TOL) -> ProjectionCertificate:
    """Apex ``p`` of the unique cone ``grad psi(p) + C_p(P)`` containing ``y``."""
    y = np.asarray(y, dtype=float)
    X, which, coefs = project_batch(psi, P, y[None, :], tol)
    p = X[0]
    return ProjectionCertificate(p, P.faces[which[0]], y - psi.grad(p), coefs[0])


def id_minus_pi(psi: ConvexFunction, P: DelzantPolytope, y) -> np.ndarray:
    """``y - pi(y)`` with ``pi(y) = grad psi(p)``; zero exactly on ``grad psi(P)``."""
    return project_pi(psi, P, y).residual


# -- limit amoebas ---------------------------------------------------------------------

def _ray_extent(psi, P, base, d, horizon, cap):
    t = 1.0
    prev = project_batch(psi, P, (base + t * d)[None])[0][0]
    while True:
        nxt = project_batch(psi, P, (base + 2 * t * d)[None])[0][0]
        if np.linalg.norm(nxt - prev) < horizon:
            return 2 * t
        t *= 2
        if t > cap:
            raise RayNotStabilized(f"projection of ray from {list(base)} still moving at t={t:g}", last=(prev, nxt))
        prev = nxt


def _ray_settle(psi, P, base, d, T, horizon, steps: int = 60) -> float:
    """Smallest ``t <= T`` (by bisection) from which the projection of the ray stays put."""
    final = project_batch(psi, P, (base + T * d)[None])[0][0]
    lo, hi = 0.0, T
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        x = project_batch(psi, P, (base + mid * d)[None])[0][0]
        if np.linalg.norm(x - final) < horizon:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-9 * (1 + hi):
            break
    return hi


def _trace(psi, P, base, d, params, tol):
    """Project ``base + t d`` for the given ``t`` and split at face changes.

    Returns a list of runs; each run is an array of projected points that share
    one face, with the transition points located by bisection.
    """
    params = np.unique(np.asarray(params, dtype=float))
    X, which, _ = project_batch(psi, P, base + params[:, None] * d)
    runs = [[X[0]]]
    for i in range(1, len(params)):
        if which[i] != which[i - 1]:
            for (ta, xa, fa), (tb, xb, fb) in _split(psi, P, base, d, params[i - 1], X[i - 1], which[i - 1],
                                                     params[i], X[i], which[i], tol):
                runs[-1].append(xa)
                runs.append([xb])
        runs[-1].append(X[i])
    return [_dedupe(np.asarray(r)) for r in runs]


def _split(psi, P, base, d, ta, xa, fa, tb, xb, fb, tol):
    """All face transitions in ``[ta, tb]`` as bracketing pairs, ordered along the ray."""
    if fa == fb:
        return []
    if tb - ta <= tol * max(1.0, abs(tb)):
        return [((ta, xa, fa), (tb, xb, fb))]
    tm = 0.5 * (ta + tb)
    X, which, _ = project_batch(psi, P, (base + tm * d)[None])
    xm, fm = X[0], which[0]
    return (_split(psi, P, base, d, ta, xa, fa, tm, xm, fm, tol)
            + _split(psi, P, base, d, tm, xm, fm, tb, xb, fb, tol))


def _dedupe(run: np.ndarray) -> np.ndarray:
    keep = [0]
    for i in range(1, len(run)):
        if np.linalg.norm(run[i] - run[keep[-1]]) > 1e-14:
            keep.append(i)
    return run[keep]


def limit_amoeba(psi: ConvexFunction, P: DelzantPolytope, curve, samples_per_edge: int = 64,
                 ray_horizon: float = RAY_HORIZON, ray_cap: float = RAY_CAP) -> AmoebaSample:
    """``grad psi^{-1} o pi`` applied to a tropical curve, as polyline pieces in P.

    Each segment and ray is sampled, projected, and cut wherever the projected
    point changes face, so that for quadratic ``psi`` every returned piece is a
    straight segment of the exact limit set. ``curve`` may also be an array of
    points (e.g. a membership sample in higher dimension).
    """
    if not isinstance(curve, PolyhedralComplex):
        Y = np.atleast_2d(np.asarray(curve, dtype=float))
        X, _, _ = project_batch(psi, P, Y)
        return AmoebaSample(X, "limit", "polytope")
    V = curve.vertex_array()
    pieces = []
    ts = np.linspace(0.0, 1.0, max(samples_per_edge, 2))
    for a, b in curve.segments:
        pieces += _trace(psi, P, V[a], V[b] - V[a], ts, BISECT_TOL)
    for i, d in curve.unit_rays():
        T = _ray_extent(psi, P, V[i], d, ray_horizon, ray_cap)
        geo = 2.0 ** np.arange(-4, np.log2(T) + 1)
        params = np.concatenate([ts * min(T, 1.0), geo[geo <= T], [T]])
        pieces += _trace(psi, P, V[i], d, params, BISECT_TOL)
    used = {a for seg in curve.segments for a in seg} | {i for i, _ in curve.rays}
    lone = [i for i in range(len(V)) if i not in used]
    if lone:
        X, _, _ = project_batch(psi, P, V[lone])
        pieces += [x[None, :] for x in X]
    pts = np.concatenate(pieces) if pieces else np.zeros((0, P.dim))
    return AmoebaSample(pts, "limit", "polytope", pieces)


def curve_box(psi: ConvexFunction, P: DelzantPolytope, curve: PolyhedralComplex,
              ray_horizon: float = RAY_HORIZON, ray_cap: float = RAY_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Bounding box of the tropical curve with each ray cut where its projection stops moving.

    Beyond that box the curve adds nothing to the limit amoeba, so a finite-``s``
    sample that covers it (together with ``grad psi(P)``) sees every tentacle
    whose image matters.
    """
    V = curve.vertex_array()
    pts = [V]
    for i, d in curve.unit_rays():
        T = _ray_extent(psi, P, V[i], d, ray_horizon, ray_cap)
        pts.append((V[i] + _ray_settle(psi, P, V[i], d, T, ray_horizon) * d)[None, :])
    X = np.concatenate(pts)
    return X.min(axis=0), X.max(axis=0)


def implosion_field(psi: ConvexFunction, P: DelzantPolytope, Y) -> tuple[np.ndarray, np.ndarray]:
    """``(pi(y), y - pi(y))`` over a batch of points, ``pi(y) = grad psi(p)``."""
    X, _, _ = project_batch(psi, P, Y)
    U = psi.evaluate(X)[1]
    return U, np.atleast_2d(Y) - U


# -- GQ amoebas for quadratic psi ----------------------------------------------------------

def _require_quadratic(psi) -> Quadratic:
    if not isinstance(psi, Quadratic):
        raise NotQuadratic("the Voronoi description needs a quadratic psi")
    return psi


def _qform(G, a, b):
    n = len(a)
    return sum(a[i] * G[i][j] * b[j] for i in range(n) for j in range(n))


def _gdist(G, p, m):
    d = [pi - mi for pi, mi in zip(p, m)]
    return _qform(G, d, d)


def gq_amoeba(P: DelzantPolytope, psi: ConvexFunction) -> PolyhedralComplex:
    """Exact GQ limit amoeba of a quadratic ``psi`` on a polygon (or a segment).

    Condition 1 pieces (label ``voronoi``) are where two lattice points of P are
    G-equidistant and no other lattice point is closer; condition 2 pieces
    (label ``boundary``) are the parts of a boundary edge whose unique G-nearest
    lattice point lies off that edge. Bisectors in P are linear,
    ``2 (m2 - m1)^T G p = m2^T G m2 - m1^T G m1``, so with rational ``G`` every
    vertex is an exact ``Fraction``.
    """
    psi = _require_quadratic(psi)
    G = psi.G_exact
    sites = P.lattice_points()
    if P.dim == 1:
        return _gq_1d(P, G, sites)
    if P.dim != 2:
        raise ValidationError("exact GQ amoebas are implemented for n <= 2; use gq_amoeba_sampled")
    segs: dict = {}
    for m1, m2 in itertools.combinations(sites, 2):
        piece = _bisector_piece(P, G, sites, m1, m2)
        if piece is not None:
            segs.setdefault(piece, "voronoi")
    for face in P.faces:
        if face.codim != 1:
            continue
        for piece in _boundary_pieces(P, G, sites, face):
            segs.setdefault(piece, "boundary")
    return _complex_from_pieces(segs)


def _gq_1d(P, G, sites):
    g = G[0][0]
    pts = []
    for m1, m2 in zip(sites, sites[1:]):
        pts.append((Fraction(m1[0] + m2[0], 2),))
    return PolyhedralComplex(tuple(pts))


def _bisector_piece(P, G, sites, m1, m2):
    dm = [b - a for a, b in zip(m1, m2)]
    w = [2 * sum(G[i][j] * dm[j] for j in range(2)) for i in range(2)]
    c = _qform(G, m2, m2) - _qform(G, m1, m1)
    ww = w[0] * w[0] + w[1] * w[1]
    p0 = (w[0] * c / ww, w[1] * c / ww)
    d = (-w[1], w[0])
    # constraints a*t >= b along p0 + t d
    cons = []
    for nu, lam in zip(P.normals, P.offsets):
        cons.append((nu[0] * d[0] + nu[1] * d[1], lam - nu[0] * p0[0] - nu[1] * p0[1]))
    for m in sites:
        if m in (m1, m2):
            continue
        # |p - m1|_G^2 <= |p - m|_G^2  <=>  2 (m - m1)^T G p <= m^T G m - m1^T G m1
        dk = [b - a for a, b in zip(m1, m)]
        wk = [2 * sum(G[i][j] * dk[j] for j in range(2)) for i in range(2)]
        ck = _qform(G, m, m) - _qform(G, m1, m1)
        cons.append((-(wk[0] * d[0] + wk[1] * d[1]), -(ck - wk[0] * p0[0] - wk[1] * p0[1])))
    lo, hi = None, None
    for a, b in cons:
        if a == 0:
            if b > 0:
                return None
        elif a > 0:
            lo = b / a if lo is None or b / a > lo else lo
        else:
            hi = b / a if hi is None or b / a < hi else hi
    if lo is None or hi is None or lo >= hi:
        return None
    A = (p0[0] + lo * d[0], p0[1] + lo * d[1])
    B = (p0[0] + hi * d[0], p0[1] + hi * d[1])
    return tuple(sorted([A, B]))


def _boundary_pieces(P, G, sites, face):
    vids = P.face_vertices(face)
    V1, V2 = P.vertices[vids[0]], P.vertices[vids[1]]
    r = face.active[0]
    on_face = {m for m in sites if P.ell_exact(m)[r] == 0}
    D = [b - a for a, b in zip(V1, V2)]

    def q(m, t):
        return _gdist(G, [a + t * dd for a, dd in zip(V1, D)], m)

    breaks = {Fraction(0), Fraction(1)}
    for m1, m2 in itertools.combinations(sites, 2):
        # q(m1,t) - q(m2,t) is affine in t
        f0 = q(m1, Fraction(0)) - q(m2, Fraction(0))
        f1 = q(m1, Fraction(1)) - q(m2, Fraction(1))
        if f0 != f1:
            t = f0 / (f0 - f1)
            if 0 < t < 1:
                breaks.add(t)
    ts = sorted(breaks)
    out = []
    run = None
    for a, b in zip(ts, ts[1:]):
        mid = (a + b) / 2
        dists = sorted((q(m, mid), m) for m in sites)
        off = dists[0][1] not in on_face and dists[0][0] < dists[1][0]
        if off:
            run = (run[0], b) if run is not None and run[1] == a else (a, b)
            if out and out[-1][1] == a:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    pieces = []
    for a, b in out:
        A = tuple(x + a * dd for x, dd in zip(V1, D))
        B = tuple(x + b * dd for x, dd in zip(V1, D))
        pieces.append(tuple(sorted([A, B])))
    return pieces


def _complex_from_pieces(segs: dict) -> PolyhedralComplex:
    verts = sorted({p for seg in segs for p in seg})
    index = {v: i for i, v in enumerate(verts)}
    items = sorted(segs.items())
    return PolyhedralComplex(
        tuple(verts),
        tuple((index[a], index[b]) for (a, b), _ in items),
        (),
        tuple(1 for _ in items),
        (),
        tuple(label for _, label in items),
    )


def gq_classify(P: DelzantPolytope, psi: ConvexFunction, X, tol: float = 1e-9) -> np.ndarray:
    """Which GQ condition each point satisfies: 0 none, 1 Voronoi tie, 2 boundary, 3 both."""
    psi = _require_quadratic(psi)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    S = np.asarray(P.lattice_points(), dtype=float)
    D = X[:, None, :] - S[None]
    q = np.einsum("kmi,ij,kmj->km", D, psi.G, D)
    order = np.sort(q, axis=1)
    tie = order[:, 1] - order[:, 0] <= tol * (1 + order[:, 0])
    nearest = np.argmin(q, axis=1)
    Ls = P.ell(S)
    Lx = P.ell(X)
    on_boundary = np.abs(Lx) <= tol
    off = np.any(on_boundary & (np.abs(Ls[nearest]) > tol), axis=1) & ~tie
    return tie.astype(int) + 2 * off.astype(int)


def gq_amoeba_sampled(P: DelzantPolytope, psi: ConvexFunction, grid: int = 60, tol: float | None = None) -> AmoebaSample:
    """GQ amoeba in any dimension by testing both conditions on a grid over P (ties within ``tol``)."""
    lo, hi = P.bbox
    axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.dim)
    X = X[np.all(P.ell(X) >= -1e-12, axis=1)]
    step = float(np.max(hi - lo)) / (grid - 1)
    _require_quadratic(psi)
    S = np.asarray(P.lattice_points(), dtype=float)
    D = X[:, None, :] - S[None]
    q = np.sqrt(np.einsum("kmi,ij,kmj->km", D, psi.G, D))
    order = np.sort(q, axis=1)
    lip = np.sqrt(np.linalg.eigvalsh(psi.G).max())
    tie = order[:, 1] - order[:, 0] <= (tol if tol is not None else lip * step)
    cls = gq_classify(P, psi, X)
    keep = tie | (cls >= 2)
    return AmoebaSample(X[keep], "gq", "polytope")


def gq_segments(C: PolyhedralComplex) -> np.ndarray:
    return C.segment_array()
