"""Symplectic potentials ``g_s = g_P + phi + s psi`` and their Legendre maps.

Everything here is double precision. Batched entry points take ``(k, n)``
arrays; the single-point functions at the bottom wrap them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BoundaryEvaluation,
    MaxIterationsExceeded,
    NewtonDiverged,
    NotInImage,
    NotPositiveDefinite,
    ValidationError,
)
from .polytope import DelzantPolytope, FaceRef

NEWTON_TOL = 1e-10
MAX_NEWTON_ITER = 200
CLAMP = 0.9
FLOOR = 64 * np.finfo(float).eps
PIN = 1e-12


@dataclass(frozen=True)
class Jet2:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


# -- convex functions ------------------------------------------------------------

class ConvexFunction:
    """A smooth function with value/gradient/Hessian on a neighbourhood of P."""

    kind = "abstract"

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def jet(self, x) -> Jet2:
        v, g, H = self.evaluate(np.asarray(x, dtype=float)[None, :])
        return Jet2(float(v[0]), g[0], H[0])

    def __call__(self, x) -> float:
        return self.jet(x).value

    def grad(self, x) -> np.ndarray:
        return self.jet(x).gradient

    def hess(self, x) -> np.ndarray:
        return self.jet(x).hessian

    def exact_value(self, m: Sequence[int]):
        """Value at a lattice point; a ``Fraction`` when the data allow it."""
        return float(self(np.asarray(m, dtype=float)))

    def to_dict(self) -> dict:
        raise NotImplementedError


def _to_fraction(v) -> Fraction | None:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, (float, np.floating)):
        return Fraction(repr(float(v)))
    return None


class Quadratic(ConvexFunction):
    """``psi(x) = x^T G x / 2 + b^T x + c`` with ``G`` symmetric positive definite.

    Entries may be ints, floats, Fractions or fraction strings like ``"4/9"``;
    the exact values are kept for rational valuations.
    """

    kind = "quadratic"

    def __init__(self, G, b=None, c=0, scale=1):
        scale_f = _to_fraction(scale)
        G_ex = [[_to_fraction(v) * scale_f for v in row] for row in G]
        n = len(G_ex)
        if any(len(row) != n for row in G_ex):
            raise ValidationError("G must be square")
        b_ex = [Fraction(0)] * n if b is None else [_to_fraction(v) for v in b]
        if len(b_ex) != n:
            raise ValidationError("b has wrong length")
        self.G_exact = tuple(tuple(row) for row in G_ex)
        self.b_exact = tuple(b_ex)
        self.c_exact = _to_fraction(c)
        self.G = np.array([[float(v) for v in row] for row in G_ex])
        self.b = np.array([float(v) for v in b_ex])
        self.c = float(self.c_exact)
        if not np.allclose(self.G, self.G.T, rtol=0, atol=1e-14):
            raise NotPositiveDefinite("G is not symmetric")
        if np.linalg.eigvalsh(self.G).min() <= 0:
            raise NotPositiveDefinite("G is not positive definite")

    @property
    def dim(self) -> int:
        return len(self.b)

    def evaluate(self, X):
        g = X @ self.G + self.b
        v = 0.5 * np.einsum("ki,ki->k", X, X @ self.G) + X @ self.b + self.c
        H = np.broadcast_to(self.G, (len(X),) + self.G.shape)
        return v, g, H

    def exact_value(self, m):
        m = [Fraction(int(c)) for c in m]
        n = len(m)
        quad = sum(m[i] * self.G_exact[i][j] * m[j] for i in range(n) for j in range(n))
        return quad / 2 + sum(bi * mi for bi, mi in zip(self.b_exact, m)) + self.c_exact

    def translated(self, k: Sequence[int]) -> "Quadratic":
        """``x -> psi(x - k)``."""
        G = [list(r) for r in self.G_exact]
        n = len(G)
        k = [Fraction(int(c)) for c in k]
        Gk = [sum(G[i][j] * k[j] for j in range(n)) for i in range(n)]
        b = [self.b_exact[i] - Gk[i] for i in range(n)]
        c = self.c_exact + sum(k[i] * Gk[i] for i in range(n)) / 2 - sum(bi * ki for bi, ki in zip(self.b_exact, k))
        return Quadratic(G, b, c)

    def transformed(self, A: Sequence[Sequence[int]]) -> "Quadratic":
        """``x -> psi(A^{-1} x)`` for unimodular ``A``."""
        from .polytope import inverse_exact
        Ai = inverse_exact(A)
        n = len(Ai)
        G = [[sum(Ai[k][i] * self.G_exact[k][l] * Ai[l][j] for k in range(n) for l in range(n))
              for j in range(n)] for i in range(n)]
        b = [sum(Ai[k][i] * self.b_exact[k] for k in range(n)) for i in range(n)]
        return Quadratic(G, b, self.c_exact)

    def to_dict(self) -> dict:
        return {"kind": "quadratic", "G": [[_frac_str(v) for v in r] for r in self.G_exact],
                "b": [_frac_str(v) for v in self.b_exact]} | ({"c": _frac_str(self.c_exact)} if self.c_exact else {})

    def __repr__(self):
        return f"Quadratic(G={self.G.tolist()}, b={self.b.tolist()})"


def _frac_str(v: Fraction):
    return int(v) if v.denominator == 1 else str(v)


def identity_quadratic(n: int) -> Quadratic:
    return Quadratic(np.eye(n, dtype=int).tolist())


class QuarticRadial(ConvexFunction):
    """``psi(x) = |x|^2 / 2 + |x|^4 / 4``."""

    kind = "quartic_radial"

    def evaluate(self, X):
        r2 = np.einsum("ki,ki->k", X, X)
        v = r2 / 2 + r2 ** 2 / 4
        g = (1 + r2)[:, None] * X
        n = X.shape[1]
        H = (1 + r2)[:, None, None] * np.eye(n) + 2 * np.einsum("ki,kj->kij", X, X)
        return v, g, H

    def exact_value(self, m):
        r2 = Fraction(sum(int(c) ** 2 for c in m))
        return r2 / 2 + r2 ** 2 / 4

    def to_dict(self):
        return {"kind": "quartic_radial"}


class ZeroFunction(ConvexFunction):
    kind = "zero"

    def evaluate(self, X):
        k, n = X.shape
        return np.zeros(k), np.zeros((k, n)), np.zeros((k, n, n))

    def exact_value(self, m):
        return Fraction(0)

    def to_dict(self):
        return {"kind": "zero"}


class JetFunction(ConvexFunction):
    """User-supplied ``fn(x) -> (value, gradient, hessian)``; Hessians get symmetrised."""

    kind = "jet"

    def __init__(self, fn: Callable, name: str = "user"):
        self.fn = fn
        self.name = name

    def evaluate(self, X):
        vals, grads, hess = [], [], []
        for x in X:
            v, g, H = self.fn(x)
            H = np.asarray(H, dtype=float)
            vals.append(float(v))
            grads.append(np.asarray(g, dtype=float))
            hess.append((H + H.T) / 2)
        return np.asarray(vals), np.asarray(grads), np.asarray(hess)

    def to_dict(self):
        return {"kind": "jet", "name": self.name}


# -- barrier families --------------------------------------------------------------

class _Family:
    """Shared machinery for ``g_s`` on P or on a face, in local coordinates ``t``.

    Local facets are ``ell(t) = N t - lam``; ambient points are ``origin + B t``.
    """

    def __init__(self, N, lam, origin, B, psi, phi, include_gp=True):
        self.N = np.asarray(N, dtype=float).reshape(-1, np.asarray(B).shape[1])
        self.lam = np.asarray(lam, dtype=float)
        self.origin = np.asarray(origin, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.psi = psi
        self.phi = phi if phi is not None else ZeroFunction()
        self.include_gp = include_gp

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    def ell(self, T):
        return np.asarray(T, dtype=float) @ self.N.T - self.lam

    def to_ambient(self, T):
        return self.origin + np.asarray(T, dtype=float) @ self.B.T

    def _pull(self, f: ConvexFunction, T):
        v, g, H = f.evaluate(self.to_ambient(T))
        return v, g @ self.B, np.einsum("ai,kab,bj->kij", self.B, H, self.B)

    def gp(self, T):
        """Jets of ``g_P`` (zero when the barrier is switched off)."""
        T = np.asarray(T, dtype=float)
        k, n = T.shape
        if not self.include_gp or len(self.N) == 0:
            return np.zeros(k), np.zeros((k, n)), np.zeros((k, n, n))
        L = self.ell(T)
        if np.any(L <= 0):
            raise BoundaryEvaluation("g_P evaluated on or outside the boundary")
        logL = np.log(L)
        v = 0.5 * np.sum(L * logL, axis=1)
        g = 0.5 * (1 + logL) @ self.N
        H = 0.5 * np.einsum("ri,kr,rj->kij", self.N, 1 / L, self.N)
        return v, g, H

    def psi_jet(self, T):
        return self._pull(self.psi, T)

    def phi_jet(self, T):
        return self._pull(self.phi, T)

    def barrier(self, T):
        """Jets of ``g_P + phi``."""
        a, b = self.gp(T), self.phi_jet(T)
        return a[0] + b[0], a[1] + b[1], a[2] + b[2]

    def gs(self, s, T):
        b, p = self.barrier(T), self.psi_jet(T)
        return b[0] + s * p[0], b[1] + s * p[1], b[2] + s * p[2]

    def kappa(self, s, T):
        if s <= 0:
            raise ValidationError("kappa needs s > 0")
        return self.psi_jet(T)[1] + self.barrier(T)[1] / s

    @cached_property
    def start(self) -> np.ndarray:
        """A strictly interior starting point in local coordinates."""
        raise NotImplementedError

    def solve(self, U, w_psi: float, w_bar: float, tol: float = NEWTON_TOL,
              max_iter: int = MAX_NEWTON_ITER, X0=None):
        """Solve ``w_psi grad psi + w_bar grad(g_P + phi) = u`` row-wise by damped Newton.

        The objective ``w_psi psi + w_bar (g_P + phi) - u^T t`` is minimised; steps are
        clamped to 90% of the distance to the nearest facet when the barrier is on.
        Returns ``(T, residual, converged)``.
        """
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return self._solve(U, w_psi, w_bar, tol, max_iter, X0)

    def _solve(self, U, w_psi, w_bar, tol, max_iter, X0):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        k, n = U.shape
        T = np.repeat(self.start[None, :], k, axis=0) if X0 is None else np.array(X0, dtype=float)
        barrier_on = self.include_gp and len(self.N) > 0 and w_bar > 0

        def objective(T_, U_):
            val = -np.einsum("ki,ki->k", U_, T_)
            grad = -U_.copy()
            H = np.zeros((len(T_), n, n))
            if w_psi:
                v, g, h = self.psi_jet(T_)
                val, grad, H = val + w_psi * v, grad + w_psi * g, H + w_psi * h
            if w_bar:
                v, g, h = self.barrier(T_)
                val, grad, H = val + w_bar * v, grad + w_bar * g, H + w_bar * h
            return val, grad, H

        done = np.zeros(k, dtype=bool)
        stalled = np.zeros(k, dtype=bool)
        for _ in range(max_iter):
            act = np.flatnonzero(~done & ~stalled)
            if len(act) == 0:
                break
            Ta, Ua = T[act], U[act]
            val, grad, H = objective(Ta, Ua)
            r = np.linalg.norm(grad, axis=1)
            ok = r <= tol
            done[act[ok]] = True
            keep = ~ok
            if not keep.any():
                break
            act, Ta, Ua, val, grad, H, r = act[keep], Ta[keep], Ua[keep], val[keep], grad[keep], H[keep], r[keep]
            finite = np.all(np.isfinite(H), axis=(1, 2)) & np.all(np.isfinite(grad), axis=1)
            H = np.where(finite[:, None, None], H, np.eye(n))
            d = -np.linalg.solve(H, np.where(finite[:, None], grad, 0.0)[:, :, None])[:, :, 0]
            alpha = np.ones(len(act))
            if barrier_on:
                # a facet value at the rounding floor of t cannot shrink further here:
                # hand the row over (kappa_inv re-solves it in a vertex chart)
                La = self.ell(Ta)
                floor = FLOOR * (np.abs(Ta) @ np.abs(self.N).T + np.abs(self.lam))
                rate = d @ self.N.T
                pinned = np.any((La <= floor) & (rate < 0), axis=1)
                if pinned.any():
                    stalled[act[pinned]] = True
                    act, Ta, Ua, val, grad, r, d, alpha = (x[~pinned] for x in (act, Ta, Ua, val, grad, r, d, alpha))
                    rate = rate[~pinned]
                    if not len(act):
                        continue
                with np.errstate(divide="ignore", invalid="ignore"):
                    lim = np.where(rate < 0, CLAMP * self.ell(Ta) / -rate, np.inf)
                alpha = np.minimum(1.0, lim.min(axis=1))
            accepted = np.zeros(len(act), dtype=bool)
            pending = np.arange(len(act))
            for _halving in range(60):
                if len(pending) == 0:
                    break
                trial = Ta[pending] + alpha[pending, None] * d[pending]
                inside = np.all(self.ell(trial) > 0, axis=1) if barrier_on else np.ones(len(pending), bool)
                good = np.zeros(len(pending), dtype=bool)
                if inside.any():
                    idx = pending[inside]
                    v2, g2, _ = objective(trial[inside], Ua[idx])
                    better = (v2 < val[idx]) | (np.linalg.norm(g2, axis=1) < r[idx])
                    good[np.flatnonzero(inside)[better]] = True
                T[act[pending[good]]] = trial[good]
                accepted[pending[good]] = True
                pending = pending[~good]
                alpha[pending] *= 0.5
            stalled[act[~accepted]] = True
        _, grad, _ = objective(T, U)
        res = np.linalg.norm(grad, axis=1)
        return T, res, res <= tol

    @cached_property
    def local_vertices(self) -> np.ndarray:
        """Vertices of the local polytope ``{t : N t >= lam}``."""
        return np.zeros((0, self.dim))

    def vertex_chart_family(self, i: int) -> tuple["_Family", np.ndarray, np.ndarray]:
        """Reparametrise around local vertex ``i``: ``t = t_v + M^{-1} l``.

        The facets through the vertex become the coordinates ``l`` themselves, so
        points within 1e-16 of those facets stay representable.
        Returns ``(family, t_v, M)``.
        """
        cache = self.__dict__.setdefault("_charts", {})
        if i not in cache:
            tv = self.local_vertices[i]
            L = self.ell(tv[None, :])[0]
            scale = 1 + np.abs(self.lam)
            act = np.flatnonzero(np.abs(L) <= 1e-9 * scale)
            if len(act) > self.dim:
                best = max(itertools.combinations(act, self.dim),
                           key=lambda c: abs(np.linalg.det(self.N[list(c)])))
                act = np.array(best)
            M = self.N[act]
            Minv = np.linalg.inv(M)
            lam2 = self.lam - self.N @ tv
            lam2[act] = 0.0
            N2 = self.N @ Minv
            N2[act] = np.eye(self.dim)
            fam = _Family(N2, lam2, self.to_ambient(tv[None, :])[0], self.B @ Minv,
                          self.psi, self.phi, self.include_gp)
            cache[i] = (fam, tv, M)
        return cache[i]

    def kappa_inv(self, s, U, tol=NEWTON_TOL, max_iter=MAX_NEWTON_ITER, return_chart=False, X0=None):
        """Batched ``kappa_s^{-1}``; rows that stall in ``t`` are re-solved in a vertex chart.

        ``X0`` optionally gives starting points; rows that are not strictly
        interior start from the default point instead. With ``return_chart`` a
        list is appended holding, per row, ``None`` or ``(vertex index, l)`` with
        the chart coordinates of the solution.
        """
        if s <= 0:
            raise ValidationError("kappa_inv needs s > 0")
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if X0 is not None:
            X0 = np.array(X0, dtype=float)
            inside = np.all(np.isfinite(X0), axis=1)
            if len(self.N):
                inside &= np.all(self.ell(np.nan_to_num(X0)) > 0, axis=1)
            X0[~inside] = self.start
        T, res, ok = self.solve(U, 1.0, 1.0 / s, tol=tol, max_iter=max_iter, X0=X0)
        charts: list = [None] * len(U)
        bad = np.flatnonzero(~ok)
        if len(bad) and len(self.local_vertices) and self.include_gp:
            # pick the vertex chart whose facets are closest to vanishing at the stalled iterate
            L = np.minimum(np.abs(self.ell(T[bad])), 1.0)
            masks = np.stack([np.isin(np.arange(L.shape[1]), self._vertex_rows(i))
                              for i in range(len(self.local_vertices))])
            choice = np.argmin(L @ masks.T.astype(float), axis=1)
            for i in np.unique(choice):
                sel = bad[choice == i]
                fam, tv, M = self.vertex_chart_family(int(i))
                Minv = np.linalg.inv(M)
                l0 = np.maximum((T[sel] - tv) @ M.T, 1e-300)
                l0 = np.where(np.all(fam.ell(l0) > 0, axis=1)[:, None], l0, fam.start_guess()[None, :])
                Ul = U[sel] @ Minv
                Tl, rl, okl = fam.solve(Ul, 1.0, 1.0 / s, tol=tol, max_iter=max_iter, X0=l0)
                # residual back in t units: grad_t = M^T grad_l
                gl = fam.kappa(s, Tl) - Ul
                rt = np.linalg.norm(gl @ M, axis=1)
                better = rt < res[sel]
                T[sel[better]] = tv + Tl[better] @ Minv.T
                res[sel[better]] = rt[better]
                ok[sel[better]] = rt[better] <= tol
                if return_chart:
                    for j, l in zip(sel[better], Tl[better]):
                        charts[j] = (int(i), l)
        if return_chart:
            return T, res, ok, charts
        return T, res, ok

    def _vertex_rows(self, i: int) -> np.ndarray:
        L = self.ell(self.local_vertices[i][None, :])[0]
        return np.flatnonzero(np.abs(L) <= 1e-9 * (1 + np.abs(self.lam)))

    def start_guess(self) -> np.ndarray:
        """Interior point for a chart family: small positive chart coordinates."""
        t = np.full(self.dim, 1e-3)
        if len(self.N) and np.all(self.ell(t[None, :]) > 0):
            return t
        return np.full(self.dim, 1e-8)


class PotentialFamily(_Family):
    """``g_s = g_P + phi + s psi`` on a Delzant polytope."""

    def __init__(self, polytope: DelzantPolytope, psi: ConvexFunction, phi: ConvexFunction | None = None,
                 include_gp: bool = True):
        n = polytope.dim
        super().__init__(polytope.N, polytope.lam, np.zeros(n), np.eye(n), psi, phi, include_gp)
        self.polytope = polytope

    @cached_property
    def start(self):
        return self.polytope.centroid.copy()

    @cached_property
    def local_vertices(self):
        return self.polytope.vertex_array

    def restrict(self, face: FaceRef) -> "FacePotential":
        return FacePotential(self, face)

    def kappa_inv(self, s, U, tol=NEWTON_TOL, max_iter=MAX_NEWTON_ITER, return_chart=False, X0=None):
        """As for any family, plus a last resort for solutions closer to a face than doubles resolve.

        When ``-2 s c`` (``c`` the outward cone coefficient) drops below the
        exponent range, the facet values ``l_r`` of the solution underflow even in
        a vertex chart. Their ``l log l`` terms only act along the facet normals,
        which the face directions annihilate, so the solution is the face point
        solving the restricted equation; unconverged rows pinned to a face
        (``l_r < PIN``) are re-solved there.
        """
        with np.errstate(over="ignore", divide="ignore", invalid="ignore", under="ignore"):
            T, res, ok, charts = super().kappa_inv(s, U, tol, max_iter, return_chart=True, X0=X0)
            bad = np.flatnonzero(~ok)
            if len(bad) and self.include_gp:
                U = np.atleast_2d(np.asarray(U, dtype=float))
                pinned = self.ell(T[bad]) < PIN
                faces = {f.active: f for f in self.polytope.faces}
                for key in {tuple(np.flatnonzero(row)) for row in pinned if row.any()}:
                    face = faces.get(key)
                    if face is None:
                        continue
                    rows = bad[np.all(pinned == np.isin(np.arange(pinned.shape[1]), key), axis=1)]
                    if face.codim == self.polytope.dim:
                        X = np.repeat(self.polytope.vertex_array[self.polytope.face_vertices(face)][:1], len(rows), 0)
                        rf = np.zeros(len(rows))
                    else:
                        fam = self.restrict(face)
                        Tf, rf, _ = fam.kappa_inv(s, U[rows] @ fam.B, tol=tol, max_iter=max_iter)
                        X = fam.to_ambient(Tf)
                    better = rf < res[rows]
                    T[rows[better]] = X[better]
                    res[rows[better]] = rf[better]
                    ok[rows[better]] = rf[better] <= tol
                    for j in rows[better]:
                        charts[j] = None
        if return_chart:
            return T, res, ok, charts
        return T, res, ok


class FacePotential(_Family):
    """The family restricted to a face, in integer face coordinates ``t``.

    Facets vanishing on the face drop out of ``g_P`` (``l log l -> 0``).
    """

    def __init__(self, family: PotentialFamily, face: FaceRef):
        P = family.polytope
        origin, B = P.face_chart(face)
        inactive = [r for r in range(P.n_facets) if r not in face.active]
        N = P.N[inactive] @ B
        lam = P.lam[inactive] - P.N[inactive] @ origin
        # facets meeting the face only in lower strata keep N rows that can vanish
        rows = np.linalg.norm(N, axis=1) > 0
        super().__init__(N[rows], lam[rows], origin, B, family.psi, family.phi, family.include_gp)
        self.family = family
        self.face = face
        self.facet_ids = [r for r, keep in zip(inactive, rows) if keep]

    @cached_property
    def local_vertices(self):
        P = self.family.polytope
        verts = P.vertex_array[P.face_vertices(self.face)] - self.origin
        return np.linalg.lstsq(self.B, verts.T, rcond=None)[0].T

    @cached_property
    def start(self):
        return self.local_vertices.mean(axis=0)


# -- single-point operations -----------------------------------------------------------

def eval_gp(P: DelzantPolytope, x) -> Jet2:
    F = PotentialFamily(P, ZeroFunction())
    v, g, H = F.gp(np.asarray(x, dtype=float)[None, :])
    return Jet2(float(v[0]), g[0], H[0])


def eval_gs(F: PotentialFamily, s: float, x) -> Jet2:
    if s < 0:
        raise ValidationError("s must be >= 0")
    v, g, H = F.gs(s, np.asarray(x, dtype=float)[None, :])
    H = H[0]
    if np.linalg.eigvalsh((H + H.T) / 2).min() <= 0:
        raise NotPositiveDefinite(f"Hess g_s not positive definite at {list(np.asarray(x, float))}")
    return Jet2(float(v[0]), g[0], H)


def legendre_psi(psi: ConvexFunction, x, direction: str = "forward", polytope: DelzantPolytope | None = None,
                 margin: float = 1.0, x0=None):
    """``u = grad psi(x)`` or its inverse.

    The inverse minimises ``psi(x) - u^T x`` by damped Newton. With ``polytope``
    given, a solution further than ``margin`` (in facet values) outside P raises
    ``NotInImage``.
    """
    x = np.asarray(x, dtype=float)
    if direction == "forward":
        return psi.grad(x)
    if direction != "inverse":
        raise ValidationError(f"unknown direction {direction!r}")
    u = x
    n = len(u)
    fam = _Family(np.zeros((0, n)), np.zeros(0), np.zeros(n), np.eye(n), psi, None, include_gp=False)
    start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    fam.start = start
    T, res, ok = fam.solve(u[None, :], 1.0, 0.0)
    if not np.isfinite(res[0]):
        raise NotInImage(f"no preimage of {list(u)}")
    if not ok[0]:
        raise NewtonDiverged(f"inverse Legendre map did not converge (residual {res[0]:.3g})",
                             best=T[0], residual=res[0])
    if polytope is not None and np.min(polytope.ell(T[0])) < -margin:
        raise NotInImage(f"{list(u)} lies far outside the image of P")
    return T[0]


def kappa(F: PotentialFamily, s: float, x) -> np.ndarray:
    """Rescaled Legendre map ``grad psi + grad(g_P + phi) / s``."""
    return F.kappa(s, np.asarray(x, dtype=float)[None, :])[0]


def kappa_inv(F: PotentialFamily, s: float, u, tol: float = NEWTON_TOL) -> np.ndarray:
    T, res, ok = F.kappa_inv(s, np.asarray(u, dtype=float)[None, :], tol=tol)
    if not ok[0]:
        raise MaxIterationsExceeded(f"kappa_inv residual {res[0]:.3g} above {tol}", best=T[0], residual=res[0])
    return T[0]


def interior_grid(P: DelzantPolytope, grid: int = 50, inset: float = 0.1) -> np.ndarray:
    """Points of a ``grid x ... x grid`` box lattice over P with every ``l_r >= inset``."""
    lo, hi = P.bbox
    axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.dim)
    return X[np.all(P.ell(X) >= inset, axis=1)]


def legendre_convergence_error(F: PotentialFamily, s: float, grid: int = 50, inset: float = 0.1) -> float:
    """``max |kappa_s^{-1}(u) - L_psi^{-1}(u)|`` over ``u = grad psi(x)``, x on :func:`interior_grid`.

    The points stay a fixed distance from the boundary, so the error decays like
    ``C/s`` (``kappa_s - grad psi = grad(g_P + phi)/s`` is bounded there).
    """
    X = interior_grid(F.polytope, grid, inset)
    if not len(X):
        raise ValidationError("no grid point at the requested inset")
    U = F.psi.evaluate(X)[1]
    T, res, ok = F.kappa_inv(s, U)
    if not ok.all():
        raise MaxIterationsExceeded(f"kappa_inv failed on {int((~ok).sum())} grid points",
                                    best=T[~ok][0], residual=float(res[~ok].max()))
    return float(np.linalg.norm(T - X, axis=1).max())


def complex_structure(F: PotentialFamily, s: float, x) -> tuple[np.ndarray, np.ndarray]:
    """Block matrices ``J = [[0, -G^-1], [G, 0]]`` and ``gamma = diag(G, G^-1)``."""
    G = eval_gs(F, s, x).hessian
    Gi = np.linalg.inv(G)
    n = len(G)
    Z = np.zeros((n, n))
    J = np.block([[Z, -Gi], [G, Z]])
    gamma = np.block([[G, Z], [Z, Gi]])
    return J, gamma


def dual_potential(F: PotentialFamily, s: float, u) -> float:
    """``h(u) = x(u)^T u - g_s(x(u))`` where ``u = grad g_s(x(u))``."""
    u = np.asarray(u, dtype=float)
    T, res, ok = F.solve(u[None, :], float(s), 1.0)
    if not ok[0]:
        raise MaxIterationsExceeded(f"Legendre inverse of g_s residual {res[0]:.3g}", best=T[0], residual=res[0])
    x = T[0]
    return float(x @ u - F.gs(s, x[None, :])[0][0])


def dual_potential_argument(F: PotentialFamily, s: float, u) -> np.ndarray:
    """``x(u) = grad h(u)``."""
    T, res, ok = F.solve(np.asarray(u, dtype=float)[None, :], float(s), 1.0)
    if not ok[0]:
        raise MaxIterationsExceeded("Legendre inverse of g_s failed", best=T[0], residual=res[0])
    return T[0]


@dataclass
class RegularityReport:
    samples: np.ndarray
    products: np.ndarray
    flagged: list[int] = field(default_factory=list)
    spread: float = 1.0

    @property
    def ok(self) -> bool:
        return not self.flagged


def boundary_regularity_check(F: PotentialFamily, samples, s: float = 0.0, spread_limit: float = 1e3) -> RegularityReport:
    """Tabulate ``det Hess g_s * prod l_r`` on interior samples near the boundary.

    Non-positive products are flagged, as is every sample when the ratio of the
    largest to smallest magnitude exceeds ``spread_limit``.
    """
    X, _ = _as_batch(samples)
    _, _, H = F.gs(s, X)
    prod = np.linalg.det(H) * np.prod(F.ell(X), axis=1)
    flagged = [i for i, p in enumerate(prod) if not p > 0]
    pos = np.abs(prod[prod > 0])
    spread = float(pos.max() / pos.min()) if len(pos) else np.inf
    if spread > spread_limit:
        flagged = list(range(len(prod)))
    return RegularityReport(X, prod, flagged, spread)
