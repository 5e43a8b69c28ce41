"""Moment-space shadows of the quantization limits.

The monomial section ``sigma_s^m`` has pointwise norm ``e^{-h_m^s(x)}`` on the
moment polytope with

    h_m^s(x) = (x - m).grad g_s(x) - g_s(x) = h_m^0(x) + s f_m(x),
    f_m(x)   = (x - m).grad psi(x) - psi(x),

so its L1 norm is ``(2 pi)^n`` times an integral over P. ``f_m`` has its unique
minimum ``-psi(m)`` at ``x = m``; the normalised densities concentrate there.

Integrals use a star decomposition of P from the apex ``m``: each simplex is
written in collapsed coordinates ``x = m + rho (Y(u) - m)`` with ``Y`` on the
opposite boundary simplex, and integrated with composite Gauss-Legendre rules
graded towards both ends. The ball ``|x - m| <= eps`` is then simply
``rho <= eps / |Y(u) - m|``. Nodes are never on the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureNotConverged, ValidationError
from .polytope import DelzantPolytope, FaceRef
from .potential import ConvexFunction, PotentialFamily

ORDERS = (8, 16, 32, 64, 128)


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre settings.

    ``grading`` panels shrink geometrically by ``ratio`` towards each end of the
    radial and angular intervals; the order doubles from ``start_order`` until
    the relative change is below ``rtol`` (cap ``max_order``).
    """

    start_order: int = 8
    max_order: int = 128
    rtol: float = 1e-6
    grading: int = 14
    ratio: float = 0.4
    angular_grading: int = 4
    strict: bool = True


@dataclass(frozen=True)
class BSFiber:
    m: tuple[int, ...]
    codim: int

    @property
    def torus_dim(self) -> int:
        return len(self.m) - self.codim


@dataclass(frozen=True)
class SectionData:
    m: tuple[int, ...]
    family: PotentialFamily
    s: float

    def __post_init__(self):
        if tuple(self.m) not in set(self.family.polytope.lattice_points()):
            raise ValidationError(f"{self.m} is not a lattice point of P")


# -- pointwise quantities -------------------------------------------------------------

def f_m(psi: ConvexFunction, m, x) -> np.ndarray | float:
    """``(x - m).grad psi(x) - psi(x)``; batched over rows of ``x``."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    v, g, _ = psi.evaluate(X)
    out = np.einsum("ki,ki->k", X - np.asarray(m, dtype=float), g) - v
    return float(out[0]) if single else out


def h_m_s(F: PotentialFamily, s: float, m, x) -> np.ndarray | float:
    """``(x - m).grad g_s(x) - g_s(x)`` at interior points."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    v, g, _ = F.gs(s, X)
    out = np.einsum("ki,ki->k", X - np.asarray(m, dtype=float), g) - v
    return float(out[0]) if single else out


def _h_split(F: PotentialFamily, s: float, m, X) -> tuple[np.ndarray, np.ndarray]:
    """``(h_m^0, f_m)`` separately, so large ``s`` does not swamp ``h^0`` in rounding."""
    mm = np.asarray(m, dtype=float)
    v, g, _ = F.barrier(X)
    h0 = np.einsum("ki,ki->k", X - mm, g) - v
    return h0, f_m(F.psi, mm, X)


def polarization_gap(F: PotentialFamily, s: float, x) -> float:
    """Spectral norm of ``G_s(x)^{-1}``, ``G_s = Hess g_s``."""
    _, _, H = F.gs(s, np.asarray(x, dtype=float)[None, :])
    H = 0.5 * (H[0] + H[0].T)
    return float(1.0 / np.linalg.eigvalsh(H).min())


def polarization_bound(F: PotentialFamily, s: float, x) -> float:
    """``1 / (s lambda_min(Hess psi(x)))``."""
    H = F.psi.hess(np.asarray(x, dtype=float))
    return float(1.0 / (s * np.linalg.eigvalsh(0.5 * (H + H.T)).min()))


def bs_fibers(P: DelzantPolytope) -> list[BSFiber]:
    """One Bohr-Sommerfeld fibre per lattice point, with the codimension of its face."""
    return [BSFiber(m, P.locate(np.asarray(m, dtype=float)).codim) for m in P.lattice_points()]


def bs_count(P: DelzantPolytope) -> int:
    return len(P.lattice_points())


# -- quadrature ------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1), 0.5 * w


def _graded_breaks(k: int, ratio: float) -> np.ndarray:
    """Breakpoints of [0, 1] refined geometrically towards both ends."""
    left = ratio ** np.arange(k, 0, -1) * 0.5
    return np.concatenate([[0.0], left, [0.5], 1.0 - left[::-1], [1.0]])


def _composite(order: int, breaks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss(order)
    a, b = breaks[:-1], breaks[1:]
    nodes = (a[:, None] + (b - a)[:, None] * x[None]).ravel()
    weights = ((b - a)[:, None] * w[None]).ravel()
    return nodes, weights


def star_simplices(P: DelzantPolytope, apex) -> list[np.ndarray]:
    """Simplices ``[apex, V_1..V_n]`` coning ``apex`` over the boundary faces that miss it."""
    apex = np.asarray(apex, dtype=float)
    L = P.ell(apex)
    out = []
    for face in P.faces:
        if face.codim != 1 or abs(L[face.active[0]]) <= 1e-12:
            continue
        for simplex in _triangulate(P, face):
            out.append(np.vstack([apex, simplex]))
    return out


def _triangulate(P: DelzantPolytope, face: FaceRef) -> list[np.ndarray]:
    """Pulling triangulation of a face into simplices of its dimension."""
    verts = P.face_vertices(face)
    V = P.vertex_array
    if P.dim - face.codim == 0:
        return [V[verts]]
    apex = verts[0]
    out = []
    for sub in P.faces:
        if sub.codim == face.codim + 1 and set(face.active) < set(sub.active) and apex not in P.face_vertices(sub):
            for simplex in _triangulate(P, sub):
                out.append(np.vstack([V[apex], simplex]))
    return out


def _duffy(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cube ``[0,1]^{d}`` to barycentric coordinates on the ``d``-simplex, with Jacobian."""
    k, d = u.shape
    beta = np.zeros((k, d + 1))
    rest = np.ones(k)
    jac = np.ones(k)
    for i in range(d):
        beta[:, i + 1] = rest * u[:, i]
        jac *= rest
        rest = rest * (1 - u[:, i])
    beta[:, 0] = rest
    return beta, jac


@dataclass(frozen=True)
class _Rule:
    X: np.ndarray       # nodes in P
    W: np.ndarray       # weights (with Jacobian)
    ball: np.ndarray    # weights of the same nodes restricted to the epsilon ball (or empty)


def _star_rule(P: DelzantPolytope, apex, order: int, spec: QuadratureSpec, epsilon: float | None) -> _Rule:
    n = P.dim
    rn, rw = _composite(order, _graded_breaks(spec.grading, spec.ratio))
    if n > 1:
        an, aw = _composite(order, _graded_breaks(spec.angular_grading, spec.ratio))
        grids = np.meshgrid(*([an] * (n - 1)), indexing="ij")
        U = np.stack([g.ravel() for g in grids], axis=1)
        UW = np.prod(np.stack(np.meshgrid(*([aw] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1), axis=1)
    else:
        U, UW = np.zeros((1, 0)), np.ones(1)
    beta, jac = _duffy(U)
    Xs, Ws, Bs = [], [], []
    for S in star_simplices(P, apex):
        A, far = S[0], S[1:]
        Y = beta @ far                        # (a, n) points on the far simplex
        vol = abs(np.linalg.det(far - A)) if n > 1 else abs(float(far[0, 0] - A[0]))
        for cut in ([1.0] if epsilon is None else [1.0, "ball"]):
            if cut == 1.0:
                rmax = np.ones(len(Y))
            else:
                rmax = np.minimum(1.0, epsilon / np.linalg.norm(Y - A, axis=1))
            rho = rmax[:, None] * rn[None, :]                          # (a, r)
            w = (UW * jac * vol * rmax)[:, None] * rw[None, :] * rho ** (n - 1)
            X = A + rho[..., None] * (Y - A)[:, None, :]
            if cut == 1.0:
                Xs.append(X.reshape(-1, n))
                Ws.append(w.ravel())
            else:
                Bs.append((X.reshape(-1, n), w.ravel()))
    X = np.concatenate(Xs)
    W = np.concatenate(Ws)
    if epsilon is None:
        return _Rule(X, W, np.zeros(0))
    BX = np.concatenate([b[0] for b in Bs])
    BW = np.concatenate([b[1] for b in Bs])
    return _Rule(np.concatenate([X, BX]), np.concatenate([W, np.zeros(len(BW))]),
                 np.concatenate([np.zeros(len(W)), BW]))


@dataclass(frozen=True)
class Moments:
    """Log-scale integrals of ``e^{-h_m^s}`` over P (and the ball), plus weighted means."""

    log_mass: float
    log_ball: float
    mean_f: float
    pairing: float
    error: float
    order: int


def _moments(F: PotentialFamily, s: float, m, spec: QuadratureSpec, epsilon: float | None = None,
             tau: Callable | None = None) -> Moments:
    P = F.polytope
    m = np.asarray(m, dtype=float)
    if np.any(P.ell(m) < -1e-12):
        raise ValidationError(f"{list(m)} lies outside P")
    prev = None
    order = spec.start_order
    while True:
        rule = _star_rule(P, m, order, spec, epsilon)
        h0, f = _h_split(F, s, m, rule.X)
        H = h0 + s * f
        c = H[rule.W > 0].min()
        E = np.exp(-(H - c))
        mass = math.fsum(rule.W * E)
        cur = Moments(
            log_mass=math.log(mass) - c,
            log_ball=(math.log(math.fsum(rule.ball * E)) - c) if epsilon is not None else float("nan"),
            mean_f=math.fsum(rule.W * E * f) / mass,
            pairing=(math.fsum(rule.W * E * tau(rule.X)) / mass) if tau is not None else float("nan"),
            error=float("inf"),
            order=order,
        )
        if prev is not None:
            err = max(abs(cur.log_mass - prev.log_mass),
                      abs(cur.mean_f - prev.mean_f) / max(abs(cur.mean_f), 1e-300),
                      0.0 if epsilon is None else abs(cur.log_ball - prev.log_ball),
                      0.0 if tau is None else abs(cur.pairing - prev.pairing) / max(abs(cur.pairing), 1e-300))
            cur = Moments(cur.log_mass, cur.log_ball, cur.mean_f, cur.pairing, err, order)
            if err < spec.rtol:
                return cur
        if order * 2 > spec.max_order:
            if spec.strict:
                raise QuadratureNotConverged(
                    f"quadrature relative change {cur.error:.3g} above {spec.rtol} at order {order}",
                    estimate=cur, error=cur.error)
            return cur
        prev = cur
        order *= 2


def log_section_norm_l1(F: PotentialFamily, s: float, m, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``log ||sigma_s^m||_1 = n log(2 pi) + log int_P e^{-h_m^s}``."""
    return F.polytope.dim * math.log(2 * math.pi) + _moments(F, s, m, spec).log_mass


def section_norm_l1(F: PotentialFamily, s: float, m, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``(2 pi)^n int_P e^{-h_m^s} dx`` (may underflow for large ``s``; see the log version)."""
    return math.exp(log_section_norm_l1(F, s, m, spec))


def dirac_concentration(F: PotentialFamily, s: float, m, epsilon: float,
                        spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Mass fraction of the normalised density inside ``B_eps(m) n P``."""
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    mo = _moments(F, s, m, spec, epsilon=epsilon)
    return float(min(1.0, math.exp(mo.log_ball - mo.log_mass)))


def norm_log_derivative(F: PotentialFamily, s: float, m, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``d/ds log ||sigma_s^m||_1 = -int f_m zeta_s``; tends to ``psi(m)``."""
    if s <= 0:
        raise ValidationError("s must be positive")
    return -_moments(F, s, m, spec).mean_f


def norm_log_derivative_fd(F: PotentialFamily, s: float, m, rel_step: float = 1e-2,
                           spec: QuadratureSpec = QuadratureSpec(rtol=1e-10, max_order=128, strict=False)) -> float:
    """Central difference of ``log ||sigma_s^m||_1`` in ``s`` with step ``rel_step * s``."""
    h = rel_step * s
    return (log_section_norm_l1(F, s + h, m, spec) - log_section_norm_l1(F, s - h, m, spec)) / (2 * h)


def fourier_pairing(F: PotentialFamily, s: float, m, tau: Callable[[np.ndarray], np.ndarray],
                    spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``int_P zeta_s tau`` for a test function ``tau`` on P (batched over rows)."""
    return _moments(F, s, m, spec, tau=tau).pairing


def density(F: PotentialFamily, s: float, m, x) -> np.ndarray:
    """Normalised density ``zeta_s(x) = e^{-h_m^s(x)} / int_P e^{-h_m^s}``."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    lm = _moments(F, s, m, QuadratureSpec()).log_mass
    h0, f = _h_split(F, s, m, X)
    return np.exp(-(h0 + s * f) - lm)


def convergence_table(F: PotentialFamily, m, s_list: Sequence[float], epsilon: float,
                      spec: QuadratureSpec = QuadratureSpec()) -> list[dict]:
    """Rows ``(s, mass fraction, log-norm, log-derivative)`` for the ``sections`` report."""
    rows = []
    n = F.polytope.dim
    for s in s_list:
        mo = _moments(F, s, m, spec, epsilon=epsilon)
        rows.append({
            "s": float(s),
            "mass_fraction": float(min(1.0, math.exp(mo.log_ball - mo.log_mass))),
            "log_norm": n * math.log(2 * math.pi) + mo.log_mass,
            "log_derivative": -mo.mean_f,
        })
    return rows
