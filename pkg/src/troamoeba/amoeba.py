"""Finite-s amoebas, compact amoebas in P, and Hausdorff distances.

Conventions. For ``t = e^s`` the amoeba ``A_s`` lives in ``Log_t`` coordinates:
a point ``y`` stands for the fibre torus ``|w_i| = e^{s y_i}``, and on it the
term ``a_m e^{-s v(m)} w^m`` has modulus ``|a_m| exp(s (m.y - v(m)))``. These
are the same coordinates in which ``kappa_s`` is a diffeomorphism ``P -> R^n``,
so ``A_s`` pulls back to the compact amoeba by ``kappa_s^{-1}``.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyPolynomial, EmptySample, SpaceMismatch, TroAmoebaError, ValidationError
from .polytope import DelzantPolytope, FaceRef
from .potential import PotentialFamily, _Family
from .tropical import TropicalPolynomial

SPACES = ("polytope", "legendre", "ambient")
DEFAULT_THRESHOLD = 1e-3
DEFAULT_THETA_GRID = 256
DEFAULT_GRID = 400
COARSE_THETA = 32
POLISH_STARTS = 4
POLISH_ITER = 12
SWEEP_THETA = 32
LOG_RANGE = 600.0  # coefficient log-moduli spread handled by one rescaled root solve


# -- samples ---------------------------------------------------------------------

@dataclass
class AmoebaSample:
    """A tagged point cloud, optionally carrying the polylines it was sampled from.

    ``pieces`` (when present) are polylines whose union is the sampled set; the
    Hausdorff distance then uses the polylines rather than the bare vertices.
    """

    points: np.ndarray
    tag: str
    space: str = "polytope"
    pieces: list[np.ndarray] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points.reshape(-1, 1) if self.points.size else np.zeros((0, 1))
        if self.space not in SPACES:
            raise ValidationError(f"unknown space {self.space!r}")
        if self.points.size and not np.all(np.isfinite(self.points)):
            raise ValidationError("sample contains non-finite points")
        self.pieces = [np.asarray(p, dtype=float).reshape(len(p), -1) for p in self.pieces]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def segments(self) -> np.ndarray:
        """``(k, 2, n)`` array of consecutive polyline vertex pairs (degenerate pieces give a point)."""
        segs = []
        for p in self.pieces:
            if len(p) == 1:
                segs.append(np.stack([p[0], p[0]])[None])
            else:
                segs.append(np.stack([p[:-1], p[1:]], axis=1))
        if not segs:
            return np.zeros((0, 2, self.dim))
        return np.concatenate(segs)

    def check_in_polytope(self, P: DelzantPolytope, tol: float = 1e-7) -> bool:
        return self.space != "polytope" or len(self) == 0 or bool(np.all(P.ell(self.points) >= -tol))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(self.dim)] + ["tag"])
        for p in self.points:
            w.writerow([f"{c:.12g}" for c in p] + [self.tag])
        return buf.getvalue()

    @classmethod
    def from_segments(cls, segs, tag: str, space: str = "polytope", per_segment: int = 2) -> "AmoebaSample":
        segs = np.asarray(segs, dtype=float)
        pieces = [s for s in segs]
        ts = np.linspace(0, 1, max(per_segment, 2))
        pts = np.concatenate([a + ts[:, None] * (b - a) for a, b in segs]) if len(segs) else np.zeros((0, 2))
        return cls(pts, tag, space, pieces)


# -- membership ------------------------------------------------------------------------

@dataclass(frozen=True)
class MembershipVerdict:
    kind: str  # "CertifiedOut" | "ApproxIn" | "Unknown"
    min_modulus: float | None = None

    def __str__(self):
        return self.kind if self.min_modulus is None else f"{self.kind}({self.min_modulus:.3g})"


def _terms(T: TropicalPolynomial):
    if T is None or not T.terms:
        raise EmptyPolynomial("no terms")
    M, v, a = T.arrays()
    if np.any(a == 0):
        raise EmptyPolynomial("zero coefficient")
    return M, v, a


def _scaled_coeffs(M, v, a, s, Y):
    """Per-point term coefficients normalised so the largest modulus is 1: ``(k, terms)``."""
    logs = s * (Y @ M.T - v) + np.log(np.abs(a))
    logs -= logs.max(axis=1, keepdims=True)
    return np.exp(logs) * (a / np.abs(a))


def lopsided(C: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Rows whose largest modulus beats the sum of the others by more than ``threshold`` (max = 1)."""
    R = np.abs(C)
    return 1.0 - (R.sum(axis=1) - 1.0) > threshold


def _theta_grid(n: int, k: int) -> np.ndarray:
    axes = [2 * np.pi * np.arange(k) / k] * n
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)


def _polish(C, M, thetas, iters=POLISH_ITER):
    """Gauss-Newton on ``f(theta) = sum c_k e^{i m_k.theta} = 0`` from each start; best ``|f|`` per row."""
    # C: (k, terms); thetas: (k, starts, n)
    best = np.full(len(C), np.inf)
    for _ in range(iters + 1):
        E = np.exp(1j * np.einsum("ksn,tn->kst", thetas, M))  # (k, starts, terms)
        terms = C[:, None, :] * E
        f = terms.sum(axis=2)
        best = np.minimum(best, np.abs(f).min(axis=1))
        # d f / d theta_j = i sum c_t m_tj e^{...}
        df = 1j * np.einsum("kst,tn->ksn", terms, M)
        J = np.stack([df.real, df.imag], axis=-2)  # (k, s, 2, n)
        r = np.stack([f.real, f.imag], axis=-1)[..., None]  # (k, s, 2, 1)
        step = np.linalg.pinv(J) @ r
        thetas = thetas - step[..., 0]
    return best


def membership_batch(T: TropicalPolynomial, s: float, Y, theta_grid: int = DEFAULT_THETA_GRID,
                     threshold: float = DEFAULT_THRESHOLD, full_grid: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised verdicts for the rows of ``Y``.

    Returns ``(codes, min_modulus)`` with codes 0 = CertifiedOut, 1 = ApproxIn,
    2 = Unknown; moduli are relative to the largest term.

    Exclusion is by lopsidedness with margin ``threshold`` (then ``|f|`` is at
    least ``threshold`` everywhere on the torus). Remaining points are screened on
    a coarse angle grid with a Lipschitz bound; survivors are polished by
    Gauss-Newton from the best coarse nodes, and with ``full_grid`` the whole
    ``theta_grid`` is evaluated as well.
    """
    if s <= 0:
        raise ValidationError("s must be positive")
    M, v, a = _terms(T)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = M.shape[1]
    codes = np.zeros(len(Y), dtype=np.int8)
    mins = np.full(len(Y), np.nan)
    C = _scaled_coeffs(M, v, a, s, Y)
    lop = lopsided(C, threshold)
    R = np.abs(C)
    mins[lop] = 1.0 - (R[lop].sum(axis=1) - 1.0)  # lower bound on |f|
    idx = np.flatnonzero(~lop)
    if not len(idx):
        return codes, mins
    k = min(COARSE_THETA, theta_grid)
    TH = _theta_grid(n, k)
    lip = np.abs(C[idx]) @ np.abs(M).sum(axis=1)
    half = np.pi / k
    for chunk in np.array_split(np.arange(len(idx)), max(1, len(idx) * len(TH) // 2_000_000)):
        rows = idx[chunk]
        Cc = C[rows]
        F = np.abs(Cc @ np.exp(1j * (TH @ M.T)).T)  # (k, nodes)
        fmin = F.min(axis=1)
        maybe = fmin - lip[chunk] * half < threshold
        found = np.minimum(fmin, np.inf)
        sel = np.flatnonzero(maybe)
        if len(sel):
            nstart = min(POLISH_STARTS, F.shape[1])
            starts = np.argpartition(F[sel], nstart - 1, axis=1)[:, :nstart]
            pol = _polish(Cc[sel], M, TH[starts])
            found[sel] = np.minimum(found[sel], pol)
        if full_grid:
            TF = _theta_grid(n, theta_grid)
            for r_i, r in enumerate(rows):
                found[r_i] = min(found[r_i], np.abs(np.exp(1j * (TF @ M.T)) @ C[r]).min())
        codes[rows] = np.where(found < threshold, 1, 2)
        mins[rows] = found
    return codes, mins


def amoeba_membership(T: TropicalPolynomial, s: float, y, theta_grid: int = DEFAULT_THETA_GRID,
                      threshold: float = DEFAULT_THRESHOLD) -> MembershipVerdict:
    """Verdict for one point ``y`` (Log_t coordinates) of the amoeba of ``sum a_m e^{-s v(m)} w^m``."""
    codes, mins = membership_batch(T, s, np.asarray(y, dtype=float)[None, :], theta_grid, threshold, full_grid=True)
    kind = ("CertifiedOut", "ApproxIn", "Unknown")[codes[0]]
    return MembershipVerdict(kind, float(mins[0]))


# -- one-variable amoebas are finite: use polynomial roots --------------------------

def log_roots(exps, logc, phase) -> np.ndarray:
    """``log|w|`` over the nonzero roots of ``sum_t exp(logc_t + i phase_t) w^{exps_t}``.

    Coefficient moduli may span far more than the double range. Each edge of
    the upper Newton polygon of ``(exps, logc)`` fixes a scale ``rho`` holding as
    many roots as its width; the polynomial is rescaled by ``w = e^rho z``, the
    negligible terms are dropped, and the roots with ``|z|`` nearest 1 are kept.
    """
    exps = np.asarray(exps, dtype=int)
    logc = np.asarray(logc, dtype=float)
    phase = np.asarray(phase, dtype=float)
    # merge equal exponents (the sum of their terms, still in log form)
    E, inv = np.unique(exps, return_inverse=True)
    L = np.full(len(E), -np.inf)
    Ph = np.zeros(len(E))
    for g in range(len(E)):
        sel = inv == g
        m = logc[sel].max()
        val = np.sum(np.exp(logc[sel] - m + 1j * phase[sel]))
        if val != 0:
            L[g], Ph[g] = m + np.log(abs(val)), np.angle(val)
    keep = np.isfinite(L)
    E, L, Ph = E[keep], L[keep], Ph[keep]
    if len(E) < 2:
        return np.zeros(0)
    hull = [0]
    for i in range(1, len(E)):  # upper hull, scanning by increasing exponent
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (L[b] - L[a]) * (E[i] - E[a]) <= (L[i] - L[a]) * (E[b] - E[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    out = []
    for a, b in zip(hull[:-1], hull[1:]):
        rho = -(L[b] - L[a]) / (E[b] - E[a])
        Ls = L + rho * E
        Ls -= Ls.max()
        near = Ls > -LOG_RANGE
        e = E[near] - E[near].min()
        coef = np.zeros(e.max() + 1, dtype=complex)
        coef[e.max() - e] = np.exp(Ls[near] + 1j * Ph[near])
        z = np.roots(coef)
        z = z[z != 0]
        lz = np.log(np.abs(z))
        out.append(rho + np.sort(lz[np.argsort(np.abs(lz))[:E[b] - E[a]]]))
    return np.concatenate(out)


def amoeba_points_1d(exps: Sequence[int], v: Sequence[float], a: Sequence[complex], s: float) -> np.ndarray:
    """``Log_t`` moduli of the roots of ``sum a_k e^{-s v_k} w^{e_k}`` (sorted, distinct)."""
    a = np.asarray(a, dtype=complex)
    logc = -s * np.asarray(v, dtype=float) + np.log(np.abs(a))
    ys = log_roots(exps, logc, np.angle(a)) / s
    return np.unique(np.round(np.sort(ys), 13))


# -- compact amoebas ----------------------------------------------------------------------

def legendre_box(fam: _Family, margin: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Box around ``grad psi`` of the (face) polytope, in local coordinates, padded by ``margin``.

    The default pad is a quarter of the widest side (at least 1/4).
    """
    L = fam.local_vertices
    w = np.linspace(0, 1, 9)
    pts = [L] + [L[i] + w[:, None] * (L[j] - L[i]) for i, j in itertools.combinations(range(len(L)), 2)]
    U = fam.psi_jet(np.concatenate(pts))[1]
    lo, hi = U.min(axis=0), U.max(axis=0)
    pad = 0.25 * max(float(np.max(hi - lo)), 1.0) if margin is None else margin
    return lo - pad, hi + pad


def _face_terms(P: DelzantPolytope, T: TropicalPolynomial, face: FaceRef):
    keep = [m for m in T.exponents if all(P.ell_exact(m)[r] == 0 for r in face.active)]
    return keep


def _face_coords(P: DelzantPolytope, face: FaceRef, m) -> np.ndarray:
    origin, B = P.face_chart(face)
    return np.linalg.lstsq(B, np.asarray(m, dtype=float) - origin, rcond=None)[0]


def sample_compact_amoeba(P: DelzantPolytope, F: PotentialFamily, T: TropicalPolynomial, s: float,
                          grid: int = DEFAULT_GRID, theta_grid: int = DEFAULT_THETA_GRID,
                          threshold: float = DEFAULT_THRESHOLD, margin: float | None = None,
                          tol: float = 1e-10, sweep_theta: int = SWEEP_THETA,
                          box: tuple | None = None) -> AmoebaSample:
    """Sample ``mu_P(Y_s)`` face by face.

    On the open interior a uniform ``grid^n`` box in ``Log_t`` space (covering
    ``grad psi(P)`` plus ``margin``) is tested for membership and the hits pulled
    back by ``kappa_s^{-1}``. On a proper face the polynomial restricts to the
    terms lying in that face: with no terms the whole face lies in the closure,
    with one term none of it does, otherwise the face is treated recursively
    (one-dimensional strata exactly, through polynomial roots).

    Far from its centre an amoeba thins out exponentially in ``s`` and soon
    falls between grid nodes. For ``n = 2`` the grid hits are therefore joined
    by exact zeros: along each grid line ``y_j = c`` and for ``sweep_theta``
    fibre angles the polynomial in the other variable is solved by its roots
    (``sweep_theta = 0`` switches this off).

    ``box = (lo, hi)`` replaces the interior box (it is widened to contain the
    default one); tentacles that keep moving in ``P`` far out need it.
    """
    if s <= 0:
        raise ValidationError("s must be positive")
    M_all, _, _ = _terms(T)
    if M_all.shape[1] != P.dim:
        raise ValidationError("polynomial and polytope dimensions differ")
    chunks, labels = [], []
    for face in P.faces:
        keep = _face_terms(P, T, face)
        fdim = P.dim - face.codim
        if len(keep) == 1:
            continue
        if fdim == 0:
            if not keep:
                chunks.append(P.vertex_array[P.face_vertices(face)])
                labels.append(f"face{list(face.active)}")
            continue
        fam = F if face.codim == 0 else F.restrict(face)
        if not keep:
            # the whole stratum lies in the closure: sample it via kappa_inv of a y-grid
            X = _stratum_grid(P, face, grid)
            chunks.append(X)
            labels.append(f"face{list(face.active)}")
            continue
        # the open interior works in ambient coordinates, proper faces in the chart of F.restrict
        tau = np.asarray([m if face.codim == 0 else _face_coords(P, face, m) for m in keep], dtype=float)
        v = np.asarray([float(T.terms[m]) for m in keep])
        a = np.asarray([T.coeffs[m] if T.coeffs else 1.0 for m in keep], dtype=complex)
        if fdim == 1:
            e = np.rint(tau[:, 0]).astype(int)
            ys = amoeba_points_1d(e, v, a, s)
            if not len(ys):
                continue
            U = ys[:, None]
        else:
            lo, hi = interior_box(fam, margin, box if face.codim == 0 else None)
            U = _membership_grid(lo, hi, tau, v, a, s, grid, theta_grid, threshold)
            if fdim == 2 and sweep_theta:
                U = np.concatenate([U, root_sweep_2d(tau, v, a, s, lo, hi, grid, sweep_theta)])
            if not len(U):
                continue
        X0 = _warm_start(P, F, U, s) if face.codim == 0 else None
        Tloc, res, ok = fam.kappa_inv(s, U, tol=tol, X0=X0)
        X = fam.to_ambient(Tloc)
        chunks.append(X)
        labels.append(f"face{list(face.active)}")
    pts = np.concatenate(chunks) if chunks else np.zeros((0, P.dim))
    return AmoebaSample(pts, f"finite_s({s:g})", "polytope", labels=labels)


def _warm_start(P: DelzantPolytope, F: PotentialFamily, U: np.ndarray, s: float) -> np.ndarray | None:
    """Starting points for ``kappa_s^{-1}`` from the cone partition of ``psi``.

    With apex ``p = pi(u)`` and cone coefficients ``c_r`` the solution has
    ``l_r ~ exp(-2 s c_r - 1)`` on the facets active at ``p``; starting there
    saves the many clamped Newton steps needed to approach a facet from inside.
    Returns None when ``phi`` is non-zero or the projection fails.
    """
    from .projection import project_batch  # projection imports this module
    from .potential import ZeroFunction

    if not isinstance(F.phi, ZeroFunction) or not F.include_gp:
        return None
    try:
        X, which, coefs = project_batch(F.psi, P, U)
    except TroAmoebaError:
        return None
    X0 = X.copy()
    c = P.centroid
    for fi in np.unique(which):
        rows = np.flatnonzero(which == fi)
        act = list(P.faces[fi].active)
        if act:
            C = np.stack([coefs[j] for j in rows])
            with np.errstate(under="ignore"):
                target = np.exp(np.clip(-2.0 * s * C - 1.0, -700.0, 0.0)) * 0.5
            Na = P.N[act]
            X0[rows] += np.linalg.lstsq(Na, target.T, rcond=None)[0].T
        # nudge every start strictly inside
    X0 = X0 + 1e-12 * (c - X0)
    return X0


def _stratum_grid(P: DelzantPolytope, face: FaceRef, grid: int) -> np.ndarray:
    V = P.vertex_array[P.face_vertices(face)]
    w = np.linspace(0, 1, grid)
    if len(V) == 2:
        return V[0] + w[:, None] * (V[1] - V[0])
    # higher-dimensional strata: barycentric fan from the centroid to every vertex pair
    c = V.mean(axis=0)
    return np.concatenate([c + w[:, None] * (v - c) for v in V])


def _membership_grid(lo, hi, tau, v, a, s, grid, theta_grid, threshold) -> np.ndarray:
    """Grid points of the box (face-local ``Log_t`` coordinates) with verdict ApproxIn."""
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(len(lo))]
    Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    codes = _membership_local(tau, v, a, s, Y, theta_grid, threshold)
    return Y[codes == 1]


def _membership_local(tau, v, a, s, Y, theta_grid, threshold):
    terms = {tuple(int(round(c)) for c in t): float(vv) for t, vv in zip(tau, v)}
    coeffs = {tuple(int(round(c)) for c in t): complex(aa) for t, aa in zip(tau, a)}
    T = TropicalPolynomial.from_items(terms.items(), coeffs)
    codes, _ = membership_batch(T, s, Y, theta_grid, threshold)
    return codes


def root_sweep_2d(tau, v, a, s, lo, hi, grid: int, n_theta: int) -> np.ndarray:
    """Points of ``A_s`` on the grid lines of the box ``[lo, hi]``, from polynomial roots.

    For each axis ``k`` and each fixed ``(y_j, theta_j)`` of the other axis the
    restriction is a Laurent polynomial in ``w_k``; its roots give exact amoeba
    points ``y_k = log|w_k| / s``. Only points inside the box are returned.
    """
    tau = np.rint(np.asarray(tau, dtype=float)).astype(int)
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=complex)
    out = []
    thetas = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    for k in (0, 1):
        j = 1 - k
        ys = np.linspace(lo[j], hi[j], grid)
        yy, th = np.meshgrid(ys, thetas, indexing="ij")
        yy, th = yy.ravel(), th.ravel()
        e = tau[:, k] - tau[:, k].min()
        deg = int(e.max())
        if deg == 0:
            continue
        # log-modulus and phase of each term's coefficient, per row
        logc = s * (np.outer(yy, tau[:, j]) - v) + np.log(np.abs(a))
        phase = np.outer(th, tau[:, j]) + np.angle(a)
        logc -= logc.max(axis=1, keepdims=True)
        wide = logc.min(axis=1) < -LOG_RANGE
        fast = np.flatnonzero(~wide)
        coef = np.zeros((len(fast), deg + 1), dtype=complex)
        for t in range(len(e)):
            coef[:, deg - e[t]] += np.exp(logc[fast, t] + 1j * phase[fast, t])
        roots = _batched_roots(coef)
        with np.errstate(divide="ignore", invalid="ignore"):
            yk = np.log(np.abs(roots)) / s
        rows = np.repeat(yy[fast, None], roots.shape[1], axis=1)
        # far out the terms span more than doubles hold: solve scale by scale
        slow = [(yy[r], log_roots(e, logc[r], phase[r]) / s) for r in np.flatnonzero(wide)]
        yk = np.concatenate([yk.ravel()] + [ys for _, ys in slow])
        rows = np.concatenate([rows.ravel()] + [np.full(len(ys), y) for y, ys in slow])
        good = np.isfinite(yk) & (yk >= lo[k]) & (yk <= hi[k])
        pts = np.empty((int(good.sum()), 2))
        pts[:, k] = yk[good]
        pts[:, j] = rows[good]
        out.append(pts)
    return np.concatenate(out) if out else np.zeros((0, 2))


def _batched_roots(coef: np.ndarray) -> np.ndarray:
    """Roots of each row polynomial (highest degree first); missing roots are NaN."""
    k, d1 = coef.shape
    deg = d1 - 1
    out = np.full((k, deg), np.nan + 0j)
    lead = np.abs(coef[:, 0]) > 1e-250
    if np.any(lead):
        c = coef[lead] / coef[lead, :1]
        comp = np.zeros((len(c), deg, deg), dtype=complex)
        comp[:, 0, :] = -c[:, 1:]
        if deg > 1:
            comp[:, np.arange(1, deg), np.arange(deg - 1)] = 1.0
        out[lead] = np.linalg.eigvals(comp)
    for i in np.flatnonzero(~lead):
        # negligible leading terms only push roots to |w| ~ 1e250, far outside any box
        c = np.where(np.abs(coef[i]) > 1e-250, coef[i], 0.0)
        if not np.any(c):
            continue
        r = np.roots(c)
        out[i, :len(r)] = r
    return out


def interior_box(fam: _Family, margin: float | None = None, box: tuple | None = None):
    """``legendre_box`` widened to contain ``box`` when one is given."""
    lo, hi = legendre_box(fam, margin)
    if box is not None:
        lo, hi = np.minimum(lo, np.asarray(box[0], float)), np.maximum(hi, np.asarray(box[1], float))
    return lo, hi


def grid_step(F: PotentialFamily, grid: int = DEFAULT_GRID, margin: float | None = None,
              box: tuple | None = None) -> float:
    """Spacing of the interior membership grid used by :func:`sample_compact_amoeba`."""
    lo, hi = interior_box(F, margin, box)
    return float(np.max(hi - lo) / (grid - 1))


# -- Hausdorff distances ----------------------------------------------------------------------

def _segment_dists(X: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``(k, m)`` distances from each row of ``X`` to each segment of ``S`` (m, 2, n)."""
    A, B = S[:, 0], S[:, 1]
    D = B - A
    dd = np.einsum("ij,ij->i", D, D)
    W = X[:, None, :] - A[None]
    t = np.where(dd > 0, np.einsum("kij,ij->ki", W, D) / np.where(dd > 0, dd, 1), 0.0)
    R = W - np.clip(t, 0, 1)[..., None] * D[None]
    return np.sqrt(np.einsum("kij,kij->ki", R, R))


def _chunks(k: int, width: int, budget: int = 4_000_000):
    return np.array_split(np.arange(k), max(1, k * max(width, 1) // budget))


class _Target:
    """Distance oracle to a sample: k-d tree for clouds, exact for polylines.

    ``interval_bound(Xa, Xb)`` bounds ``max d(x, target)`` over each segment
    ``[Xa_i, Xb_i]``. For polylines the bound is ``min_j max(d_j(a), d_j(b))``
    (distance to one convex piece is convex along a line); for clouds it is the
    Lipschitz bound.
    """

    def __init__(self, S: AmoebaSample):
        self.segs = S.segments() if S.pieces else None
        self.tree = None if self.segs is not None else cKDTree(S.points)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        if self.segs is None:
            return self.tree.query(X)[0]
        out = np.empty(len(X))
        for c in _chunks(len(X), len(self.segs)):
            out[c] = _segment_dists(X[c], self.segs).min(axis=1)
        return out

    def interval_bound(self, Xa: np.ndarray, Xb: np.ndarray) -> np.ndarray:
        if self.segs is None:
            return np.minimum(self(Xa), self(Xb)) + np.linalg.norm(Xb - Xa, axis=1)
        out = np.empty(len(Xa))
        for c in _chunks(len(Xa), 2 * len(self.segs)):
            out[c] = np.maximum(_segment_dists(Xa[c], self.segs), _segment_dists(Xb[c], self.segs)).min(axis=1)
        return out


def _directed_from_segments(segs: np.ndarray, target: _Target, tol: float) -> float:
    """``sup_{x in segs} d(x, target)`` by interval branch and bound."""
    A, B = segs[:, 0], segs[:, 1]
    best = float(target(np.concatenate([A, B])).max()) if len(segs) else 0.0
    I = np.flatnonzero(np.linalg.norm(B - A, axis=1) > 0)
    a = np.zeros(len(I))
    b = np.ones(len(I))
    while len(I):
        Xa = A[I] + a[:, None] * (B[I] - A[I])
        Xb = A[I] + b[:, None] * (B[I] - A[I])
        ub = target.interval_bound(Xa, Xb)
        live = ub > best + tol
        if not np.any(live):
            break
        I, a, b = I[live], a[live], b[live]
        m = 0.5 * (a + b)
        best = max(best, float(target(A[I] + m[:, None] * (B[I] - A[I])).max()))
        I = np.concatenate([I, I])
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        if len(I) > 4_000_000:
            break
    return best


def directed_hausdorff(A: AmoebaSample, B: AmoebaSample, tol: float = 1e-9) -> float:
    """``sup_{a in A} d(a, B)``."""
    target = _Target(B)
    if A.pieces:
        return _directed_from_segments(A.segments(), target, tol)
    return float(target(A.points).max())


def hausdorff(A: AmoebaSample, B: AmoebaSample, tol: float = 1e-9) -> float:
    """Symmetric Hausdorff distance; polylines are treated as continuous sets."""
    if A.space != B.space:
        raise SpaceMismatch(f"{A.space} vs {B.space}")
    if len(A) == 0 and not A.pieces or len(B) == 0 and not B.pieces:
        raise EmptySample("Hausdorff distance of an empty sample")
    if A.dim != B.dim:
        raise SpaceMismatch("dimension mismatch")
    return max(directed_hausdorff(A, B, tol), directed_hausdorff(B, A, tol))
