"""Acceptance criteria 1-13, one test each.

Every test records a ``criterion N: PASS|FAIL  detail`` line; the lines are
printed as they happen and again, in order, in the terminal summary. Run alone
with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from troamoeba.amoeba import AmoebaSample, grid_step, hausdorff, sample_compact_amoeba
from troamoeba.pipeline import run_scenario, tropical_locus
from troamoeba.polytope import box, hexagon, segment, standard_simplex
from troamoeba.potential import (
    PotentialFamily,
    Quadratic,
    identity_quadratic,
    interior_grid,
    legendre_convergence_error,
)
from troamoeba.projection import curve_box, gq_amoeba, limit_amoeba
from troamoeba.quantization import (
    bs_count,
    dirac_concentration,
    norm_log_derivative,
    norm_log_derivative_fd,
    polarization_bound,
    polarization_gap,
)
from troamoeba.scenario import load_scenario
from troamoeba.tropical import PolyhedralComplex, TropicalPolynomial, tropical_curve_2d

from conftest import TRIPOD_V, SCENARIOS, interior_points

RESULTS: dict[int, str] = {}
GOLDEN = sorted(SCENARIOS.glob("*.yaml"))


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def golden_quadratic_runs():
    """(scenario, polytope, psi) for every quadratic psi in the golden scenarios."""
    out = []
    for path in GOLDEN:
        sc = load_scenario(path)
        P = sc.polytope()
        for psi in sc.psi_functions():
            if isinstance(psi, Quadratic):
                out.append((sc, P, psi))
    return out


def tripod_data():
    P = standard_simplex()
    return P, TropicalPolynomial.from_items(TRIPOD_V.items())


# -- 1 ------------------------------------------------------------------------------

def test_c01_tropical_exactness():
    t0 = time.perf_counter()
    _, T = tripod_data()
    C = tropical_curve_2d(T)
    dt = time.perf_counter() - t0
    rays = sorted(tuple(int(c) for c in d) for _, d in C.rays)
    ok = (C.vertices == ((Fraction(1, 2), Fraction(1, 4)),)
          and all(isinstance(c, Fraction) for c in C.vertices[0])
          and rays == [(-1, 0), (0, -1), (1, 1)] and not C.segments and dt < 1.0)
    record(1, ok, f"vertex {tuple(str(c) for c in C.vertices[0])} rays {rays} in {dt:.3f}s")


# -- 2 ------------------------------------------------------------------------------

def _euclid_simplex_projection(y):
    """Independent oracle: Euclidean projection onto {x >= 0, x1 + x2 <= 1} (sort-based)."""
    x = np.maximum(y, 0.0)
    if x.sum() <= 1.0:
        return x
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    k = max(j for j in range(1, len(u) + 1) if u[j - 1] - (css[j - 1] - 1) / j > 0)
    tau = (css[k - 1] - 1) / k
    return np.maximum(y - tau, 0.0)


def test_c02_limit_amoeba_anchor():
    t0 = time.perf_counter()
    P, T = tripod_data()
    psi = identity_quadratic(2)
    L = limit_amoeba(psi, P, tropical_curve_2d(T))
    dt = time.perf_counter() - t0
    anchor = AmoebaSample.from_segments([[[0.5, 0.0], [0.5, 0.25]], [[0.0, 0.25], [0.5, 0.25]],
                                         [[0.5, 0.25], [0.625, 0.375]]], "anchor")
    h = hausdorff(L, anchor)
    # oracle: push dense points of the tripod through the sort-based projection
    base = np.array([0.5, 0.25])
    ts = np.linspace(0, 3, 3001)[:, None]
    Y = np.concatenate([base + ts * d for d in ([-1, 0], [0, -1], [1, 1])])
    O = AmoebaSample(np.array([_euclid_simplex_projection(y) for y in Y]), "oracle")
    h_oracle = hausdorff(O, anchor)
    ok = h <= 1e-6 and h_oracle <= 1e-3 and dt < 5.0
    record(2, ok, f"H(pipeline, anchor) = {h:.2e}, H(oracle, anchor) = {h_oracle:.2e}, {dt:.2f}s")


# -- 3 ------------------------------------------------------------------------------

def test_c03_piecewise_linearity():
    worst, triples = 0.0, 0
    for sc, P, psi in golden_quadratic_runs():
        if P.dim != 2:
            continue
        T = sc.tropical(psi, P)
        L = limit_amoeba(psi, P, tropical_locus(T, PotentialFamily(P, psi)), sc.samples_per_edge)
        for piece in L.pieces:
            for a, b, c in zip(piece, piece[1:], piece[2:]):
                d = c - a
                nd = np.linalg.norm(d)
                if nd == 0:
                    continue
                dev = abs(d[0] * (b - a)[1] - d[1] * (b - a)[0]) / nd
                worst = max(worst, dev)
                triples += 1
    record(3, worst <= 1e-8 and triples > 0, f"{triples} triples, max deviation {worst:.2e}")


# -- 4 ------------------------------------------------------------------------------

def _lattice_on_complex(P, C: PolyhedralComplex) -> int:
    S = np.asarray(P.lattice_points(), dtype=float)
    if C.segments:
        hits = 0
        for a, b in C.segment_array():
            d = b - a
            t = np.clip(((S - a) @ d) / (d @ d), 0, 1)
            hits += int(np.sum(np.linalg.norm(S - (a + t[:, None] * d), axis=1) <= 1e-9))
        return hits
    V = C.vertex_array()
    return int(sum(np.min(np.linalg.norm(V - s, axis=1)) <= 1e-9 for s in S)) if len(V) else 0


def test_c04_gq_simplex_and_lattice_avoidance():
    t0 = time.perf_counter()
    P = standard_simplex()
    C = gq_amoeba(P, identity_quadratic(2))
    h = Fraction(1, 2)
    segs = {tuple(sorted((C.vertices[a], C.vertices[b]))) for a, b in C.segments}
    exact = segs == {((0, h), (h, h)), ((h, 0), (h, h))}
    dt = time.perf_counter() - t0
    hits = sum(_lattice_on_complex(P_, gq_amoeba(P_, psi)) for _, P_, psi in golden_quadratic_runs())
    ok = exact and hits == 0 and dt < 1.0
    record(4, ok, f"two exact segments: {exact}; lattice points on GQ amoebas of golden scenarios: {hits}; {dt:.3f}s")


# -- 5 ------------------------------------------------------------------------------

def _edge_set(C: PolyhedralComplex, A=None, k=None):
    V = C.vertex_array()
    if A is not None:
        V = V @ np.asarray(A, float).T
    if k is not None:
        V = V + np.asarray(k, float)
    if C.segments:
        return sorted(tuple(sorted((tuple(V[a]), tuple(V[b])))) for a, b in C.segments)
    return sorted(tuple(v) for v in V)


def _same(E1, E2, tol=1e-9):
    return len(E1) == len(E2) and all(np.allclose(np.asarray(a), np.asarray(b), atol=tol) for a, b in zip(E1, E2))


def test_c05_gq_equivariance():
    checked, bad = 0, 0
    for sc, P, psi in golden_quadratic_runs():
        base = gq_amoeba(P, psi)
        if P.dim == 2:
            moves = [(None, (1, 2)), ([[1, 1], [0, 1]], None)]
        else:
            moves = [(None, (1,)), ([[-1]], None)]
        for A, k in moves:
            if k is not None:
                moved = gq_amoeba(P.translate(k), psi.translated(k))
            else:
                moved = gq_amoeba(P.transform(A), psi.transformed(A))
            checked += 1
            bad += not _same(_edge_set(moved), _edge_set(base, A, k))
    record(5, bad == 0, f"{checked} transformed GQ amoebas, {bad} mismatches")


# -- 6 ------------------------------------------------------------------------------

def test_c06_hausdorff_convergence():
    t0 = time.perf_counter()
    sc = load_scenario(SCENARIOS / "p2_fig2.yaml")
    P = sc.polytope()
    psi = sc.psi_functions()[0]
    F = PotentialFamily(P, psi)
    T = sc.tropical(psi, P)
    curve = tropical_curve_2d(T)
    L = limit_amoeba(psi, P, curve, sc.samples_per_edge)
    bx = curve_box(psi, P, curve)
    step = grid_step(F, sc.grid, box=bx)
    H = []
    for s in (5, 10, 20, 50, 100):
        S = sample_compact_amoeba(P, F, T, s, sc.grid, sc.theta_grid, sc.threshold, box=bx)
        H.append(hausdorff(S, L))
    dt = time.perf_counter() - t0
    mono = all(b <= a + 2 * step for a, b in zip(H, H[1:]))
    ok = mono and H[-1] < 5 * step and dt < 60
    record(6, ok, "H = " + ", ".join(f"{h:.4f}" for h in H)
           + f"; grid cell {step:.5f}; H(100) = {H[-1] / step:.2f} cells; {dt:.1f}s")


# -- 7 ------------------------------------------------------------------------------

def test_c07_legendre_convergence():
    P = standard_simplex()
    F = PotentialFamily(P, identity_quadratic(2))
    errs = [legendre_convergence_error(F, s, grid=50, inset=0.1) for s in (10, 100, 1000, 10000)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok = all(8 <= r <= 12 for r in ratios)
    record(7, ok, f"{len(interior_grid(P))} grid points; errors "
           + ", ".join(f"{e:.3e}" for e in errs) + "; ratios " + ", ".join(f"{r:.2f}" for r in ratios))


# -- 8 ------------------------------------------------------------------------------

def test_c08_dirac_concentration():
    t0 = time.perf_counter()
    F = PotentialFamily(segment(), identity_quadratic(1))
    s_list = (10, 100, 1000, 10000)
    fr = [dirac_concentration(F, s, (0,), 0.1) for s in s_list]
    dt = time.perf_counter() - t0
    ok = fr[2] >= 0.98 and fr[3] >= 0.999 and all(a <= b for a, b in zip(fr, fr[1:])) and dt < 1.0
    record(8, ok, "fractions " + ", ".join(f"{f:.5f}" for f in fr) + f" at s = {s_list}; {dt:.3f}s")


# -- 9 ------------------------------------------------------------------------------

def test_c09_norm_derivative_limit():
    F = PotentialFamily(segment(), identity_quadratic(1))
    lim = {0: 0.0, 1: 0.5}
    d = {m: norm_log_derivative(F, 1e4, (m,)) for m in lim}
    near = all(abs(d[m] - lim[m]) <= 1e-2 for m in lim)
    rel = 0.0
    for m in lim:
        for s in (10.0, 100.0, 1000.0):
            a, b = norm_log_derivative(F, s, (m,)), norm_log_derivative_fd(F, s, (m,))
            rel = max(rel, abs(a - b) / max(abs(b), 1e-12))
    record(9, near and rel <= 1e-3, f"d/ds log norm at s=1e4: m=0 {d[0]:.6f}, m=1 {d[1]:.6f}; "
           f"analytic vs FD max rel {rel:.2e}")


# -- 10 -----------------------------------------------------------------------------

def test_c10_polarization_gap():
    rng = np.random.default_rng(2024)
    worst, count = 0.0, 0
    for path in GOLDEN:
        sc = load_scenario(path)
        P = sc.polytope()
        for psi in sc.psi_functions():
            F = PotentialFamily(P, psi)
            for x in interior_points(P, 1000, rng):
                s = float(10 ** rng.uniform(0, 4))
                worst = max(worst, polarization_gap(F, s, x) / polarization_bound(F, s, x))
                count += 1
    F = PotentialFamily(segment(), identity_quadratic(1))
    exact = max(abs(polarization_gap(F, s, [0.5]) - 1 / (2 + s)) * (2 + s) for s in (1.0, 10.0, 100.0, 1e4))
    ok = worst <= 1 + 1e-12 and exact <= 1e-12
    record(10, ok, f"{count} points, max gap/bound {worst:.6f}; segment 1/(2+s) rel error {exact:.1e}")


# -- 11 -----------------------------------------------------------------------------

def _fd_rel_error(fun, X, h=1e-5):
    v, g, H = fun(X)
    worst = 0.0
    for i in range(X.shape[1]):
        e = np.zeros(X.shape[1])
        e[i] = h
        vp, gp, _ = fun(X + e)
        vm, gm, _ = fun(X - e)
        dg = (vp - vm) / (2 * h)
        dH = (gp - gm) / (2 * h)
        worst = max(worst, float(np.max(np.abs(dg - g[:, i]) / (1 + np.abs(g[:, i])))))
        worst = max(worst, float(np.max(np.abs(dH - H[:, :, i]) / (1 + np.abs(H[:, :, i])))))
    return worst


def test_c11_jet_consistency():
    rng = np.random.default_rng(11)
    worst = 0.0
    for path in GOLDEN:
        sc = load_scenario(path)
        P = sc.polytope()
        X = interior_points(P, 1000, rng, margin=1e-2)
        for psi in sc.psi_functions():
            F = PotentialFamily(P, psi)
            worst = max(worst, _fd_rel_error(psi.evaluate, X), _fd_rel_error(F.gp, X),
                        _fd_rel_error(lambda Y: F.gs(7.0, Y), X))
    record(11, worst <= 1e-5, f"max relative FD mismatch {worst:.2e} over 1000 points per golden scenario")


# -- 12 -----------------------------------------------------------------------------

def test_c12_bs_counting():
    counts = (bs_count(standard_simplex()), bs_count(box([2, 2])), bs_count(hexagon()))
    record(12, counts == (3, 9, 7), f"simplex, [0,2]^2, hexagon: {counts}")


# -- 13 -----------------------------------------------------------------------------

def test_c13_determinism(tmp_path):
    """All golden scenarios, twice, at a reduced grid; every output file byte-identical."""
    differ, total = [], 0
    for path in GOLDEN:
        sc = load_scenario(path)
        sc = sc.with_overrides(grid=min(sc.grid, 60), s=list(sc.s)[:2])
        a, b = tmp_path / f"{sc.name}_a", tmp_path / f"{sc.name}_b"
        run_scenario(sc, a)
        run_scenario(sc, b)
        for f in sorted(a.iterdir()):
            if f.suffix in (".svg", ".csv"):
                total += 1
                if f.read_bytes() != (b / f.name).read_bytes():
                    differ.append(f.name)
    record(13, total > 0 and not differ, f"{total} SVG/CSV files compared, {len(differ)} differ")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
