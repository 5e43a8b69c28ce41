"""Scenario orchestration: tropical curve, limit / GQ amoebas, finite-s samples, reports."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .amoeba import AmoebaSample, grid_step, hausdorff, legendre_box, sample_compact_amoeba
from .errors import TroAmoebaError
from .polytope import DelzantPolytope
from .potential import ConvexFunction, PotentialFamily, Quadratic
from .projection import curve_box, gq_amoeba, implosion_field, limit_amoeba
from .quantization import convergence_table
from .render import Scene, lift_1d, polygon_of, render_scene
from .scenario import Scenario
from .tropical import (
    PolyhedralComplex,
    TropicalPolynomial,
    tropical_corners_1d,
    tropical_curve_2d,
    tropical_membership_batch,
)

log = logging.getLogger(__name__)

MAX_SVG_SAMPLE = 4000


@dataclass
class RunResult:
    index: int
    psi: ConvexFunction
    tropical: TropicalPolynomial | None = None
    curve: PolyhedralComplex | np.ndarray | None = None
    limit: AmoebaSample | None = None
    gq: PolyhedralComplex | None = None
    box: tuple[np.ndarray, np.ndarray] | None = None  # interior Log_t box used for sampling
    finite: dict[float, AmoebaSample] = field(default_factory=dict)
    hausdorff: list[tuple[float, float, float]] = field(default_factory=list)  # (s, distance, grid step)
    implosion: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    sections: dict[tuple, list[dict]] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)


@dataclass
class Report:
    scenario: Scenario
    polytope: DelzantPolytope
    runs: list[RunResult]
    files: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(r.errors for r in self.runs)

    def to_text(self) -> str:
        sc = self.scenario
        lines = [f"scenario {sc.name}", f"dimension {self.polytope.dim}",
                 f"lattice points {len(self.polytope.lattice_points())}", f"runs {len(self.runs)}"]
        for r in self.runs:
            lines.append("")
            lines.append(f"run {r.index} psi {_psi_label(r.psi)}")
            if isinstance(r.curve, PolyhedralComplex):
                lines.append(f"tropical vertices {len(r.curve.vertices)} segments {len(r.curve.segments)} "
                             f"rays {len(r.curve.rays)} balanced {r.curve.is_balanced()}")
            if r.limit is not None:
                lines.append(f"limit amoeba pieces {len(r.limit.pieces)} points {len(r.limit)}")
            if r.gq is not None:
                lines.append(f"gq amoeba segments {len(r.gq.segments)} boundary pieces {r.gq.labels.count('boundary')}")
            if r.hausdorff:
                lines.append("hausdorff s distance grid_step cells")
                for s, d, h in r.hausdorff:
                    # one-dimensional samples are exact roots: no grid step
                    cells = f"{h:.6g} {d / h:.3f}" if math.isfinite(h) else "exact -"
                    lines.append(f"  {s:g} {d:.6g} {cells}")
            for m, rows in r.sections.items():
                lines.append(f"sections m={list(m)} s mass_fraction log_norm log_derivative")
                for row in rows:
                    lines.append(f"  {row['s']:g} {row['mass_fraction']:.9f} {row['log_norm']:.9g} "
                                 f"{row['log_derivative']:.9g}")
            if r.implosion is not None:
                lines.append(f"implosion field points {len(r.implosion[0])}")
            for e in r.errors:
                lines.append(f"error {e}")
        return "\n".join(lines) + "\n"


def _psi_label(psi) -> str:
    d = psi.to_dict()
    if d["kind"] == "quadratic":
        return f"quadratic G={d['G']} b={d['b']}"
    return d["kind"]


def tropical_locus(T: TropicalPolynomial, F: PotentialFamily, grid: int = 200):
    """Exact complex for n <= 2, a membership-sampled point set otherwise."""
    n = T.dim
    if n == 2:
        return tropical_curve_2d(T)
    if n == 1:
        return PolyhedralComplex(tuple((c,) for c in tropical_corners_1d(T)))
    lo, hi = legendre_box(F)
    axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
    Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    M = np.asarray(T.exponents, dtype=float)
    step = float(np.max(hi - lo)) / (grid - 1)
    tol = step * float(np.abs(M).sum(axis=1).max())
    return Y[tropical_membership_batch(T, Y, tol)]


def run_scenario(sc: Scenario, outdir: str | Path | None = None) -> Report:
    """Run every stage for every psi, collecting errors per stage, and write outputs if asked."""
    P = sc.polytope()
    runs = []
    for i, psi in enumerate(sc.psi_functions()):
        r = RunResult(i, psi)
        F = PotentialFamily(P, psi)
        _stage(r, "tropical", lambda: setattr(r, "tropical", sc.tropical(psi, P)))
        if r.tropical is not None:
            _stage(r, "tropical curve", lambda: setattr(r, "curve", tropical_locus(r.tropical, F)))
        if r.curve is not None:
            _stage(r, "limit amoeba",
                   lambda: setattr(r, "limit", limit_amoeba(psi, P, r.curve, sc.samples_per_edge)))
        if isinstance(psi, Quadratic) and sc.valuation == "gq" and P.dim <= 2:
            _stage(r, "gq amoeba", lambda: setattr(r, "gq", gq_amoeba(P, psi)))
        box = None
        if isinstance(r.curve, PolyhedralComplex) and P.dim == 2:
            _stage(r, "sampling box", lambda: setattr(r, "box", curve_box(psi, P, r.curve)))
            box = r.box
        if r.tropical is not None:
            for s in sc.s:
                _stage(r, f"finite s={s:g}", lambda s=s: r.finite.__setitem__(
                    s, sample_compact_amoeba(P, F, r.tropical, s, sc.grid, sc.theta_grid, sc.threshold, box=box)))
        if r.limit is not None:
            h = grid_step(F, sc.grid, box=box) if P.dim >= 2 else 0.0
            for s, sample in r.finite.items():
                if len(sample):
                    _stage(r, f"hausdorff s={s:g}", lambda s=s, sample=sample: r.hausdorff.append(
                        (s, hausdorff(sample, r.limit), h if h > 0 else float("nan"))))
        if sc.implode is not None:
            _stage(r, "implode", lambda: setattr(r, "implosion", _implosion(psi, P, F, sc)))
        if sc.sections is not None:
            for m in sc.sections.m:
                _stage(r, f"sections m={list(m)}", lambda m=m: r.sections.__setitem__(
                    m, convergence_table(F, m, sc.sections.s, sc.sections.epsilon)))
        runs.append(r)
    report = Report(sc, P, runs)
    if outdir is not None:
        write_outputs(report, Path(outdir))
    return report


def _stage(r: RunResult, name: str, fn) -> None:
    try:
        fn()
    except TroAmoebaError as e:
        log.warning("run %d stage %s failed: %s", r.index, name, e)
        r.errors.append(f"{name}: {type(e).__name__}: {e}")


def _implosion(psi, P, F, sc):
    lo, hi = legendre_box(F, sc.implode.margin)
    axes = [np.linspace(a, b, sc.implode.grid) for a, b in zip(lo, hi)]
    Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.dim)
    U, C = implosion_field(psi, P, Y)
    return Y, U, C


# -- outputs --------------------------------------------------------------------------

def _stem(sc: Scenario, key: str, default_suffix: str) -> str:
    name = sc.outputs.get(key)
    if name:
        return str(Path(name).with_suffix(""))
    return f"{sc.name}{default_suffix}"


def write_outputs(report: Report, outdir: Path) -> list[str]:
    outdir.mkdir(parents=True, exist_ok=True)
    sc = report.scenario
    files = []
    svg_stem = _stem(sc, "svg", "")
    csv_stem = _stem(sc, "csv", "")
    for r in report.runs:
        for panel, scene in scenes_for_run(report.polytope, r).items():
            path = outdir / f"{svg_stem}_{r.index}_{panel}.svg"
            path.write_text(render_scene(scene), encoding="utf-8")
            files.append(path.name)
        path = outdir / f"{csv_stem}_{r.index}.csv"
        path.write_text(samples_csv(r, report.polytope.dim), encoding="utf-8")
        files.append(path.name)
        if r.implosion is not None:
            path = outdir / f"{csv_stem}_{r.index}_implode.csv"
            path.write_text(implosion_csv(*r.implosion), encoding="utf-8")
            files.append(path.name)
        if isinstance(r.curve, PolyhedralComplex):
            path = outdir / f"{csv_stem}_{r.index}_tropical.txt"
            path.write_text(r.curve.to_text(), encoding="utf-8")
            files.append(path.name)
        if r.gq is not None:
            path = outdir / f"{csv_stem}_{r.index}_gq.txt"
            path.write_text(complex_with_labels(r.gq), encoding="utf-8")
            files.append(path.name)
    report_name = sc.outputs.get("report") or f"{sc.name}_report.txt"
    (outdir / report_name).write_text(report.to_text(), encoding="utf-8")
    files.append(report_name)
    report.files = files
    return files


def complex_with_labels(C: PolyhedralComplex) -> str:
    text = C.to_text()
    if C.labels:
        text += "labels\n" + "\n".join(C.labels) + "\n"
    return text


def samples_csv(r: RunResult, n: int) -> str:
    header = ",".join([f"x{i + 1}" for i in range(n)] + ["tag"])
    lines = [header]
    blocks = []
    if r.limit is not None:
        blocks.append(r.limit)
    if r.gq is not None:
        blocks.append(AmoebaSample.from_segments(r.gq.segment_array(), "gq", per_segment=2)
                      if r.gq.segments else AmoebaSample(r.gq.vertex_array(), "gq"))
    blocks += [r.finite[s] for s in sorted(r.finite)]
    for b in blocks:
        body = b.to_csv().splitlines()[1:]
        lines += body
    return "\n".join(lines) + "\n"


def implosion_csv(Y, U, C) -> str:
    n = Y.shape[1]
    head = [f"y{i + 1}" for i in range(n)] + [f"pi{i + 1}" for i in range(n)] + [f"c{i + 1}" for i in range(n)]
    rows = [",".join(head)]
    for y, u, c in zip(Y, U, C):
        rows.append(",".join(f"{v:.12g}" for v in (*y, *u, *c)))
    return "\n".join(rows) + "\n"


def _thin(X: np.ndarray, k: int = MAX_SVG_SAMPLE) -> np.ndarray:
    if len(X) <= k:
        return X
    return X[np.linspace(0, len(X) - 1, k).round().astype(int)]


def scenes_for_run(P: DelzantPolytope, r: RunResult) -> dict[str, Scene]:
    """``moment`` panel (in P) and ``legendre`` panel (in the Legendre image with the cone partition)."""
    if P.dim == 1:
        return {"moment": _scene_1d(P, r)}
    if P.dim != 2:
        return {}
    psi = r.psi
    moment = Scene(title=f"run {r.index}: moment polytope")
    moment.add("polygon", polygon_of(P.vertex_array), "polytope")
    if r.finite:
        s_max = max(r.finite)
        if len(r.finite[s_max]):
            moment.add("points", _thin(r.finite[s_max].points), "sample")
    if r.limit is not None:
        moment.add("segments", _piece_segments(r.limit), "limit")
    if r.gq is not None and r.gq.segments:
        segs = r.gq.segment_array()
        inner = [s for s, lab in zip(segs, r.gq.labels) if lab == "voronoi"]
        outer = [s for s, lab in zip(segs, r.gq.labels) if lab == "boundary"]
        if inner:
            moment.add("segments", np.asarray(inner), "gq")
        if outer:
            moment.add("segments", np.asarray(outer), "gq_boundary")
    moment.add("points", np.asarray(P.lattice_points(), float), "lattice")

    leg = Scene(title=f"run {r.index}: Legendre image and cone partition")
    boundary = _boundary_loop(P)
    leg.add("polygon", psi.evaluate(boundary)[1], "legendre")
    cones = []
    for v, act in zip(P.vertex_array, P.vertex_facets):
        u = psi.grad(v)
        cones += [(u, -P.N[a]) for a in act]
    leg.add("rays", cones, "cone")
    if isinstance(r.curve, PolyhedralComplex):
        V = r.curve.vertex_array()
        if r.curve.segments:
            leg.add("segments", r.curve.segment_array(), "tropical")
        leg.add("rays", [(V[i], d) for i, d in r.curve.unit_rays()], "tropical")
    if r.limit is not None:
        leg.add("segments", _map_segments(psi, _piece_segments(r.limit)), "limit")
    if r.implosion is not None:
        Y, U, _ = r.implosion
        leg.add("arrows", list(zip(Y, U)), "field")
    return {"moment": moment, "legendre": leg}


def _scene_1d(P, r) -> Scene:
    sc = Scene(title=f"run {r.index}: segment")
    V = P.vertex_array[:, 0]
    sc.add("segments", lift_1d([V.min(), V.max()]).reshape(1, 2, 2), "polytope")
    if r.finite:
        sc.add("points", lift_1d(np.concatenate([x.points[:, 0] for x in r.finite.values()])), "sample")
    if r.limit is not None and len(r.limit):
        sc.add("points", lift_1d(r.limit.points[:, 0]), "limit")
    sc.add("points", lift_1d([m[0] for m in P.lattice_points()]), "lattice")
    return sc


def _piece_segments(sample: AmoebaSample) -> np.ndarray:
    segs = [np.stack([p[:-1], p[1:]], axis=1) for p in sample.pieces if len(p) > 1]
    return np.concatenate(segs) if segs else np.zeros((0, 2, 2))


def _map_segments(psi, segs: np.ndarray) -> np.ndarray:
    if not len(segs):
        return segs
    flat = psi.evaluate(segs.reshape(-1, segs.shape[-1]))[1]
    return flat.reshape(segs.shape)


def _boundary_loop(P: DelzantPolytope, per_edge: int = 24) -> np.ndarray:
    V = polygon_of(P.vertex_array)
    w = np.linspace(0, 1, per_edge, endpoint=False)
    return np.concatenate([V[i] + w[:, None] * (V[(i + 1) % len(V)] - V[i]) for i in range(len(V))])
