"""``troamoeba`` command line interface.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .amoeba import AmoebaSample, hausdorff
from .errors import NumericalError, SchemaError, TroAmoebaError, ValidationError
from .pipeline import complex_with_labels, implosion_csv, run_scenario, tropical_locus
from .potential import PotentialFamily
from .projection import gq_amoeba, implosion_field, limit_amoeba, project_pi
from .quantization import convergence_table
from .scenario import Scenario, load_scenario
from .tropical import PolyhedralComplex


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}") from None


def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    return sc.with_overrides(
        grid=getattr(args, "grid", None),
        theta_grid=getattr(args, "theta_grid", None),
        threshold=getattr(args, "threshold", None),
        s=getattr(args, "s", None),
    )


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    sc = _load(args)
    report = run_scenario(sc, args.outdir)
    sys.stdout.write(report.to_text())
    return 0 if report.ok else 2


def cmd_tropical(args) -> int:
    sc = _load(args)
    P = sc.polytope()
    for i, psi in enumerate(sc.psi_functions()):
        T = sc.tropical(psi, P)
        locus = tropical_locus(T, PotentialFamily(P, psi))
        sys.stdout.write(f"# run {i}\n")
        if isinstance(locus, PolyhedralComplex):
            sys.stdout.write(locus.to_text())
        else:
            sys.stdout.write(AmoebaSample(locus, "tropical", "ambient").to_csv())
    return 0


def cmd_limit(args) -> int:
    sc = _load(args)
    P = sc.polytope()
    out = []
    for psi in sc.psi_functions():
        T = sc.tropical(psi, P)
        curve = tropical_locus(T, PotentialFamily(P, psi))
        out.append(limit_amoeba(psi, P, curve, args.samples or sc.samples_per_edge))
    if len(out) > 1:
        for i, sample in enumerate(out):
            sample.tag = f"limit_{i}"
    text = out[0].to_csv()
    for extra in out[1:]:
        text += "".join(extra.to_csv().splitlines(keepends=True)[1:])
    _emit(text, args.csv)
    return 0


def cmd_gq(args) -> int:
    sc = _load(args)
    P = sc.polytope()
    for i, psi in enumerate(sc.psi_functions()):
        sys.stdout.write(f"# run {i}\n")
        sys.stdout.write(complex_with_labels(gq_amoeba(P, psi)))
    return 0


def cmd_project(args) -> int:
    sc = _load(args)
    P = sc.polytope()
    psi = sc.psi_functions()[args.run]
    cert = project_pi(psi, P, args.y)
    fmt = lambda v: " ".join(f"{c:.12g}" for c in np.atleast_1d(v))
    sys.stdout.write(f"point {fmt(cert.point)}\nface codim {cert.face.codim} active {list(cert.face.active)}\n"
                     f"residual {fmt(cert.residual)}\ncoefficients {fmt(cert.coefficients)}\n")
    return 0


def cmd_implode(args) -> int:
    sc = _load(args)
    P = sc.polytope()
    psi = sc.psi_functions()[args.run]
    from .amoeba import legendre_box
    lo, hi = legendre_box(PotentialFamily(P, psi), args.margin)
    axes = [np.linspace(a, b, args.grid) for a, b in zip(lo, hi)]
    Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.dim)
    U, C = implosion_field(psi, P, Y)
    _emit(implosion_csv(Y, U, C), args.csv)
    return 0


def cmd_sections(args) -> int:
    sc = _load(args)
    P = sc.polytope()
    psi = sc.psi_functions()[args.run]
    F = PotentialFamily(P, psi)
    m = tuple(args.m) if args.m else (sc.sections.m[0] if sc.sections else tuple([0] * P.dim))
    s_list = args.s_list or (list(sc.sections.s) if sc.sections else [10, 100, 1000, 10000])
    eps = args.epsilon if args.epsilon is not None else (sc.sections.epsilon if sc.sections else 0.1)
    if m not in set(P.lattice_points()):
        raise ValidationError(f"{list(m)} is not a lattice point of the polytope")
    rows = convergence_table(F, m, s_list, eps)
    lines = ["s,mass_fraction,log_norm,log_derivative"]
    lines += [f"{r['s']:g},{r['mass_fraction']:.12g},{r['log_norm']:.12g},{r['log_derivative']:.12g}" for r in rows]
    _emit("\n".join(lines) + "\n", args.csv)
    return 0


def read_sample_csv(path: str) -> AmoebaSample:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise SchemaError(path, f"cannot read: {e.strerror}") from None
    if not rows or not rows[0] or rows[0][-1] != "tag":
        raise SchemaError(path, "expected header x1,...,xn,tag")
    n = len(rows[0]) - 1
    try:
        pts = np.asarray([[float(c) for c in r[:n]] for r in rows[1:] if r], dtype=float).reshape(-1, n)
    except ValueError:
        raise SchemaError(path, "non-numeric coordinate") from None
    tag = rows[1][-1] if len(rows) > 1 else "sample"
    return AmoebaSample(pts, tag, "polytope")


def cmd_hausdorff(args) -> int:
    a, b = read_sample_csv(args.a), read_sample_csv(args.b)
    sys.stdout.write(f"{hausdorff(a, b):.12g}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="troamoeba", description="Compact, limit and GQ amoebas of toric degenerations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, fn, help_):
        q = sub.add_parser(name, help=help_)
        q.add_argument("scenario", help="scenario YAML file")
        q.add_argument("--grid", type=int, help="y-grid per axis")
        q.add_argument("--theta-grid", type=int, dest="theta_grid", help="angle grid per axis")
        q.add_argument("--threshold", type=float, help="membership threshold relative to the largest term")
        q.add_argument("--s", type=_floats, help="comma separated s values")
        q.set_defaults(fn=fn)
        return q

    q = scenario_cmd("run", cmd_run, "run a whole scenario and write SVG/CSV/report")
    q.add_argument("--outdir", default="out")
    scenario_cmd("tropical", cmd_tropical, "print the tropical curve")
    q = scenario_cmd("limit-amoeba", cmd_limit, "sample the limit amoeba")
    q.add_argument("--samples", type=int, help="samples per curve edge")
    q.add_argument("--csv")
    scenario_cmd("gq-amoeba", cmd_gq, "exact GQ amoeba (quadratic psi)")
    q = scenario_cmd("project", cmd_project, "project a point with the cone partition")
    q.add_argument("--y", type=_floats, required=True)
    q.add_argument("--run", type=int, default=0)
    q = scenario_cmd("implode", cmd_implode, "id - pi field over a grid")
    q.add_argument("--run", type=int, default=0)
    q.add_argument("--margin", type=float, default=1.0)
    q.add_argument("--csv")
    q.set_defaults(grid=21)
    q = scenario_cmd("sections", cmd_sections, "section norm convergence table")
    q.add_argument("--m", type=_ints)
    q.add_argument("--s-list", type=_floats, dest="s_list")
    q.add_argument("--epsilon", type=float)
    q.add_argument("--run", type=int, default=0)
    q.add_argument("--csv")
    q = sub.add_parser("hausdorff", help="Hausdorff distance between two sample CSV files")
    q.add_argument("a")
    q.add_argument("b")
    q.set_defaults(fn=cmd_hausdorff)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except ValidationError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except TroAmoebaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
