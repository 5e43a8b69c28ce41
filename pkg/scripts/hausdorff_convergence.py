"""Hausdorff distance between finite-s compact amoebas and the limit amoeba.

Runs every psi of a scenario over its s list (or --s) and prints, per run, the
distance, the interior grid step and the distance in grid cells.

    python scripts/hausdorff_convergence.py scenarios/p2_fig2.yaml --grid 400
"""
import argparse
import time

from troamoeba.pipeline import run_scenario
from troamoeba.scenario import load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario")
    ap.add_argument("--grid", type=int)
    ap.add_argument("--s", type=float, nargs="+")
    ap.add_argument("--outdir", help="also write SVG/CSV outputs here")
    args = ap.parse_args()
    sc = load_scenario(args.scenario).with_overrides(grid=args.grid, s=args.s)
    t0 = time.perf_counter()
    report = run_scenario(sc, args.outdir)
    print(f"{sc.name}: grid {sc.grid}, {time.perf_counter() - t0:.1f}s")
    for r in report.runs:
        print(f"run {r.index}")
        print(f"  {'s':>6} {'H':>10} {'step':>9} {'cells':>7}")
        for s, h, step in r.hausdorff:
            print(f"  {s:6g} {h:10.5f} {step:9.5f} {h / step:7.2f}")
        for e in r.errors:
            print(f"  error: {e}")


if __name__ == "__main__":
    main()
