"""GQ amoebas of the simplex and the hexagon for the three golden quadratic psi.

Writes one SVG per (polytope, psi) into --outdir and prints the exact vertex
and edge lists with their labels (voronoi / boundary).

    python scripts/gq_gallery.py --outdir out/gq
"""
import argparse
from pathlib import Path

import numpy as np

from troamoeba.pipeline import complex_with_labels
from troamoeba.polytope import box, hexagon, standard_simplex
from troamoeba.potential import Quadratic
from troamoeba.projection import gq_amoeba
from troamoeba.render import Scene, polygon_of, render_scene

PSIS = {
    "G0": Quadratic([[1, 0], [0, 1]]),
    "G1": Quadratic([["3/2", "3/4"], ["3/4", "3/2"]]),
    "G2": Quadratic([["8/9", "-4/9"], ["-4/9", "8/9"]]),
}
POLYTOPES = {"simplex2": standard_simplex(2, 2), "square2": box([2, 2]), "hexagon": hexagon()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="out/gq")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for pname, P in POLYTOPES.items():
        for gname, psi in PSIS.items():
            C = gq_amoeba(P, psi)
            print(f"== {pname} {gname}")
            print(complex_with_labels(C), end="")
            scene = Scene(title=f"GQ amoeba {pname} {gname}")
            scene.add("polygon", polygon_of(P.vertex_array), "polytope")
            segs = C.segment_array()
            for label, style in (("voronoi", "gq"), ("boundary", "gq_boundary")):
                part = [s for s, lab in zip(segs, C.labels) if lab == label]
                if part:
                    scene.add("segments", np.asarray(part), style)
            scene.add("points", np.asarray(P.lattice_points(), float), "lattice")
            (out / f"{pname}_{gname}.svg").write_text(render_scene(scene), encoding="utf-8")


if __name__ == "__main__":
    main()
