"""Decay of max ||kappa_s^{-1}(u) - grad psi^{-1}(u)|| over an interior grid.

For each psi and inset, prints the errors at s = 10, 100, 1000, 10000 and the
ratios between consecutive decades (1/s decay gives ratios near 10). The
correction to kappa_s is (I + Hess g_P / (s Hess psi))^{-1}, so the first decade
is visibly pre-asymptotic wherever Hess g_P ~ 1 / l is large, i.e. near facets.

    python scripts/legendre_ratios.py --insets 0.05 0.1 0.2 0.25
"""
import argparse

from troamoeba.polytope import hexagon, standard_simplex
from troamoeba.potential import PotentialFamily, Quadratic, QuarticRadial, interior_grid, legendre_convergence_error

PSIS = {
    "I": Quadratic([[1, 0], [0, 1]]),
    "G1": Quadratic([["3/2", "3/4"], ["3/4", "3/2"]]),
    "G2": Quadratic([["8/9", "-4/9"], ["-4/9", "8/9"]]),
    "quartic": QuarticRadial(),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--insets", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    ap.add_argument("--grid", type=int, default=50)
    ap.add_argument("--polytope", choices=["simplex", "hexagon"], default="simplex")
    args = ap.parse_args()
    P = standard_simplex() if args.polytope == "simplex" else hexagon()
    s_list = (10, 100, 1000, 10000)
    print(f"{'psi':>8} {'inset':>6} {'points':>6}  " + " ".join(f"{'e(%g)' % s:>10}" for s in s_list) + "   ratios")
    for name, psi in PSIS.items():
        F = PotentialFamily(P, psi)
        for inset in args.insets:
            pts = len(interior_grid(P, args.grid, inset))
            if not pts:
                continue
            e = [legendre_convergence_error(F, s, args.grid, inset) for s in s_list]
            r = [a / b for a, b in zip(e, e[1:])]
            print(f"{name:>8} {inset:6.2f} {pts:6d}  " + " ".join(f"{x:10.3e}" for x in e)
                  + "   " + " ".join(f"{x:5.2f}" for x in r))


if __name__ == "__main__":
    main()
