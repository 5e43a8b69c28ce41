"""Concentration of monomial-section densities and the norm log-derivative.

For each lattice point m of the segment [0, 1] (psi = x^2/2) prints the mass
fraction within epsilon of m, log ||sigma_s^m||_1 and d/ds log ||sigma_s^m||_1,
whose limit is psi(m); the last column compares with the finite difference.

    python scripts/sections_table.py --s 10 100 1000 10000 --epsilon 0.1
"""
import argparse

from troamoeba.polytope import segment
from troamoeba.potential import PotentialFamily, identity_quadratic
from troamoeba.quantization import convergence_table, norm_log_derivative_fd


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, nargs="+", default=[10, 100, 1000, 10000])
    ap.add_argument("--epsilon", type=float, default=0.1)
    args = ap.parse_args()
    P = segment()
    F = PotentialFamily(P, identity_quadratic(1))
    for m in P.lattice_points():
        print(f"m = {m[0]}  (limit of the log-derivative: psi(m) = {m[0] ** 2 / 2:g})")
        print(f"  {'s':>7} {'fraction':>10} {'log norm':>14} {'d/ds':>12} {'fd d/ds':>12}")
        for row in convergence_table(F, m, args.s, args.epsilon):
            fd = norm_log_derivative_fd(F, row["s"], m)
            print(f"  {row['s']:7g} {row['mass_fraction']:10.6f} {row['log_norm']:14.6f} "
                  f"{row['log_derivative']:12.7f} {fd:12.7f}")


if __name__ == "__main__":
    main()
