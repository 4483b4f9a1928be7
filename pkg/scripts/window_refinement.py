"""Mesh refinement study for the window integral equation, plus the
fixed-area shape comparison.

First table: C0 error against the exact disk value 1/(8a) and the elliptic
value K(e)/(2 pi a) across mesh sizes (expect roughly first-order decay with
the rim-graded mesh). Second table: windows of equal area but increasing
eccentricity; C0 drops as K(e)(1-e^2)^(1/4), so elongating the window at
fixed area speeds escape.

Usage: python3 scripts/window_refinement.py [--sizes 8 12 16 24 32]
"""

import argparse

import numpy as np

from escapetime.numerics import elliptic_K
from escapetime.window import build_ellipse_mesh, solve_window_ie


def exact_C0(a: float, b: float) -> float:
    e = np.sqrt(1.0 - (b / a) ** 2)
    return float(elliptic_K(e)) / (2.0 * np.pi * a)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16, 24, 32])
    args = ap.parse_args()

    print(f"{'n':>4} {'cells':>6} {'circle err':>11} {'b/a=0.6 err':>12}")
    for n in args.sizes:
        errs = []
        for a, b in ((1.0, 1.0), (1.0, 0.6)):
            sol = solve_window_ie(build_ellipse_mesh(a, b, n), 1.0, 1.0)
            errs.append(sol.C0 / exact_C0(a, b) - 1.0)
        print(f"{n:4d} {2 * n * n:6d} {errs[0]:+11.3%} {errs[1]:+12.3%}")

    area = np.pi
    print(f"\nfixed area pi, n=24: {'e':>5} {'a':>7} {'C0':>9} {'exact':>9} {'vs circle':>10}")
    base = None
    for e in (0.0, 0.4, 0.6, 0.8, 0.9):
        ba = np.sqrt(1.0 - e * e)
        a = np.sqrt(area / (np.pi * ba))
        sol = solve_window_ie(build_ellipse_mesh(a, a * ba, 24), 1.0, 1.0)
        if base is None:
            base = sol.C0
        print(f"{'':>20} {e:5.2f} {a:7.4f} {sol.C0:9.5f} "
              f"{exact_C0(a, a * ba):9.5f} {sol.C0 / base:10.5f}")


if __name__ == "__main__":
    main()
