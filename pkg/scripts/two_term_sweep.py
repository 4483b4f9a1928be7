"""Sweep the cap half-angle and measure the correction beyond leading order.

For each eps the Fredholm solve gives the exact flux coefficient b0; the
excess b0*4*eps/V - 1 is the true correction factor. The table prints its
ratio to eps*log(1/eps) so the small-eps trend of the log coefficient can be
read off directly (it settles near 1/pi, not 1).

Usage: python3 scripts/two_term_sweep.py [--nquad 200]
"""

import argparse

import numpy as np

from escapetime.collins import CollinsConfig, b0_leading, double_integral_check, solve_b0

EPS_GRID = [0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nquad", type=int, default=200)
    args = ap.parse_args()

    V = 4.0 * np.pi / 3.0
    print(f"{'eps':>6} {'b0':>12} {'leading':>12} {'excess':>10} "
          f"{'excess/(e ln 1/e)':>18} {'dbl-int ratio':>14}")
    for eps in EPS_GRID:
        res = solve_b0(CollinsConfig(R=1.0, eps=eps, n_quad=args.nquad))
        excess = res.b0 * 4.0 * eps / V - 1.0
        ratio = excess / (eps * np.log(1.0 / eps))
        dint = double_integral_check(eps) if eps < 0.5 else float("nan")
        print(f"{eps:6.3f} {res.b0:12.6f} {b0_leading(1.0, eps):12.6f} "
              f"{excess:10.5f} {ratio:18.4f} {dint:14.4f}")
    print(f"\n1/pi = {1.0 / np.pi:.4f} for reference")


if __name__ == "__main__":
    main()
