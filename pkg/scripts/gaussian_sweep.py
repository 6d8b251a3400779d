"""Common-move rate of sign-discretised Gaussian pairs against 1/2 + arcsin(rho)/pi."""

import argparse

import numpy as np

from corrwalk.mcstats import estimate_delta_T


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=1_000_000)
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'rho':>7}{'estimate':>11}{'target':>11}{'z':>8}")
    for i, rho in enumerate(np.linspace(-0.95, 0.95, args.points)):
        r = estimate_delta_T(float(rho), args.reps, args.seed + i)
        print(f"{rho:>7.3f}{r.estimate:>11.5f}{r.target:>11.5f}{r.statistic:>8.2f}")


if __name__ == "__main__":
    main()
