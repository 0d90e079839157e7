#!/usr/bin/env python3
"""Sweep the least-squares sample count for the geodesic-distance
polynomial surrogate and print the error profile across the trace range.

The interesting output is where the error concentrates: the square-root
singularities of arccos((t-1)/2) at the interval endpoints dominate, so
extra samples barely help.  Run with no arguments for the default sweep.
"""

import argparse

import numpy as np

from stableplace.rotations import fit_geodesic_polynomial


def error_curve(coeffs, n=20001):
    t = np.linspace(-1.0, 3.0, n)
    surrogate = (t - 3.0) * np.polyval(coeffs.a[::-1], t)
    exact = np.arccos(np.clip((t - 1.0) / 2.0, -1.0, 1.0))
    return t, np.abs(surrogate - exact)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, nargs="+",
                    default=[101, 1001, 10001, 100001])
    ap.add_argument("--bins", type=int, default=16,
                    help="columns in the per-interval error table")
    args = ap.parse_args()

    print(f"{'samples':>9}  {'max err':>10}  {'err on [-0.9, 2.9]':>20}")
    for n in args.samples:
        coeffs = fit_geodesic_polynomial(samples=n)
        t, err = error_curve(coeffs)
        interior = err[(t >= -0.9) & (t <= 2.9)]
        print(f"{n:>9}  {err.max():>10.5f}  {interior.max():>20.6f}")

    coeffs = fit_geodesic_polynomial()
    t, err = error_curve(coeffs)
    edges = np.linspace(-1.0, 3.0, args.bins + 1)
    print("\nper-interval max error (default fit):")
    for lo, hi in zip(edges[:-1], edges[1:]):
        chunk = err[(t >= lo) & (t <= hi)]
        bar = "#" * int(60 * chunk.max() / err.max())
        print(f"[{lo:+.2f}, {hi:+.2f}]  {chunk.max():.5f}  {bar}")


if __name__ == "__main__":
    main()
