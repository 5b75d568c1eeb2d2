#!/usr/bin/env python3
"""Flat-case growth measurement at acceptance scale (~1e5 mesh vertices).

Sweeps a plane patch with the projection map, seeds geodesic distances on a
unit segment in the middle, and fits the disk-area and circle-length growth
exponents over r in [10, 100]. Expected: area ~ r^2, length ~ r (the disks
are stadiums, A = pi r^2 + 2r up to the graph-metric constant).
"""

import argparse
import math
import time

import numpy as np

from confkit.io import write_csv
from confkit.maps import builtin
from confkit.staircase import StaircaseConfig, build_staircase, growth_profile


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--half-width", type=float, default=110.0)
    parser.add_argument("--columns", type=int, default=315)
    parser.add_argument("--out", default=None, help="growth CSV path")
    args = parser.parse_args()

    half = args.half_width
    n_along = args.columns
    n_up = args.columns + 1  # keeps the mid-height row exactly on the grid
    cfg = StaircaseConfig(
        base_segment=((-half, 0.0), (half, 0.0)),
        start_lift=(-half, 0.0, 0.5),
        max_height=2.0 * half,
        h_init=2.0 * half,
        n_along=n_along,
        n_up=n_up,
    )
    t0 = time.time()
    surface = build_staircase(builtin("ortho_proj", 3, 2), cfg)
    t1 = time.time()
    profile = growth_profile(
        surface,
        np.linspace(10.0, 100.0, 10),
        seed_segment=((-0.5, half), (0.5, half)),
    )
    t2 = time.time()

    print(f"mesh vertices ~ {(n_along + 1) * (n_up + 1)}")
    print(f"sweep {t1 - t0:.1f}s, growth {t2 - t1:.1f}s")
    print(f"area exponent   {profile.area_exponent:.4f}  (target 2)")
    print(f"length exponent {profile.length_exponent:.4f}  (target 1)")
    for r, area, length in zip(profile.radii, profile.areas, profile.lengths):
        stadium = math.pi * r * r + 2.0 * r
        print(f"  r={r:6.1f}  A={area:10.1f} ({area / stadium:.3f} of stadium)  L={length:8.2f}")
    if args.out:
        write_csv(args.out, ["r", "L", "A"], profile.to_rows())


if __name__ == "__main__":
    main()
