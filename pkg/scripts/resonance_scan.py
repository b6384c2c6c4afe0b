"""sigma_min of I + R0(lambda) V across well depths; prints the zero-energy resonance depth."""
from __future__ import annotations

import argparse
import math

import numpy as np

from katowave.grids import RadialGrid
from katowave.potential import ball_well
from katowave.scattering import resonance_scan, zero_resonance_depth


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--lambda-max", type=float, default=4.0)
    args = ap.parse_args()
    grid = RadialGrid(1.5, args.n)
    g_star, smin = zero_resonance_depth(grid)
    print(f"zero-energy resonance depth {g_star:.6f} (pi^2/4 = {math.pi**2 / 4:.6f}), sigma_min {smin:.2e}")
    lams = np.linspace(0.0, args.lambda_max, 41)
    for g in (0.4, 0.9, g_star, 3.0):
        scan = resonance_scan(grid, ball_well(g), lams)
        print(f"g = {g:.4f}: min sigma_min {scan.sigma_min.min():.3e}, dip {scan.has_dip}")


if __name__ == "__main__":
    main()
