"""Free versus perturbed Besov norm ratios across the potential rescaling V_theta."""
from __future__ import annotations

import argparse
import warnings

import numpy as np

from katowave.besov import equivalence_ratio
from katowave.grids import RadialGrid
from katowave.potential import ball_well


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=float, default=0.4)
    ap.add_argument("--n", type=int, default=2000)
    args = ap.parse_args()
    grid = RadialGrid(40.0, args.n)
    r = grid.nodes
    fset = [np.exp(-(r / w) ** 2) for w in (0.5, 1.0, 2.0)]
    fset += [(3 - 2 * (r / w) ** 2) * np.exp(-(r / w) ** 2) for w in (0.5, 1.0, 2.0)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = equivalence_ratio(grid, ball_well(args.depth), fset, thetas=2.0 ** np.arange(-4, 5))
    for row in rep.per_theta:
        print(f"theta = {row['theta']:8.4f}: ratios in [{row['c_low']:.4f}, {row['c_high']:.4f}]")
    print(f"spread C_high / C_low = {rep.spread:.4f}")


if __name__ == "__main__":
    main()
