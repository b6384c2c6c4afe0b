"""t ||u(t)||_inf / ||f||_B ratios for the free case, a hypothesis-passing well and a bound-state well."""
from __future__ import annotations

import argparse
import warnings

import numpy as np

from katowave.grids import RadialGrid
from katowave.potential import ball_well
from katowave.wavelab import dispersive_ratio


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1600)
    ap.add_argument("--r-max", type=float, default=16.0)
    args = ap.parse_args()
    grid = RadialGrid(args.r_max, args.n)
    r = grid.nodes
    fset = [np.exp(-(r / s) ** 2) for s in (0.25, 0.35, 0.5)]
    times = np.geomspace(1.0, 8.0, 8)
    for label, V in (("V = 0", None), ("g = 0.4", ball_well(0.4)), ("g = 3", ball_well(3.0))):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = dispersive_ratio(grid, V, fset, times)
        print(f"{label}: C* {rep.c_star:.4g}, flatness {np.round(rep.flatness, 3)}, "
              f"growth {np.round(rep.growth(), 2)}, outside theorem {rep.outside_theorem} {rep.notes}")


if __name__ == "__main__":
    main()
