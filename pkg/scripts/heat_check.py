"""Heat-kernel Gaussian bound and Feynman-Kac agreement for an attractive ball well."""
from __future__ import annotations

import argparse

import numpy as np

from katowave.grids import RadialGrid
from katowave.potential import ball_well, kato_norm
from katowave.semigroup import assemble_H, feynman_kac_mc, heat_apply, kernel_bound_check


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=float, default=0.25)
    ap.add_argument("--paths", type=int, default=20_000)
    args = ap.parse_args()
    V = ball_well(args.depth)
    kneg = kato_norm(V.negative_part(), RadialGrid(4.0, 2000))
    H = assemble_H(RadialGrid(10.0, 1000), V)
    print(f"||V_-||_K = {kneg:.4f}")
    for t in (0.1, 0.5, 1.0):
        c = kernel_bound_check(H, t, kneg)
        print(f"t = {t}: max violation {c.max_violation:.2e}, tolerance {c.tolerance:.2e}, passed {c.passed}")
    vals = heat_apply(H, 1.0, np.ones(H.grid.size))
    for p in (0.0, 0.5, 1.5):
        est = feynman_kac_mc(V, [p, 0.0, 0.0], 1.0, paths=args.paths)
        print(f"x = {p}: MC {est.estimate:.5f} +- {est.stderr:.1e}, grid {np.interp(p, H.nodes, vals):.5f}")


if __name__ == "__main__":
    main()
