#!/usr/bin/env python3
"""Show the step-size governor keeping a basin run stable, then break it.

First marches basin example 1 for one period with the adaptive governor
(step = min of the convective guideline and the spectral bound) and
reports the error; then repeats with a fixed step several times the
smallest spectral bound the governor saw, which should not survive.
"""

import argparse
import math

import numpy as np

from swesplit import (
    NormCache,
    ThackerParams,
    build_grid,
    primitive_velocities,
    run_thacker,
    theorem1_limit,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mx", type=int, default=108, help="cells per side")
    ap.add_argument("--factor", type=float, default=20.0,
                    help="forced step as a multiple of the spectral bound")
    args = ap.parse_args()

    p = ThackerParams()
    T = p.period(1)
    grid = build_grid(0.0, 0.0, p.l, p.l, args.mx, args.mx)
    cache = NormCache.for_grid(grid)
    min_bound = [math.inf]

    def collect(n, state):
        u, _ = primitive_velocities(state, 1e-3)
        cache.update(u, state.h, p.g, grid)
        min_bound[0] = min(min_bound[0],
                           theorem1_limit(cache, grid.dx, grid.mx, gamma=18.0))

    governed = run_thacker(1, args.mx, None, p, T=T, collect=collect)
    print(f"governed: diverged={governed.diverged}  e_h={governed.e_h:.4e}  "
          f"last k={governed.k:.5f}  min spectral bound={min_bound[0]:.5f}")

    k_forced = args.factor * min_bound[0]
    with np.errstate(all="ignore"):
        forced = run_thacker(1, args.mx, k_forced, p, T=T)
    outcome = forced.detail if forced.diverged else f"e_h={forced.e_h:.4e}"
    print(f"forced k={k_forced:.5f} ({args.factor:g}x bound): {outcome}")


if __name__ == "__main__":
    main()
