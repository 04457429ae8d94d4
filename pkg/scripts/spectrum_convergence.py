"""Grid convergence of the finite-difference oscillator levels.

Prints the error of the 1D levels 2k+1 for a sequence of grids, the observed
order, and the Richardson-extrapolated error.

    python scripts/spectrum_convergence.py --half-width 10 --levels 6
"""
import argparse

import numpy as np

from ksgeo import GridSpec, fd_eigenvalues_1d, richardson_eigenvalues


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--half-width", type=float, default=10.0)
    ap.add_argument("--levels", type=int, default=6)
    ap.add_argument("--points", type=int, nargs="+", default=[501, 1001, 2001, 4001, 8001])
    args = ap.parse_args()

    exact = 2 * np.arange(args.levels) + 1
    prev = None
    for n in args.points:
        grid = GridSpec(args.half_width, n)
        err = fd_eigenvalues_1d(grid, count=args.levels) - exact
        line = f"N={n:5d} h={grid.spacing:.5f} max|err|={np.max(np.abs(err)):.3e}"
        if prev is not None:
            line += f" order={np.log2(np.max(np.abs(prev)) / np.max(np.abs(err))):.3f}"
        print(line)
        prev = err

    grid = GridSpec(args.half_width, args.points[-1])
    ext = richardson_eigenvalues(grid, count=args.levels)
    print(f"Richardson at N={grid.points}: max|err| = {np.max(np.abs(ext - exact)):.3e}")


if __name__ == "__main__":
    main()
