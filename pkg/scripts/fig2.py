"""Compute the binary16 distance heat map and summarize where its mass sits."""
import argparse
import time

import numpy as np

from rtlab import floatlab, io

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--points", type=int, default=100)
ap.add_argument("--rmax-fraction", type=float, default=0.9999)
ap.add_argument("--out", default="fig2.csv")
args = ap.parse_args()

r_max = floatlab.default_r_max(args.rmax_fraction)
t0 = time.perf_counter()
axis, D = floatlab.figure2_grid(args.points, r_max)
elapsed = time.perf_counter() - t0
io.write_text(io.figure2_csv(axis, D), args.out)

i, j = np.unravel_index(np.argmax(D), D.shape)
k0 = int(np.argmin(np.abs(axis)))
print(f"{args.points}x{args.points} grid, r_max={r_max}, {elapsed:.1f} s -> {args.out}")
print(f"max D = {D[i, j]:.6f} at x1={axis[i]}, x2={axis[j]}")
print(f"row x1={axis[k0]}: max D = {D[k0].max():.6f}; grid median = {np.median(D):.6f}")
