"""Emit the binary16 sampling distribution (every stride-th member) as CSV."""
import argparse

from rtlab import floatlab, io

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--stride", type=int, default=200)
ap.add_argument("--out", default="fig1.csv")
args = ap.parse_args()

table = floatlab.figure1_data(args.stride)
io.write_text(io.figure1_csv(table), args.out)
print(f"{len(table)} rows -> {args.out}; probability range {table[:, 1].min():.3e} .. {table[:, 1].max():.3e}")
