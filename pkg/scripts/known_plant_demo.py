"""End-to-end known-plant attack on a simulated encrypted control loop."""
import argparse

import numpy as np

from rtlab.attacks import known_plant_attack
from rtlab.cipher import KeyStream
from rtlab.plant import CloudPolicy, PlantModel, simulate

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n", type=int, default=3)
ap.add_argument("--T", type=int, default=50)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

rng = np.random.default_rng(args.seed)
Q = rng.normal(size=(args.n, args.n))
A = Q @ np.diag(rng.uniform(-0.9, 0.9, args.n)) @ np.linalg.inv(Q)
B = rng.normal(size=(args.n, 1))
keys = KeyStream(args.seed, 5.0, 5.0, "Deterministic", args.n, 1)
trace = simulate(PlantModel(A, B), CloudPolicy(np.zeros((1, args.n)), 1.0, args.seed), keys, T=args.T, seed=args.seed)

out = known_plant_attack(trace.y, trace.z, A, 0, trace.x[0], trace.x[1])
kp = keys.keys_at(0)
print("eigenvalues of A           :", np.round(np.sort_complex(np.linalg.eigvals(A)), 6))
print("eigenvalues leaked from V  :", np.round(out.eigenvalues, 6))
print("null-space dimension       :", out.nullspace.shape[1])
print(f"relative key error         : {np.linalg.norm(out.R_hat - kp.R) / np.linalg.norm(kp.R):.2e}")
print(f"max state error            : {np.abs(out.xs - trace.x).max():.2e}")
