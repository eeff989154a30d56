"""Key error of least-squares recovery versus number of noisy known pairs."""
import argparse

import numpy as np

from rtlab.attacks import PlaintextCiphertextPair, kpa_least_squares
from rtlab.cipher import keygen

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n", type=int, default=4)
ap.add_argument("--sigma", type=float, default=0.01)
ap.add_argument("--trials", type=int, default=50)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

n = args.n
multiples = [1, 2, 5, 10, 20, 50]
errors = {k: [] for k in multiples}
for t in range(args.trials):
    rng = np.random.default_rng([args.seed, t])
    kp = keygen(n, 1.0, 1.0, args.seed * 10**6 + t)
    X = rng.uniform(-1, 1, (max(multiples) * (n + 1), n))
    Y = X @ kp.R.T + kp.r
    known = X + rng.normal(0.0, args.sigma, X.shape)
    pairs = [PlaintextCiphertextPair(x, y) for x, y in zip(known, Y)]
    for k in multiples:
        res = kpa_least_squares(pairs[: k * (n + 1)])
        err = np.hstack([res.R_hat - kp.R, (res.r_hat - kp.r)[:, None]])
        errors[k].append(np.linalg.norm(err))

print("pairs,median_key_error")
for k in multiples:
    print(f"{k * (n + 1)},{np.median(errors[k]):.4e}")
