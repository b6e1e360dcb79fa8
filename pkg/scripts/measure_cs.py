"""Empirical Gevrey algebra constant c_s with the default safety factor."""
import argparse
import json

from psnovikov import taylor as ty

ap = argparse.ArgumentParser()
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--pairs", type=int, default=200)
ap.add_argument("--sigma", type=float, default=1.0)
ap.add_argument("--s", type=float, default=2.0)
args = ap.parse_args()

ac = ty.measure_algebra_constant(seed=args.seed, n_pairs=args.pairs, sigma=args.sigma, s=args.s)
print(json.dumps(ac.provenance(), indent=2))
