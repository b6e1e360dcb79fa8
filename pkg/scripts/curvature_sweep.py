"""|K + 1| of the pseudospherical metric against the genericity threshold and N.

The curvature divides by (EG - F^2)^2, so points where the indicator is small
amplify roundoff. Sweeping the threshold shows where the -1 is recovered.
"""
import argparse

import numpy as np

from psnovikov import geometry as geo
from psnovikov.evolution import StepConfig, evolve, initial_data
from psnovikov.geometry import PSSParams
from psnovikov.spectral import GridSpec

ap = argparse.ArgumentParser()
ap.add_argument("--N", type=int, nargs="+", default=[1024, 2048])
ap.add_argument("--t-end", type=float, default=0.02)
ap.add_argument("--dt", type=float, default=1e-3)
args = ap.parse_args()

p = PSSParams(0.0, -2, 1)
print("N,threshold,max_abs_K_plus_1,median_abs_K_plus_1,points")
for N in args.N:
    n = int(round(args.t_end / args.dt))
    states = evolve(initial_data("sech", GridSpec(40.0, N)), StepConfig(dt=args.dt, t_end=args.t_end),
                    [i * args.dt for i in range(n + 1)])
    series = [geo.metric(geo.one_forms(s.u, p), p, s.t) for s in states]
    for thr in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        slices = geo.gaussian_curvature(series, args.dt, rel_threshold=thr)
        err = np.concatenate([np.abs(s.K[s.mask] + 1) for s in slices])
        print(f"{N},{thr:g},{err.max():.3e},{np.median(err):.3e},{err.size}")
