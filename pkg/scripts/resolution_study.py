"""Sech run on L = 40 at several N: how far each grid gets and where the guards trip.

    python3 scripts/resolution_study.py --t-end 1.0
"""
import argparse
import math

from psnovikov.evolution import GuardAbort, StepConfig, evolve, initial_data
from psnovikov.spectral import GridSpec

ap = argparse.ArgumentParser()
ap.add_argument("--t-end", type=float, default=1.0)
ap.add_argument("--dt", type=float, default=1e-3)
ap.add_argument("--N", type=int, nargs="+", default=[1024, 2048, 4096])
args = ap.parse_args()

times = [round(0.05 * i, 10) for i in range(int(round(args.t_end / 0.05)) + 1)]
print("N,t_reached,max_mass_drift,max_l1_identity,min_m,energy_tail_last,abort")
for N in args.N:
    u0 = initial_data("sech", GridSpec(40.0, N))
    states, abort = [], ""
    try:
        evolve(u0, StepConfig(dt=args.dt, t_end=args.t_end), times, collected=states)
    except GuardAbort as exc:
        abort = f"{type(exc).__name__} at t={exc.state.t:.4g}"
    drift = max(abs(s.diag.m_l1 / math.pi - 1) for s in states)
    ident = max(abs(s.diag.u_l1 / s.diag.m_l1 - 1) for s in states)
    mm = min(s.diag.min_m for s in states)
    print(f"{N},{states[-1].t},{drift:.3e},{ident:.3e},{mm:.3e},{states[-1].diag.energy_tail:.3e},{abort}")
