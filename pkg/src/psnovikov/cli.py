"""Command-line runner: one subcommand per experiment, CSV output plus a JSON manifest.

Exit status: 0 when every check passes, 1 when a check fails, 2 when a solver
guard aborts the run, 3 for usage and configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import analyticity as an
from . import geometry as geo
from . import norms
from . import taylor as ty
from .config import ConfigError, RunConfig, parse_config, serialize, with_overrides
from .corpus import corpus
from .evolution import GuardAbort, InitialDataError, evolve, initial_data, make_state, rhs, rhs_form_check
from .spectral import _fmt, write_samples_csv

logger = logging.getLogger("psnovikov")

EXIT_OK, EXIT_FAIL, EXIT_GUARD, EXIT_USAGE = 0, 1, 2, 3
SUBCOMMANDS = ("evolve", "analyze-radius", "taylor-compare", "geometry-check", "norm-check", "lifespan")

# acceptance tolerances used by the per-run checks
MASS_RTOL = 1e-6
L1_IDENTITY_RTOL = 1e-8
MIN_M_TOL = 1e-8
MIN_U_TOL = 1e-10
TAYLOR_TOL = 1e-7
RESIDUAL_TOL = 1e-6
CURVATURE_TOL = 1e-3
NONGENERIC_TOL = 1e-9
FORM_TOL = 1e-10
N_RADIUS_SAMPLES = 21
KM_CHECK_T_MAX = 0.2
# Phi(u0) = rho(0) holds by definition; allow roundoff in that equality
KM_LOG_RTOL = 1e-12
N_TAYLOR_TIMES = 8


class UsageError(Exception):
    pass


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return _fmt(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class Run:
    """Bookkeeping shared by the pipelines: checks, guard events, derived constants."""

    def __init__(self, cfg: RunConfig, subcommand: str):
        self.cfg = cfg
        self.sub = subcommand
        self.out = Path(cfg.out_dir)
        self.checks: list[dict] = []
        self.events: list[dict] = []
        self.derived: dict = {}
        self.artifacts: list[str] = []

    def check(self, name: str, passed: bool, **info):
        self.checks.append({"name": name, "passed": bool(passed), **info})

    def csv(self, name: str, header, rows):
        write_csv(self.out / name, header, rows)
        self.artifacts.append(name)

    def json(self, name: str, obj):
        (self.out / name).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
        self.artifacts.append(name)

    def u0(self):
        c = self.cfg
        return initial_data(c.initial, c.grid, a=c.init_a, w=c.init_w, eps=c.init_eps,
                            mode=c.init_mode, path=c.init_path or None)

    def c_s(self) -> float:
        if self.cfg.c_s is not None:
            self.derived["c_s_provenance"] = {"c_s": self.cfg.c_s, "source": "config"}
            return self.cfg.c_s
        ac = ty.measure_algebra_constant(seed=self.cfg.seed, sigma=self.cfg.gevrey_sigma, s=self.cfg.s)
        self.derived["c_s_provenance"] = ac.provenance()
        return ac.c_s

    def lifespan(self, u0=None) -> ty.LifespanReport:
        c = self.cfg
        if c.u0_gnorm is not None:
            gnorm, resolved = c.u0_gnorm, True
        else:
            gnorm, resolved = ty.u0_gevrey_norm(u0 if u0 is not None else self.u0(), c.s, c.gevrey_sigma)
            if not resolved:
                logger.warning("||u0||_{G^{%g,%g}} is not resolved on this grid", c.gevrey_sigma, c.s)
        rep = ty.lifespan_aot(gnorm, c.R, self.c_s(), resolved)
        self.derived["lifespan"] = rep.as_dict()
        return rep


# -- pipelines ------------------------------------------------------------------------

def _evolve_rows(states):
    return [[st.t] + [getattr(st.diag, k) for k in st.diag.CSV_FIELDS] for st in states]


def run_evolve(run: Run, snapshots: bool = False) -> None:
    c = run.cfg
    u0 = run.u0()
    s0 = make_state(0.0, u0, c.s)
    mass0 = s0.diag.m_l1
    run.derived["m_l1_initial"] = mass0
    states: list = []
    try:
        evolve(u0, c.step, c.sample_times, events=run.events, collected=states)
    finally:
        run.csv("evolve.csv", ("t",) + s0.diag.CSV_FIELDS, _evolve_rows(states))
        if snapshots:
            (run.out / "snapshots").mkdir(exist_ok=True)
            for i, st in enumerate(states):
                name = f"snapshots/u_{i:04d}.csv"
                write_samples_csv(st.u, run.out / name)
                run.artifacts.append(name)
    positive = s0.diag.min_m >= -c.positivity_tol
    for st in states:
        d = st.diag
        run.check("m_l1_conservation", abs(d.m_l1 - mass0) <= MASS_RTOL * mass0, t=st.t,
                  rel_drift=abs(d.m_l1 - mass0) / mass0)
        if positive:
            run.check("u_l1_equals_m_l1", abs(d.u_l1 - d.m_l1) <= L1_IDENTITY_RTOL * d.m_l1, t=st.t,
                      rel_diff=abs(d.u_l1 - d.m_l1) / d.m_l1)
            run.check("positivity", d.min_m >= -MIN_M_TOL and d.min_u >= -MIN_U_TOL, t=st.t,
                      min_m=d.min_m, min_u=d.min_u)


def run_analyze_radius(run: Run) -> None:
    c = run.cfg
    u0 = run.u0()
    times = list(c.sample_times) or [float(t) for t in np.linspace(0.0, c.t_end, N_RADIUS_SAMPLES)]
    run.derived["sample_times"] = times
    states: list = []
    aborted = None
    try:
        evolve(u0, replace(c.step, t_end=max(times)), times, events=run.events, collected=states)
    except GuardAbort as exc:
        aborted = exc
    if not states:
        raise aborted
    mu = c.mu_bound if c.mu_bound is not None else an.mu_from_states(states)
    const = an.bound_constants(u0, c.sigma0, mu)
    run.derived["bound_constants"] = const.as_dict()
    rows = an.track(states, const)
    run.csv("radius.csv", ("t", "r_measured", "fit_r2", "sigma_t", "log_lower_bound", "pass"),
            [[r.t, r.r_measured, r.fit_r2, r.sigma_t, r.log_lower_bound, r.passed] for r in rows])
    for r in rows:
        run.check("radius_lower_bound", r.passed, t=r.t, note=r.flagged)
    km_rows = []
    for st in states:
        if st.t <= KM_CHECK_T_MAX + 1e-12:
            lphi, lrho = an.kato_masuda_check(const, st.t, st.u)
            ok = lphi <= lrho + KM_LOG_RTOL * abs(lrho)
            km_rows.append([st.t, lphi, lrho, ok])
            run.check("phi_below_rho", ok, t=st.t)
    run.csv("km_check.csv", ("t", "log_phi", "log_rho", "pass"), km_rows)
    if aborted is not None:
        raise aborted


def run_taylor_compare(run: Run) -> None:
    c = run.cfg
    u0 = run.u0()
    series = ty.taylor_coefficients(u0, c.taylor_K)
    if series.truncated:
        run.events.append({"t": 0.0, "kind": "taylor_truncated", "K_used": series.K})
    run.csv("taylor_coeffs.csv", ("k", "coeff_h2norm"), list(enumerate(series.h2_norms)))
    radius = math.inf
    if series.K >= 8:
        est = ty.convergence_radius_estimate(series)
        radius = est.radius
        run.derived["convergence_radius"] = {"radius": est.radius, "residual": est.residual,
                                             "orders": list(est.orders), "infinite": est.infinite}
    rep = run.lifespan(u0)
    run.json("lifespan.json", rep.as_dict())
    t_max = 0.5 * min(radius, 0.5 * rep.T_thm22)
    times = [t_max * (i + 1) / N_TAYLOR_TIMES for i in range(N_TAYLOR_TIMES)]
    run.derived["comparison_window"] = t_max
    states = evolve(u0, replace(c.step, t_end=t_max), times, events=run.events)
    rows = []
    for st in states:
        diff = float(np.max(np.abs(ty.taylor_eval(series, st.t, radius).samples - st.u.samples)))
        rows.append([st.t, diff])
        run.check("taylor_vs_rk4", diff <= TAYLOR_TOL, t=st.t, maxdiff=diff)
    run.csv("taylor_vs_rk4.csv", ("t", "taylor_vs_rk4_maxdiff"), rows)


def _support(x, mask):
    return [float(x[mask].min()), float(x[mask].max())] if mask.any() else None


def run_geometry_check(run: Run) -> None:
    c = run.cfg
    p = c.pss
    u0 = run.u0()
    dts = c.dt * c.geometry_stride
    n = int(round(c.geometry_t_end / dts))
    times = [i * dts for i in range(n + 1)]
    run.derived["stencil_spacing"] = dts
    states = evolve(u0, replace(c.step, t_end=times[-1]), times, events=run.events)
    series = [geo.metric(geo.one_forms(st.u, p), p, st.t) for st in states]
    slices = geo.gaussian_curvature(series, dts, c.genericity_threshold)
    gmax = max(float(np.max(np.abs(ms.genericity))) for ms in series)
    thr = c.genericity_threshold * gmax
    run.derived["genericity"] = {"max_abs": gmax, "threshold": thr,
                                 "support_t0": _support(c.grid.x, np.abs(series[0].genericity) >= thr)}
    by_t = {st.t: st for st in states}
    rows = []
    for sl in slices:
        if p.m1 == -2:
            res = geo.zero_curvature_residual(by_t[sl.t].u, p)
            run.check("zero_curvature_residual", res <= RESIDUAL_TOL, t=sl.t, value=res)
        else:
            res = math.nan
        gmin = float(np.min(np.abs(sl.genericity[sl.mask]))) if sl.mask.any() else math.nan
        k1 = sl.max_abs_K_plus_1
        rows.append([sl.t, res, gmin, k1, sl.n_eval])
        run.check("gaussian_curvature", k1 <= CURVATURE_TOL, t=sl.t, value=k1)
    run.csv("geometry.csv", ("t", "max_abs_residual", "min_abs_genericity", "max_abs_K_plus_1",
                             "n_eval_points"), rows)
    # nongeneric family: the indicator is -s m1 sqrt(1+mu^2) (2um + psi), so it is
    # measured against the size of the two terms that cancel
    kind = "sqrt_exp_m2" if p.m1 == -2 else "sqrt_exp_p1"
    j = geo.nongeneric_reference(kind)
    ms = geo.metric(geo.forms_from_jet(j, p), p)
    m = j.u - j.uxx
    terms = max(float(np.max(np.abs(2.0 * j.u * m))), float(np.max(np.abs(geo._psi_arrays(j.u, j.ux, p.m1)))))
    scale = abs(p.m1) * p.root * terms
    val = float(np.max(np.abs(ms.genericity)))
    run.derived["nongeneric"] = {"kind": kind, "max_abs_indicator": val, "scale": scale}
    run.check("nongeneric_indicator", val <= NONGENERIC_TOL * scale, value=val, scale=scale)


def run_norm_check(run: Run) -> None:
    c = run.cfg
    fs = corpus(c.grid, c.seed, c.corpus_size)
    rng = np.random.default_rng([c.seed, 1])
    rows, params = [], []
    for i, f in enumerate(fs):
        sig_km = float(rng.uniform(-1.0, -0.1))
        sig = float(rng.uniform(0.3, 1.0))
        sig_p = sig * float(rng.uniform(0.1, 0.9))
        params.append([i, sig_km, sig, sig_p])
        F = rhs(f)
        for m in range(11):
            kp = norms.KMParams(sig_km, m)
            lhs, rhs_ = norms.prop32_lhs(f, kp, F), norms.prop32_rhs(f, kp)
            rows.append([f"prop32_m{m}", i, lhs, rhs_, rhs_ - lhs, lhs <= rhs_])
            lhs, rhs_ = norms.lemma32_sides(f, kp)
            rows.append([f"lemma32_m{m}", i, lhs, rhs_, rhs_ - lhs, lhs <= rhs_])
        for chk in norms.operator_inequality_suite(f, sig, sig_p, c.s):
            rows.append([chk.name, i, chk.lhs, chk.rhs, chk.slack, chk.passed])
        if i < 100:
            err = rhs_form_check(f)
            rows.append(["rhs_form", i, err, FORM_TOL, FORM_TOL - err, err <= FORM_TOL])
    run.csv("norm_check.csv", ("test", "field_id", "lhs", "rhs", "slack", "pass"), rows)
    run.csv("norm_check_params.csv", ("field_id", "sigma_km", "sigma", "sigma_prime"), params)
    failed: dict[str, int] = {}
    for r in rows:
        if not r[5]:
            failed[r[0]] = failed.get(r[0], 0) + 1
    run.derived["n_rows"] = len(rows)
    run.check("norm_suite", not failed, failures=failed)


def run_lifespan(run: Run) -> None:
    rep = run.lifespan()
    run.json("lifespan.json", rep.as_dict())
    for k in ("u0_gnorm", "c_s", "R", "M", "L", "T_aot", "T_thm22"):
        print(f"{k} = {getattr(rep, k):.15g}")
    if not rep.gnorm_resolved:
        print("warning: ||u0|| is unresolved on this grid")


PIPELINES = {
    "evolve": run_evolve,
    "analyze-radius": run_analyze_radius,
    "taylor-compare": run_taylor_compare,
    "geometry-check": run_geometry_check,
    "norm-check": run_norm_check,
    "lifespan": run_lifespan,
}


def run(cfg: RunConfig, subcommand: str, **options) -> int:
    """Execute one pipeline, write its artifacts and manifest, return the exit status."""
    if subcommand not in PIPELINES:
        raise UsageError(f"unknown subcommand {subcommand!r}")
    r = Run(cfg, subcommand)
    try:
        r.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {cfg.out_dir!r}: {exc}") from exc
    started = time.time()
    status, error = EXIT_OK, None
    try:
        PIPELINES[subcommand](r, **options)
    except GuardAbort as exc:
        status, error = EXIT_GUARD, f"{type(exc).__name__}: {exc}"
        logger.error("guard abort: %s", exc)
    if status == EXIT_OK and not all(ch["passed"] for ch in r.checks):
        status = EXIT_FAIL
    (r.out / "config.txt").write_text(serialize(cfg))
    manifest = {
        "subcommand": subcommand,
        "options": options,
        "config": cfg.as_dict(),
        "config_text": serialize(cfg),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "derived": r.derived,
        "guard_events": r.events,
        "checks": r.checks,
        "n_failed_checks": sum(not ch["passed"] for ch in r.checks),
        "error": error,
        "exit_status": status,
        "artifacts": r.artifacts,
        "started_unix": started,
        "wall_clock_s": time.time() - started,
    }
    name = f"manifest_{subcommand.replace('-', '_')}.json"
    (r.out / name).write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    failed = [ch for ch in r.checks if not ch["passed"]]
    if failed:
        logger.warning("%d of %d checks failed; first: %s", len(failed), len(r.checks), failed[0])
    return status


# -- argument parsing --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cs(text: str):
    if text == "measured":
        return "measured"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'measured', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--out", metavar="DIR", help="output directory (config key out_dir)")
    common.add_argument("--seed", type=int)
    common.add_argument("--t-end", type=float)
    common.add_argument("--N", type=int)
    common.add_argument("--L", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--sigma0", type=float)
    common.add_argument("--mu-metric", type=float)
    common.add_argument("--m1", type=int, choices=(-2, 1))
    common.add_argument("--cs", type=_cs, metavar="X|measured")
    common.add_argument("-v", "--verbose", action="store_true")
    p = _Parser(prog="psnovikov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp_ = sub.add_parser(name, parents=[common])
        if name == "evolve":
            sp_.add_argument("--snapshots", action="store_true", help="write u at every sample time")
        if name == "lifespan":
            sp_.add_argument("--u0-gnorm", type=float, help="use this ||u0||_{G^{sigma,s}}")
            sp_.add_argument("--R", type=float, help="ball radius R (default ||u0||)")
    return p


def config_from_args(ns) -> RunConfig:
    cfg = parse_config(ns.config) if ns.config else RunConfig()
    over = {}
    for flag, key in (("out", "out_dir"), ("seed", "seed"), ("t_end", "t_end"), ("N", "N"),
                      ("L", "L"), ("dt", "dt"), ("sigma0", "sigma0"), ("mu_metric", "mu_metric"),
                      ("m1", "m1"), ("u0_gnorm", "u0_gnorm"), ("R", "R")):
        v = getattr(ns, flag, None)
        if v is not None:
            over[key] = v
    if ns.cs is not None:
        over["c_s"] = None if ns.cs == "measured" else ns.cs
    return with_overrides(cfg, **over)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        options = {"snapshots": ns.snapshots} if ns.subcommand == "evolve" else {}
        return run(cfg, ns.subcommand, **options)
    except (ConfigError, UsageError, InitialDataError) as exc:
        field = f" [{exc.key}]" if getattr(exc, "key", None) else ""
        print(f"psnovikov {ns.subcommand}: usage error{field}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
