"""Time evolution of the pseudospherical Novikov equation.

The solver integrates the nonlocal form

    u_t = (u^2)_x - u^2 + d_x Lambda^{-2} u^2 + Lambda^{-2} u^2,   Lambda^2 = 1 - d_x^2,

with classical RK4 on the method-of-lines system. ``u^2`` is dealiased with
the 2/3 rule, so the right-hand side is a single Fourier multiplier applied
to the dealiased square.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import spectral as sp
from .norms import sobolev_norm
from .spectral import Field, GridSpec

logger = logging.getLogger(__name__)


class GuardAbort(RuntimeError):
    """A solver guard fired; ``state`` is the last good state."""

    kind = "guard"

    def __init__(self, message: str, state: EvolutionState | None = None):
        super().__init__(message)
        self.state = state


class UnderResolvedError(GuardAbort):
    kind = "under_resolved"


class CFLError(GuardAbort):
    kind = "cfl"


class NonFiniteStateError(GuardAbort):
    kind = "non_finite"


class WaveBreakingSuspected(GuardAbort):
    kind = "wave_breaking"


class PositivityViolation(GuardAbort):
    kind = "positivity"


class InitialDataError(ValueError):
    pass


@dataclass(frozen=True)
class DiagnosticsRecord:
    m_l1: float
    u_l1: float
    u_h2: float
    u_hs: float
    min_m: float
    min_u: float
    energy_tail: float
    max_ux: float

    CSV_FIELDS = ("m_l1", "u_l1", "u_h2", "u_hs", "min_m", "min_u", "energy_tail")


@dataclass(frozen=True)
class EvolutionState:
    t: float
    u: Field
    diag: DiagnosticsRecord


@dataclass(frozen=True)
class StepConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = "rk4"
    resolution_guard: float = 1e-10
    cfl_guard: float = 0.5
    ux_ceiling: float = 1e3
    positivity_tol: float = 1e-8
    s: float = 2.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.scheme != "rk4":
            raise ValueError(f"unknown scheme {self.scheme!r}; only 'rk4' is implemented")


# -- right-hand side ------------------------------------------------------------

def _square_coeffs(u: Field) -> np.ndarray:
    return sp.product(u, u).coefficients


def rhs_multiplier(grid: GridSpec) -> np.ndarray:
    """Symbol of ``d_x - 1 + d_x Lambda^{-2} + Lambda^{-2}`` acting on ``u^2``."""
    ik = sp.derivative_multiplier(grid, 1)
    hinv = sp.helmholtz_multiplier(grid)
    return ik - 1.0 + ik * hinv + hinv


def _guard_resolution(u: Field, guard: float | None):
    if guard is None:
        return
    tail = sp.energy_tail(u)
    if tail > guard:
        raise UnderResolvedError(
            f"energy in top third of wavenumbers is {tail:.3g} > guard {guard:.3g}")


def rhs(u: Field, resolution_guard: float | None = 1e-10) -> Field:
    """``F(u)`` in the local-plus-smoothing form used by the solver."""
    _guard_resolution(u, resolution_guard)
    return Field.from_coefficients(u.grid, _square_coeffs(u) * rhs_multiplier(u.grid))


def rhs_conservative(u: Field) -> Field:
    """``(u^2)_x + d_x Lambda^{-2}(u^2 + (u^2)_x)``, assembled operator by operator."""
    w = sp.product(u, u)
    wx = sp.derivative(w, 1)
    return wx + sp.derivative(sp.helmholtz_inverse(w + wx), 1)


def rhs_form_check(u: Field) -> float:
    """Max-norm gap between the two algebraically equivalent right-hand sides."""
    d = rhs(u, resolution_guard=None) - rhs_conservative(u)
    return d.max_abs()


def momentum(u: Field) -> Field:
    return u - sp.derivative(u, 2)


# -- diagnostics ------------------------------------------------------------------

def diagnostics(u: Field, s: float = 2.0) -> DiagnosticsRecord:
    m = momentum(u)
    ux = sp.derivative(u, 1)
    return DiagnosticsRecord(
        m_l1=sp.l1_norm(m),
        u_l1=sp.l1_norm(u),
        u_h2=sobolev_norm(u, 2.0),
        u_hs=sobolev_norm(u, s),
        min_m=float(m.samples.min()),
        min_u=float(u.samples.min()),
        energy_tail=sp.energy_tail(u),
        max_ux=ux.max_abs(),
    )


def make_state(t: float, u: Field, s: float = 2.0) -> EvolutionState:
    return EvolutionState(float(t), u, diagnostics(u, s))


# -- time stepping ----------------------------------------------------------------

def cfl_number(u: Field, dt: float) -> float:
    return dt * u.max_abs() * u.grid.xi_max


def _rk4(u: Field, dt: float) -> Field:
    grid = u.grid
    mult = rhs_multiplier(grid)

    def F(v: np.ndarray) -> np.ndarray:
        return Field.from_coefficients(grid, _square_coeffs(Field(grid, v)) * mult).samples

    y = u.samples
    k1 = F(y)
    k2 = F(y + 0.5 * dt * k1)
    k3 = F(y + 0.5 * dt * k2)
    k4 = F(y + dt * k3)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError("non-finite values after RK4 step")
    return Field(grid, out)


def step(state: EvolutionState, cfg: StepConfig, dt: float | None = None,
         monitor_positivity: bool = False) -> EvolutionState:
    """Advance ``state`` by one RK4 step of size ``dt`` (default ``cfg.dt``).

    Raises a :class:`GuardAbort` subclass carrying ``state`` if a guard fires.
    """
    dt = cfg.dt if dt is None else dt
    u = state.u
    try:
        _guard_resolution(u, cfg.resolution_guard)
        c = cfl_number(u, dt)
        if c > cfg.cfl_guard:
            raise CFLError(f"dt*max|u|*max|xi| = {c:.3g} exceeds guard {cfg.cfl_guard}")
        unew = _rk4(u, dt)
    except GuardAbort as exc:
        exc.state = state
        raise
    new = make_state(state.t + dt, unew, cfg.s)
    if new.diag.max_ux > cfg.ux_ceiling:
        raise WaveBreakingSuspected(
            f"max|u_x| = {new.diag.max_ux:.3g} exceeds ceiling {cfg.ux_ceiling:.3g} "
            f"at t = {new.t:.6g}", state)
    if monitor_positivity and new.diag.min_m < -cfg.positivity_tol:
        raise PositivityViolation(
            f"min m = {new.diag.min_m:.3g} < -{cfg.positivity_tol:g} at t = {new.t:.6g}", state)
    return new


def evolve(u0: Field, cfg: StepConfig, sample_times=None, events: list | None = None,
           history: list | None = None, collected: list | None = None) -> list[EvolutionState]:
    """Integrate from ``t = 0`` to ``cfg.t_end`` and return states at ``sample_times``.

    Steps are shortened so that every sample time is hit exactly. With no
    sample times only the final state is returned. Guard aborts propagate
    with the last good state attached; ``events`` (if given) receives one dict
    per guard or warning event and ``history`` one DiagnosticsRecord per step.
    ``collected`` receives sample states as they are reached, so callers keep
    the samples produced before an abort.
    """
    times = sorted(float(t) for t in (sample_times or []))
    if any(t < 0 or t > cfg.t_end + 1e-12 for t in times):
        raise ValueError(f"sample times must lie in [0, {cfg.t_end}]")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must be strictly increasing")
    if not times:
        times = [cfg.t_end]

    state = make_state(0.0, u0, cfg.s)
    if not sp.check_domain(u0) and events is not None:
        events.append({"t": 0.0, "kind": "domain_truncation",
                       "outer_mass_fraction": sp.outer_mass_fraction(u0)})
    positive = state.diag.min_m >= -cfg.positivity_tol
    if history is not None:
        history.append((state.t, state.diag))

    out = []
    n_done = 0
    for target in times:
        while target - state.t > 1e-12 * max(1.0, target):
            n_next = n_done + 1
            t_next = n_next * cfg.dt
            if t_next >= target - 1e-12 * max(1.0, target):
                dt = target - state.t
            else:
                dt = t_next - state.t
            try:
                state = step(state, cfg, dt, monitor_positivity=positive)
            except GuardAbort as exc:
                if events is not None:
                    events.append({"t": exc.state.t if exc.state else None,
                                   "kind": exc.kind, "message": str(exc)})
                logger.error("guard abort: %s", exc)
                raise
            if abs(state.t - n_next * cfg.dt) <= 1e-12 * max(1.0, state.t):
                state = replace(state, t=n_next * cfg.dt)
                n_done = n_next
            if history is not None:
                history.append((state.t, state.diag))
        state = replace(state, t=target)
        out.append(state)
        if collected is not None:
            collected.append(state)
    return out


# -- initial data -----------------------------------------------------------------

def initial_data(kind: str, grid: GridSpec, a: float = 1.0, w: float = 1.0,
                 eps: float = 0.0, mode: int = 1, path=None,
                 require_positive_momentum: bool = True) -> Field:
    """Initial datum ``u_0`` of the given kind.

    ``sech``: ``a sech(x/w)``; ``gaussian_momentum``: ``u_0 = Lambda^{-2} m_0``
    with ``m_0 = a exp(-(x/w)^2)``; ``mode_perturbation``: ``u_0 = Lambda^{-2}(m_base
    + eps cos(pi mode x / L))`` with the Gaussian ``m_base``; ``from_file``:
    samples from an ``x,value`` CSV.
    """
    x = grid.x
    if kind == "sech":
        y = x / w
        sech = 1.0 / np.cosh(y)
        u0 = Field(grid, a * sech)
        m0 = a * sech * (1.0 - (1.0 - 2.0 * sech ** 2) / w ** 2)
    elif kind in ("gaussian_momentum", "mode_perturbation"):
        m0 = a * np.exp(-(x / w) ** 2)
        if kind == "mode_perturbation":
            m0 = m0 + eps * np.cos(np.pi * mode * x / grid.half_width)
        u0 = sp.helmholtz_inverse(Field(grid, m0))
    elif kind == "from_file":
        if path is None:
            raise InitialDataError("from_file requires a path")
        u0 = sp.read_samples_csv(path)
        if u0.grid != grid:
            raise InitialDataError(f"file grid {u0.grid} differs from configured grid {grid}")
        m = momentum(u0).samples
        # spectral roundoff relative to the peak is not a sign change
        m0 = np.where(np.abs(m) <= 1e-12 * np.abs(m).max(), 0.0, m)
    else:
        raise InitialDataError(f"unknown initial data kind {kind!r}")
    if require_positive_momentum:
        mmin = float(np.min(m0))
        if mmin < 0.0:
            raise InitialDataError(
                f"initial momentum has negative minimum {mmin:.6g} for kind {kind!r}")
    return u0
