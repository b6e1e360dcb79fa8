"""Radius of spatial analyticity: measurement and the Kato-Masuda lower bound.

The measured radius is the exponential decay rate of ``|u_hat(xi)|``; a
function holomorphic in the strip ``|Im z| < r`` has ``|u_hat| ~ exp(-r|xi|)``.

The theoretical side uses

    sigma(t) = sigma0 - A (e^{Bt} - 1),          rho(t) = ||u0||_{sigma0,2}^2 e^{Kt} / 2,
    r(t) = e^{sigma(t)} >= L3 exp(-L1 e^{L2 t}),

with ``K = 144 mu``, ``B = L2 = 72 mu``, ``A = 4 sqrt(2) (4 + 3 mu) ||u0|| / (9 mu)``,
``L1 = 28 sqrt(2) ||u0|| / 9`` and ``L3 = e^{sigma0 + L1}``. The bound underflows
almost immediately, so every comparison is made on logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolution import EvolutionState
from .norms import KMParams, km_norm_adaptive, phi
from .spectral import Field


class InsufficientBandError(ValueError):
    """Fewer than the minimum number of usable modes for the decay fit."""


MIN_MODES = 8


@dataclass(frozen=True)
class RadiusEstimate:
    r_measured: float
    fit_r2: float
    band: tuple[float, float]
    floor_hit: bool
    n_modes: int


def radius_from_spectrum(u: Field, floor: float | None = None,
                         rel_floor: float = 1e-13) -> RadiusEstimate:
    """Fit ``log|u_hat(xi_k)| ~ c - r xi_k`` over the upper usable band.

    The band starts at ``min(xi_max/4, xi_hi/2)`` and ends at the last mode above the noise
    floor (default ``rel_floor * max|u_hat|``); only modes above the floor
    enter the fit. ``floor_hit`` records that the spectrum fell to the floor
    before the end of the grid, in which case faster-than-exponential decay
    cannot be told apart and ``r_measured`` is a lower-bound estimate.
    """
    grid = u.grid
    pos = grid.k >= 0
    xi = grid.xi[pos]
    amp = np.abs(u.coefficients[pos])
    peak = float(amp.max()) if amp.size else 0.0
    if peak == 0.0:
        raise InsufficientBandError("zero spectrum")
    if floor is None:
        floor = rel_floor * peak
    above = amp > floor
    idx = np.nonzero(above)[0]
    xi_hi = float(xi[idx[-1]])
    # on fine grids xi_max/4 can lie beyond the floor; keep the upper half of [0, xi_hi]
    xi_lo = min(grid.xi_max / 4.0, xi_hi / 2.0)
    sel = above & (xi >= xi_lo) & (xi <= xi_hi)
    n = int(sel.sum())
    if n < MIN_MODES:
        raise InsufficientBandError(
            f"only {n} modes above the floor in [{xi_lo:.3g}, {xi_hi:.3g}]; need {MIN_MODES}")
    X = xi[sel]
    Y = np.log(amp[sel])
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    floor_hit = bool(np.any(~above[xi > xi_lo]))
    return RadiusEstimate(float(-slope), max(0.0, min(1.0, r2)), (xi_lo, xi_hi), floor_hit, n)


@dataclass(frozen=True)
class BoundConstants:
    sigma0: float
    mu_bound: float
    u0_km: float
    m_used: int

    @property
    def K(self) -> float:
        return 144.0 * self.mu_bound

    @property
    def A(self) -> float:
        mu = self.mu_bound
        return 4.0 * math.sqrt(2.0) / (9.0 * mu) * (4.0 + 3.0 * mu) * self.u0_km

    @property
    def B(self) -> float:
        return 72.0 * self.mu_bound

    @property
    def L1(self) -> float:
        return 28.0 * math.sqrt(2.0) / 9.0 * self.u0_km

    @property
    def L2(self) -> float:
        return self.B

    @property
    def log_L3(self) -> float:
        return self.sigma0 + self.L1

    @property
    def L3(self) -> float:
        return math.exp(self.log_L3)

    def as_dict(self) -> dict:
        return {"sigma0": self.sigma0, "mu_bound": self.mu_bound, "u0_km": self.u0_km,
                "m_used": self.m_used, "K": self.K, "A": self.A, "B": self.B,
                "L1": self.L1, "L2": self.L2, "L3": self.L3}


def constants_from_norm(u0_km: float, sigma0: float, mu_bound: float, m_used: int = -1) -> BoundConstants:
    if not sigma0 < 0:
        raise ValueError(f"sigma0 must be negative, got {sigma0}")
    if not mu_bound >= 1:
        raise ValueError(f"mu_bound must be >= 1, got {mu_bound}")
    c = BoundConstants(float(sigma0), float(mu_bound), float(u0_km), m_used)
    assert c.A <= c.L1 * (1 + 1e-15), "A <= L1 must hold for mu >= 1"
    return c


def bound_constants(u0: Field, sigma0: float = -0.1, mu_bound: float = 1.0) -> BoundConstants:
    """Constants of the lower bound, with ``||u0||_{sigma0,2}`` truncated at a certified tail."""
    if not sigma0 < 0:
        raise ValueError(f"sigma0 must be negative, got {sigma0}")
    norm, m = km_norm_adaptive(u0, sigma0)
    return constants_from_norm(norm, sigma0, mu_bound, m)


def sigma_of_t(c: BoundConstants, t):
    return c.sigma0 - c.A * np.expm1(c.B * np.asarray(t, dtype=float))


def log_rho_of_t(c: BoundConstants, t):
    return math.log(0.5 * c.u0_km ** 2) + c.K * np.asarray(t, dtype=float)


def rho_of_t(c: BoundConstants, t):
    return 0.5 * c.u0_km ** 2 * np.exp(c.K * np.asarray(t, dtype=float))


def log_lower_bound_r(c: BoundConstants, t):
    return c.log_L3 - c.L1 * np.exp(c.L2 * np.asarray(t, dtype=float))


def lower_bound_r(c: BoundConstants, t):
    """``(value, log value)``; the value underflows to 0 for modest t."""
    lg = log_lower_bound_r(c, t)
    return np.exp(lg), lg


@dataclass
class RadiusRow:
    t: float
    r_measured: float
    fit_r2: float
    sigma_t: float
    log_lower_bound: float
    passed: bool
    flagged: str = ""


def track(states: list[EvolutionState], c: BoundConstants) -> list[RadiusRow]:
    """Compare measured radii with ``e^{sigma(t)}`` and the lower bound, row per state."""
    rows = []
    for st in states:
        sig = float(sigma_of_t(c, st.t))
        lb = float(log_lower_bound_r(c, st.t))
        try:
            est = radius_from_spectrum(st.u)
        except InsufficientBandError as exc:
            rows.append(RadiusRow(st.t, math.nan, math.nan, sig, lb, False, str(exc)))
            continue
        rows.append(RadiusRow(st.t, est.r_measured, est.fit_r2, sig, lb,
                              math.log(est.r_measured) >= lb if est.r_measured > 0 else False))
    return rows


def mu_from_states(states: list[EvolutionState]) -> float:
    return 1.0 + max(st.diag.u_h2 for st in states)


def kato_masuda_check(c: BoundConstants, t: float, u: Field, m: int | None = None) -> tuple[float, float]:
    """``(log Phi_{sigma(t),m}(u), log rho(t))``; the conclusion is ``Phi <= rho``."""
    sig = float(sigma_of_t(c, t))
    m = c.m_used if m is None else m
    val = phi(u, KMParams(sig, m))
    return math.log(val), float(log_rho_of_t(c, t))
