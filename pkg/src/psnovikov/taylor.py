"""Power series in time and the explicit lifespan formulas.

Writing ``u(t) = sum_k a_k t^k`` in ``u_t = Q(u, u)`` gives

    a_{k+1} = (k+1)^{-1} sum_{j=0}^{k} Q(a_j, a_{k-j}),

with the symmetric bilinear ``Q(v, w) = d_x(vw) - vw + d_x Lambda^{-2}(vw) + Lambda^{-2}(vw)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .corpus import corpus
from .evolution import rhs_multiplier
from .norms import GevreyParams, gevrey_norm, sobolev_norm
from .spectral import Field, GridSpec

logger = logging.getLogger(__name__)

MAX_ORDER = 40
NOISE_FLOOR = 1e-14
# a coefficient with most of its energy in the top third of the retained band
# no longer represents its term of the series
COEFF_TAIL_LIMIT = 0.5


def bilinear_q(v: Field, w: Field) -> Field:
    """``Q(v, w)``; ``Q(u, u)`` is the evolution right-hand side."""
    vw = sp.product(v, w)
    return Field.from_coefficients(v.grid, vw.coefficients * rhs_multiplier(v.grid))


@dataclass
class TaylorSeries:
    coefficients: list[Field]
    h2_norms: list[float] = field(default_factory=list)
    truncated: bool = False
    tails: list[float] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.coefficients) - 1

    @property
    def grid(self) -> GridSpec:
        return self.coefficients[0].grid


def taylor_coefficients(u0: Field, K: int = 24,
                        resolution_guard: float | None = COEFF_TAIL_LIMIT) -> TaylorSeries:
    """Coefficients ``a_0..a_K`` of the time series of the solution from ``u0``.

    Every product is dealiased, so each order pushes energy toward the cutoff.
    The energy tail of each coefficient is recorded in ``tails``; the first
    coefficient whose tail exceeds ``resolution_guard`` ends the series early
    with a warning (``truncated``). High orders enter the partial sum with
    weight ``t^k``, so a moderate tail is harmless at the times of interest.
    """
    if not 0 <= K <= MAX_ORDER:
        raise ValueError(f"K must lie in [0, {MAX_ORDER}], got {K}")
    grid = u0.grid
    mult = rhs_multiplier(grid)
    mask = grid.dealias_mask
    a = [u0]
    # dealiased samples of each coefficient are reused across the convolution sums
    ad = [Field.from_coefficients(grid, u0.coefficients * mask).samples]
    norms = [sobolev_norm(u0, 2.0)]
    tails = [sp.energy_tail(u0)]
    truncated = False
    for k in range(K):
        acc = np.zeros(grid.n_points)
        # fixed summation order; pairs (j, k-j) and (k-j, j) are equal so fold them
        for j in range((k + 1) // 2):
            acc += 2.0 * ad[j] * ad[k - j]
        if k % 2 == 0:
            acc += ad[k // 2] * ad[k // 2]
        c = Field(grid, acc).coefficients * mask * mult / (k + 1)
        nxt = Field.from_coefficients(grid, c)
        tail = sp.energy_tail(nxt)
        if resolution_guard is not None and tail > resolution_guard:
            logger.warning("coefficient a_%d is under-resolved (energy tail %.3g); "
                           "truncating the series at K = %d", k + 1, tail, k)
            truncated = True
            break
        a.append(nxt)
        ad.append(Field.from_coefficients(grid, nxt.coefficients * mask).samples)
        norms.append(sobolev_norm(nxt, 2.0))
        tails.append(tail)
    return TaylorSeries(a, norms, truncated, tails)


def taylor_eval(series: TaylorSeries, t: float, radius: float | None = None) -> Field:
    """Horner evaluation of the partial sum at time ``t``."""
    if radius is not None and abs(t) >= radius:
        logger.warning("t = %g lies outside the estimated convergence radius %g", t, radius)
    acc = series.coefficients[-1].samples
    for a in reversed(series.coefficients[:-1]):
        acc = a.samples + t * acc
    return Field(series.grid, acc)


@dataclass(frozen=True)
class ConvergenceRadius:
    radius: float
    residual: float
    orders: tuple[int, ...]
    infinite: bool = False


def convergence_radius_estimate(series: TaylorSeries, noise_floor: float = NOISE_FLOOR) -> ConvergenceRadius:
    """Root-test estimate from a line fit of ``log ||a_k||_{H^2}`` against k.

    Only the top half of the orders enter, and orders whose norm is below
    ``noise_floor`` are dropped. No usable order means an infinite radius.
    """
    K = series.K
    if K < 8:
        raise ValueError(f"need K >= 8 for a radius estimate, got {K}")
    norms = np.asarray(series.h2_norms if series.h2_norms else
                       [sobolev_norm(a, 2.0) for a in series.coefficients])
    ks = np.arange(K + 1)
    sel = (ks >= (K + 1) // 2) & (ks >= 1) & (norms > noise_floor)
    if sel.sum() == 0:
        return ConvergenceRadius(math.inf, 0.0, (), True)
    if sel.sum() == 1:
        (k,) = ks[sel]
        return ConvergenceRadius(float(norms[k] ** (-1.0 / k)), 0.0, (int(k),))
    X, Y = ks[sel].astype(float), np.log(norms[sel])
    slope, intercept = np.polyfit(X, Y, 1)
    resid = float(np.sqrt(np.mean((Y - slope * X - intercept) ** 2)))
    return ConvergenceRadius(float(math.exp(-slope)), resid, tuple(int(k) for k in ks[sel]))


# -- lifespans ------------------------------------------------------------------------

@dataclass(frozen=True)
class LifespanReport:
    T_aot: float
    T_thm22: float
    R: float
    M: float
    L: float
    c_s: float
    u0_gnorm: float
    gnorm_resolved: bool = True

    def as_dict(self) -> dict:
        return dict(T_aot=self.T_aot, T_thm22=self.T_thm22, R=self.R, M=self.M, L=self.L,
                    c_s=self.c_s, u0_gnorm=self.u0_gnorm, gnorm_resolved=self.gnorm_resolved)


def _positive(**kw):
    for name, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive and finite, got {v}")


def lifespan_thm22(u0_gnorm: float, c_s: float) -> float:
    """``e / (216 c_s ||u0||_{G^{1,s}})``."""
    _positive(u0_gnorm=u0_gnorm, c_s=c_s)
    return math.e / (216.0 * c_s * u0_gnorm)


def lifespan_aot(u0_gnorm: float, R: float | None = None, c_s: float = 1.0,
                 gnorm_resolved: bool = True) -> LifespanReport:
    """``T = R / (16 L R + 8 M)`` with ``M = 3 c_s ||u0||^2 / e`` and ``L = 6 c_s (R + ||u0||) / e``.

    ``R`` defaults to ``||u0||``, at which ``T`` equals the single-formula lifespan.
    """
    R = u0_gnorm if R is None else R
    _positive(u0_gnorm=u0_gnorm, R=R, c_s=c_s)
    M = 3.0 * c_s * u0_gnorm ** 2 / math.e
    L = 6.0 * c_s * (R + u0_gnorm) / math.e
    T = R / (16.0 * L * R + 8.0 * M)
    return LifespanReport(T, lifespan_thm22(u0_gnorm, c_s), R, M, L, c_s, u0_gnorm, gnorm_resolved)


def u0_gevrey_norm(u0: Field, s: float = 2.0, sigma: float = 1.0):
    """``(||u0||_{G^{sigma,s}}, resolved)`` for the lifespan formulas."""
    from .norms import gevrey_norm_report
    rep = gevrey_norm_report(u0, GevreyParams(sigma, s))
    return rep.value, rep.resolved


# -- algebra constant ---------------------------------------------------------------

@dataclass(frozen=True)
class AlgebraConstant:
    c_s: float
    max_ratio: float
    safety: float
    sigma: float
    s: float
    seed: int
    n_pairs: int
    grid: tuple[float, int]

    def provenance(self) -> dict:
        return {"c_s": self.c_s, "source": "measured", "max_ratio": self.max_ratio,
                "safety_factor": self.safety, "sigma": self.sigma, "s": self.s,
                "seed": self.seed, "n_pairs": self.n_pairs,
                "grid": {"L": self.grid[0], "N": self.grid[1]}}


def measure_algebra_constant(grid: GridSpec | None = None, seed: int = 0, n_pairs: int = 200,
                             sigma: float = 1.0, s: float = 2.0, safety: float = 2.0) -> AlgebraConstant:
    """Largest ``||fg|| / (||f|| ||g||)`` in ``G^{sigma,s}`` over a seeded corpus, times ``safety``.

    The corpus is band-limited to ``N/6`` so products are computed without
    aliasing, and the grid is wide enough that the modes are well separated.
    """
    grid = grid or GridSpec(40.0, 256)
    p = GevreyParams(sigma, s)
    fs = corpus(grid, seed, 2 * n_pairs, k_max=grid.n_points // 6, decay=0.05)
    worst = 0.0
    for f, g in zip(fs[::2], fs[1::2]):
        fg = Field(grid, f.samples * g.samples)
        r = gevrey_norm(fg, p) / (gevrey_norm(f, p) * gevrey_norm(g, p))
        worst = max(worst, r)
    return AlgebraConstant(safety * worst, worst, safety, sigma, s, seed, n_pairs,
                           (grid.half_width, grid.n_points))
