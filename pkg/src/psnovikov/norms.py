"""Sobolev, Gevrey, Kato-Masuda and Himonas-Misiolek norms on the torus.

Every norm is a weighted spectral sum ``2L sum_k w(xi_k) |c_k|^2`` so that it
approximates the corresponding norm of a decaying function on the line.

Exponential weights (Gevrey, Kato-Masuda, Himonas-Misiolek) would turn the
roundoff floor of a spectrum, about 1e-17 of its peak, into the dominant part
of the sum. Those norms therefore drop coefficients below ``NOISE_FLOOR``
times the largest one. Sobolev norms keep every mode.

The truncated Kato-Masuda norm is

    ||u||_{sigma,2,m}^2 = sum_{j<=m} (j!)^{-2} e^{2 sigma j} ||d^j u||_{H^2}^2

and ``Phi_{sigma,m} = ||u||_{sigma,2,m}^2 / 2``. Derivative powers are never
formed explicitly: the per-mode factor ``(e^sigma |xi|)^j / j!`` is evaluated in
log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .spectral import Field, GridSpec, derivative, helmholtz_inverse

TAIL_FRACTION = 0.10
UNRESOLVED_TOL = 1e-6
NOISE_FLOOR = 1e-14


@dataclass(frozen=True)
class GevreyParams:
    sigma: float
    s: float = 2.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"Gevrey sigma must be positive, got {self.sigma}")
        if not math.isfinite(self.s):
            raise ValueError("Sobolev index must be finite")


@dataclass(frozen=True)
class KMParams:
    sigma: float
    m: int = 12
    s_base: float = 2.0

    def __post_init__(self):
        if self.m < 0 or int(self.m) != self.m:
            raise ValueError(f"truncation order m must be a nonnegative integer, got {self.m}")


@dataclass(frozen=True)
class HMParams:
    sigma: float
    m: int = 1
    j_max: int = 32

    def __post_init__(self):
        if not 0 < self.sigma <= 1:
            raise ValueError(f"Himonas-Misiolek sigma must lie in (0, 1], got {self.sigma}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.j_max < 0:
            raise ValueError("j_max must be nonnegative")


def _above_floor(c: np.ndarray, rel_floor: float) -> np.ndarray:
    a = np.abs(c)
    peak = a.max() if a.size else 0.0
    return a > rel_floor * peak


def _power(f: Field, rel_floor: float | None = None) -> np.ndarray:
    c = f.coefficients
    pw = 2.0 * f.grid.half_width * np.abs(c) ** 2
    if rel_floor:
        pw = np.where(_above_floor(c, rel_floor), pw, 0.0)
    return pw


def _bracket(grid: GridSpec, s: float) -> np.ndarray:
    return (1.0 + grid.xi ** 2) ** s


def sobolev_norm(f: Field, s: float) -> float:
    return math.sqrt(float(np.sum(_bracket(f.grid, s) * _power(f))))


def h2_inner(f: Field, g: Field) -> float:
    """Real ``H^2`` inner product ``2L sum (1+xi^2)^2 Re(c_f conj(c_g))``."""
    w = 2.0 * f.grid.half_width * _bracket(f.grid, 2.0)
    return float(np.sum(w * (f.coefficients * np.conj(g.coefficients)).real))


@dataclass(frozen=True)
class GevreyNorm:
    value: float
    tail_share: float

    @property
    def resolved(self) -> bool:
        return self.tail_share <= UNRESOLVED_TOL

    def __float__(self):
        return self.value


def gevrey_weight(grid: GridSpec, p: GevreyParams) -> np.ndarray:
    return np.exp(2.0 * p.sigma * np.abs(grid.xi)) * _bracket(grid, p.s)


def gevrey_norm_report(f: Field, p: GevreyParams, rel_floor: float = NOISE_FLOOR) -> GevreyNorm:
    """Gevrey norm together with the share carried by the top 10% of the band.

    The band runs up to the last coefficient above the noise floor (the whole
    grid when nothing is dropped). A share above ``1e-6`` means the weighted
    spectrum has not decayed inside the band, so the grid sum does not
    approximate the line integral (``resolved`` is False).
    """
    terms = gevrey_weight(f.grid, p) * _power(f, rel_floor)
    total = float(terms.sum())
    if total == 0.0:
        return GevreyNorm(0.0, 0.0)
    ak = np.abs(f.grid.k)
    kept = terms > 0
    k_hi = int(ak[kept].max()) if kept.any() else 0
    top = ak >= (1.0 - TAIL_FRACTION) * k_hi
    return GevreyNorm(math.sqrt(total), float(terms[top].sum() / total))


def gevrey_norm(f: Field, p: GevreyParams, rel_floor: float = NOISE_FLOOR) -> float:
    return gevrey_norm_report(f, p, rel_floor).value


# -- Kato-Masuda -------------------------------------------------------------

def km_log_factors(grid: GridSpec, sigma: float, m: int) -> np.ndarray:
    """``log[(e^sigma |xi|)^j / j!]`` for j = 0..m, shape (m+1, N).

    Zero wavenumbers give ``-inf`` for j >= 1.
    """
    j = np.arange(m + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logxi = np.log(np.abs(grid.xi))[None, :]
        lf = j * (sigma + logxi) - gammaln(j + 1.0)
    lf[0, :] = 0.0
    return lf


def km_terms(f: Field, p: KMParams, rel_floor: float = NOISE_FLOOR) -> np.ndarray:
    """``t_j = e^{2 sigma j} (j!)^{-2} ||d^j f||_{H^2}^2`` for j = 0..m."""
    w = np.exp(2.0 * km_log_factors(f.grid, p.sigma, p.m))
    base = _bracket(f.grid, p.s_base) * _power(f, rel_floor)
    return w @ base


def km_norm(f: Field, p: KMParams) -> float:
    return math.sqrt(float(np.sum(km_terms(f, p))))


def phi(f: Field, p: KMParams) -> float:
    return 0.5 * float(np.sum(km_terms(f, p)))


def km_sigma_derivative(f: Field, p: KMParams) -> float:
    """Exact ``d Phi_{sigma,m} / d sigma = sum_j j t_j``."""
    t = km_terms(f, p)
    return float(np.arange(p.m + 1) @ t)


def km_norm_adaptive(f: Field, sigma: float, rel_tail: float = 1e-12, m_max: int = 2000,
                     s_base: float = 2.0, rel_floor: float = NOISE_FLOOR) -> tuple[float, int]:
    """Kato-Masuda norm truncated with a certified relative tail bound.

    Returns ``(norm, m)``. With ``xi_hi`` the largest retained wavenumber,
    once ``j + 1 > e^sigma xi_hi`` every per-mode factor decreases
    geometrically with ratio at most ``r = (e^sigma xi_hi / (j + 1))^2``, so the
    omitted tail is bounded by ``t_j r / (1 - r)``. The smallest such ``m``
    whose bound is below ``rel_tail`` times the partial sum is used.
    """
    kept = _power(f, rel_floor) > 0
    if not kept.any():
        return 0.0, 0
    x = math.exp(sigma) * float(np.abs(f.grid.xi[kept]).max())
    m = max(8, int(math.ceil(x)) + 1)
    while True:
        t = km_terms(f, KMParams(sigma, m, s_base), rel_floor)
        csum = np.cumsum(t)
        if csum[-1] == 0.0:
            return 0.0, 0
        for j in range(max(1, int(math.ceil(x))), m + 1):
            r = (x / (j + 1)) ** 2
            if r < 1.0 and t[j] * r / (1.0 - r) <= rel_tail * csum[j]:
                return math.sqrt(float(csum[j])), j
        if m >= m_max:
            raise RuntimeError(f"Kato-Masuda series did not converge by m = {m_max}")
        m = min(2 * m, m_max)


# -- differential inequality for Phi and the convolution bound ----------------

def kbar(p: float) -> float:
    return 144.0 * p


def alphabar(p: float, q: float) -> float:
    return 64.0 * math.sqrt(q) * (4.0 + 3.0 * p)


def prop32_lhs(u: Field, p: KMParams, F: Field | None = None,
               rel_floor: float = NOISE_FLOOR) -> float:
    """``|D Phi_{sigma,m}(u) F(u)|`` evaluated spectrally."""
    if F is None:
        from .evolution import rhs
        F = rhs(u)
    w = np.exp(2.0 * km_log_factors(u.grid, p.sigma, p.m)).sum(axis=0)
    w = w * 2.0 * u.grid.half_width * _bracket(u.grid, p.s_base)
    cu, cF = u.coefficients, F.coefficients
    if rel_floor:
        cu = np.where(_above_floor(cu, rel_floor), cu, 0.0)
        cF = np.where(_above_floor(cF, rel_floor), cF, 0.0)
    return abs(float(np.sum(w * (cu * np.conj(cF)).real)))


def prop32_rhs(u: Field, p: KMParams) -> float:
    """``Kbar(||u||_{H^2}) Phi + alphabar(||u||_{H^2}, Phi) dPhi/dsigma``."""
    h2 = sobolev_norm(u, 2.0)
    t = km_terms(u, p)
    ph = 0.5 * float(t.sum())
    dph = float(np.arange(p.m + 1) @ t)
    return kbar(h2) * ph + alphabar(h2, ph) * dph


def lemma32_sides(u: Field, p: KMParams) -> tuple[float, float]:
    """Both sides of ``sum_{j=1}^m sum_{l=1}^j b_j b_l b_{j-l} <= ||u|| d_sigma ||u||^2``."""
    t = km_terms(u, p)
    b = np.sqrt(t)
    lhs = 0.0
    for j in range(1, p.m + 1):
        lhs += b[j] * float(np.dot(b[1:j + 1], b[j - 1::-1]))
    rhs = math.sqrt(float(t.sum())) * 2.0 * float(np.arange(p.m + 1) @ t)
    return lhs, rhs


# -- Himonas-Misiolek ----------------------------------------------------------

def hm_norm(f: Field, p: HMParams) -> tuple[float, int]:
    """Truncated ``sup_j sigma^j (j+1)^2 / j! ||d^j f||_{H^{2m}}``; returns (value, argmax j)."""
    j = np.arange(p.j_max + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logxi = np.log(np.abs(f.grid.xi))[None, :]
        lw = 2.0 * (j * (math.log(p.sigma) + logxi) - gammaln(j + 1.0))
    lw[0, :] = 0.0
    terms = np.exp(lw) @ (_bracket(f.grid, 2.0 * p.m) * _power(f, NOISE_FLOOR))
    vals = (np.arange(p.j_max + 1) + 1.0) ** 2 * np.sqrt(terms)
    jstar = int(np.argmax(vals))
    return float(vals[jstar]), jstar


# -- Operator inequalities ---------------------------------------------------------

@dataclass
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def operator_inequality_suite(f: Field, sigma: float, sigma_p: float, s: float,
                              g: Field | None = None, eq_rtol: float = 1e-12) -> list[InequalityCheck]:
    """Evaluate the three Gevrey operator inequalities and the H^2 algebra bound.

    (a) ``||d f||_{G^{sigma',s}} <= e^{-1}/(sigma - sigma') ||f||_{G^{sigma,s}}``
    (b) ``||d f||_{G^{sigma,s}} <= ||f||_{G^{sigma,s+1}}``
    (c) ``||Lambda^{-2} f||_{G^{sigma,s}} = ||f||_{G^{sigma,s-2}}``
    (d) ``||f g||_{H^2} <= 8 ||f||_{H^2} ||g||_{H^2}``, with ``g = f`` by default.
    """
    if not 0 < sigma_p < sigma <= 1:
        raise ValueError(f"need 0 < sigma' < sigma <= 1, got sigma'={sigma_p}, sigma={sigma}")
    out = []
    # the noise floor is decided once, on f: a multiplier image such as d f has a
    # different peak, and its own relative floor would let roundoff modes back in
    f = Field.from_coefficients(f.grid, np.where(_above_floor(f.coefficients, NOISE_FLOOR),
                                                 f.coefficients, 0.0))

    def G(v, sig, idx):
        return gevrey_norm(v, GevreyParams(sig, idx), rel_floor=0.0)

    df = derivative(f, 1)
    lhs = G(df, sigma_p, s)
    rhs = math.exp(-1.0) / (sigma - sigma_p) * G(f, sigma, s)
    out.append(InequalityCheck("G_derivative_loss", lhs, rhs, lhs <= rhs))
    lhs = G(df, sigma, s)
    rhs = G(f, sigma, s + 1)
    out.append(InequalityCheck("G_derivative_index", lhs, rhs, lhs <= rhs))
    lhs = G(helmholtz_inverse(f), sigma, s)
    rhs = G(f, sigma, s - 2)
    out.append(InequalityCheck("G_helmholtz_equality", lhs, rhs,
                               abs(lhs - rhs) <= eq_rtol * max(abs(rhs), 1e-300) or lhs == rhs))
    g = f if g is None else g
    # exact product: the corpus is band-limited below N/6 so no dealiasing is needed
    fg = Field(f.grid, f.samples * g.samples)
    lhs = sobolev_norm(fg, 2.0)
    rhs = 8.0 * sobolev_norm(f, 2.0) * sobolev_norm(g, 2.0)
    out.append(InequalityCheck("H2_algebra", lhs, rhs, lhs <= rhs))
    return out
