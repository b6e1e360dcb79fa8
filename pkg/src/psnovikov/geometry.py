"""Pseudospherical surface data carried by solutions.

With ``m = u - u_xx`` and ``P = 2um + psi``, ``psi = 4 u u_x / m1 - 2 u_x^2 - 2 u^2``,
the 1-forms ``omega_i = f_i1 dx + f_i2 dt`` are

    f11 = m                          f12 = P
    f21 = mu m + s m1 sqrt(1+mu^2)   f22 = mu P
    f31 = s sqrt(1+mu^2) m + m1 mu   f32 = s sqrt(1+mu^2) P

with one global sign ``s``. The metric is ``omega_1^2 + omega_2^2`` and the
surface is pseudospherical wherever ``omega_1 ^ omega_2 != 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .evolution import momentum, rhs
from .spectral import Field


class GeometryError(ValueError):
    pass


class InternalConsistencyError(GeometryError):
    pass


class NoEvaluationPointsError(GeometryError):
    pass


@dataclass(frozen=True)
class PSSParams:
    mu_metric: float = 0.0
    m1: int = -2
    sign: int = 1

    def __post_init__(self):
        if self.m1 not in (-2, 1):
            raise ValueError(f"m1 must be -2 or 1, got {self.m1}")
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def root(self) -> float:
        return math.sqrt(1.0 + self.mu_metric ** 2)


@dataclass(frozen=True)
class Jet:
    """Samples of ``u, u_x, u_xx`` at fixed t; ``grid`` is None off the torus."""

    u: np.ndarray
    ux: np.ndarray
    uxx: np.ndarray
    x: np.ndarray
    grid: sp.GridSpec | None = None


def jet(u: Field) -> Jet:
    return Jet(u.samples, sp.derivative(u, 1).samples, sp.derivative(u, 2).samples,
               u.grid.x, u.grid)


def _psi_arrays(u, ux, m1):
    return 4.0 * u * ux / m1 - 2.0 * ux ** 2 - 2.0 * u ** 2


def psi(u: Field, p: PSSParams) -> Field:
    j = jet(u)
    return Field(u.grid, _psi_arrays(j.u, j.ux, p.m1))


@dataclass(frozen=True)
class OneForms:
    f11: np.ndarray
    f12: np.ndarray
    f21: np.ndarray
    f22: np.ndarray
    f31: np.ndarray
    f32: np.ndarray
    params: PSSParams
    grid: sp.GridSpec | None = None

    @property
    def m(self) -> np.ndarray:
        return self.f11

    @property
    def P(self) -> np.ndarray:
        return self.f12


def forms_from_mP(m, P, p: PSSParams, grid=None) -> OneForms:
    r = p.root
    s = p.sign
    return OneForms(
        f11=m, f12=P,
        f21=p.mu_metric * m + s * p.m1 * r,
        f22=p.mu_metric * P,
        f31=s * r * m + p.m1 * p.mu_metric,
        f32=s * r * P,
        params=p, grid=grid)


def forms_from_jet(j: Jet, p: PSSParams) -> OneForms:
    m = j.u - j.uxx
    P = 2.0 * j.u * m + _psi_arrays(j.u, j.ux, p.m1)
    return forms_from_mP(m, P, p, j.grid)


def one_forms(u: Field, p: PSSParams, u_t: Field | None = None) -> OneForms:
    """1-form coefficients at fixed t. ``u_t`` is accepted for interface symmetry;
    the coefficients depend on u alone."""
    return forms_from_jet(jet(u), p)


@dataclass(frozen=True)
class MetricSample:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    det: np.ndarray
    genericity: np.ndarray
    forms: OneForms
    t: float = 0.0


def genericity_indicator(forms: OneForms) -> np.ndarray:
    """``dx ^ dt`` coefficient of ``omega_1 ^ omega_2``: ``f11 f22 - f12 f21``."""
    return forms.f11 * forms.f22 - forms.f12 * forms.f21


def metric(forms: OneForms, p: PSSParams | None = None, t: float = 0.0,
           rtol: float = 1e-10) -> MetricSample:
    """First fundamental form ``E dx^2 + 2F dx dt + G dt^2`` of ``omega_1^2 + omega_2^2``.

    The components are cross-checked against the expanded closed form in
    ``m`` and ``P``; a mismatch raises :class:`InternalConsistencyError`.
    """
    p = forms.params if p is None else p
    f = forms
    E = f.f11 ** 2 + f.f21 ** 2
    F = f.f11 * f.f12 + f.f21 * f.f22
    G = f.f12 ** 2 + f.f22 ** 2
    m, P, mu, r, s = f.f11, f.f12, p.mu_metric, p.root, p.sign
    E2 = m ** 2 + (mu * m + s * p.m1 * r) ** 2
    F2 = P * ((1.0 + mu ** 2) * m + s * p.m1 * mu * r)
    G2 = (1.0 + mu ** 2) * P ** 2
    for name, a, b in (("E", E, E2), ("F", F, F2), ("G", G, G2)):
        scale = max(float(np.max(np.abs(b))), 1.0)
        err = float(np.max(np.abs(a - b)))
        if err > rtol * scale:
            raise InternalConsistencyError(f"metric component {name} mismatch {err:.3g}")
    gen = genericity_indicator(f)
    return MetricSample(E, F, G, E * G - F ** 2, gen, forms, t)


@dataclass(frozen=True)
class AknsPair:
    X: np.ndarray  # shape (N, 2, 2)
    T: np.ndarray


def _akns(a1, a2, a3) -> np.ndarray:
    out = np.empty(a1.shape + (2, 2))
    out[..., 0, 0] = 0.5 * a2
    out[..., 0, 1] = 0.5 * (a1 - a3)
    out[..., 1, 0] = 0.5 * (a1 + a3)
    out[..., 1, 1] = -0.5 * a2
    return out


def akns_matrices(forms: OneForms) -> AknsPair:
    """``X = (1/2)[[f21, f11-f31],[f11+f31, -f21]]`` and likewise ``T`` from the ``f_i2``."""
    f = forms
    return AknsPair(_akns(f.f11, f.f21, f.f31), _akns(f.f12, f.f22, f.f32))


def zero_curvature_residual(u: Field, p: PSSParams, resolution_guard: float | None = 1e-10) -> float:
    """``max |X_t - T_x + [X, T]|`` over grid points and matrix entries.

    ``X_t`` is evaluated through the chain rule with ``u_t = F(u)``, so no
    time differencing is involved: ``f_i1`` is affine in ``m`` and
    ``m_t = u_t - (u_t)_xx``.
    """
    if p.m1 != -2:
        raise GeometryError("the AKNS pair is formulated for m1 = -2 only")
    ut = rhs(u, resolution_guard=resolution_guard)
    mt = momentum(ut).samples
    forms = one_forms(u, p)
    pair = akns_matrices(forms)
    r, s = p.root, p.sign
    Xt = _akns(mt, p.mu_metric * mt, s * r * mt)
    grid = u.grid
    Tx = np.empty_like(pair.T)
    for a in range(2):
        for b in range(2):
            Tx[:, a, b] = sp.derivative(Field(grid, pair.T[:, a, b]), 1).samples
    comm = pair.X @ pair.T - pair.T @ pair.X
    return float(np.max(np.abs(Xt - Tx + comm)))


# -- Gaussian curvature ------------------------------------------------------------

def brioschi(E, F, G, Ex, Et, Ett, Fx, Ft, Fxt, Gx, Gt, Gxx):
    """Gaussian curvature of ``E dx^2 + 2F dx dt + G dt^2`` (Brioschi formula)."""
    a11 = -0.5 * Ett + Fxt - 0.5 * Gxx
    a12 = 0.5 * Ex
    a13 = Fx - 0.5 * Et
    a21 = Ft - 0.5 * Gx
    a31 = 0.5 * Gt
    det1 = (a11 * (E * G - F * F)
            - a12 * (a21 * G - F * a31)
            + a13 * (a21 * F - E * a31))
    b12 = 0.5 * Et
    b13 = 0.5 * Gx
    det2 = -b12 * (b12 * G - F * b13) + b13 * (b12 * F - E * b13)
    return (det1 - det2) / (E * G - F * F) ** 2


# 4th-order centred stencils on 5 equispaced samples; integer weights so that a
# constant series differences to exactly zero
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0])
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])


@dataclass(frozen=True)
class _Deriv:
    v: np.ndarray
    x: np.ndarray
    t: np.ndarray
    xx: np.ndarray
    tt: np.ndarray
    xt: np.ndarray


def _prod(a: _Deriv, b: _Deriv) -> _Deriv:
    return _Deriv(a.v * b.v,
                  a.x * b.v + a.v * b.x,
                  a.t * b.v + a.v * b.t,
                  a.xx * b.v + 2 * a.x * b.x + a.v * b.xx,
                  a.tt * b.v + 2 * a.t * b.t + a.v * b.tt,
                  a.xt * b.v + a.x * b.t + a.t * b.x + a.v * b.xt)


def _affine(a: _Deriv, scale: float, offset) -> _Deriv:
    return _Deriv(scale * a.v + offset, scale * a.x, scale * a.t, scale * a.xx,
                  scale * a.tt, scale * a.xt)


def _add(a: _Deriv, b: _Deriv) -> _Deriv:
    return _Deriv(*(getattr(a, k) + getattr(b, k) for k in ("v", "x", "t", "xx", "tt", "xt")))


def _form_derivs(series: list[np.ndarray], grid: sp.GridSpec, dt: float) -> _Deriv:
    """Derivatives at the centre of a 5-sample window of one form coefficient."""
    st = np.stack(series)
    v = st[2]
    ft = (_D1 @ st) / (12.0 * dt)
    ftt = (_D2 @ st) / (12.0 * dt ** 2)

    def dx(a, k=1):
        return sp.derivative(Field(grid, a), k).samples
    return _Deriv(v, dx(v), ft, dx(v, 2), ftt, dx(ft))


@dataclass
class CurvatureSlice:
    t: float
    K: np.ndarray           # NaN where the metric is below the genericity threshold
    mask: np.ndarray
    genericity: np.ndarray

    @property
    def n_eval(self) -> int:
        return int(self.mask.sum())

    @property
    def max_abs_K_plus_1(self) -> float:
        if not self.mask.any():
            return math.nan
        return float(np.max(np.abs(self.K[self.mask] + 1.0)))


def gaussian_curvature(metric_series: list[MetricSample], dt_stencil: float,
                       rel_threshold: float = 1e-6, method: str = "forms") -> list[CurvatureSlice]:
    """Gaussian curvature at every interior time of an equispaced metric series.

    x-derivatives are spectral and t-derivatives use 4th-order centred
    stencils over the stored samples. With ``method="forms"`` (default) the
    derivatives of E, F, G are assembled by the product rule from derivatives
    of ``m`` and ``P``, whose relative accuracy does not degrade where the
    metric is nearly degenerate. ``method="metric"`` differentiates E, F,
    G directly. Points with ``|genericity| < rel_threshold * max|genericity|``
    (maximum over the slab) are excluded.
    """
    if len(metric_series) < 5:
        raise GeometryError("need at least 5 consecutive samples")
    grid = metric_series[0].forms.grid
    if grid is None:
        raise GeometryError("metric samples must live on a periodic grid")
    gmax = max(float(np.max(np.abs(ms.genericity))) for ms in metric_series)
    if gmax == 0.0:
        raise NoEvaluationPointsError("metric is degenerate everywhere")
    thr = rel_threshold * gmax
    out = []
    for c in range(2, len(metric_series) - 2):
        win = metric_series[c - 2:c + 3]
        if method == "forms":
            p = win[2].forms.params
            m = _form_derivs([ms.forms.f11 for ms in win], grid, dt_stencil)
            P = _form_derivs([ms.forms.f12 for ms in win], grid, dt_stencil)
            # f21, f22 are affine in m, P: differentiate only the varying part
            f21 = _affine(m, p.mu_metric, p.sign * p.m1 * p.root)
            f22 = _affine(P, p.mu_metric, 0.0)
            E = _add(_prod(m, m), _prod(f21, f21))
            F = _add(_prod(m, P), _prod(f21, f22))
            G = _add(_prod(P, P), _prod(f22, f22))
        elif method == "metric":
            E = _form_derivs([ms.E for ms in win], grid, dt_stencil)
            F = _form_derivs([ms.F for ms in win], grid, dt_stencil)
            G = _form_derivs([ms.G for ms in win], grid, dt_stencil)
        else:
            raise ValueError(f"unknown method {method!r}")
        gen = win[2].genericity
        mask = np.abs(gen) >= thr
        K = np.full(grid.n_points, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            Kall = brioschi(E.v, F.v, G.v, E.x, E.t, E.tt, F.x, F.t, F.xt, G.x, G.t, G.xx)
        K[mask] = Kall[mask]
        out.append(CurvatureSlice(win[2].t, K, mask, gen))
    if not any(s.mask.any() for s in out):
        raise NoEvaluationPointsError("no point passes the genericity threshold")
    return out


# -- nongeneric families -----------------------------------------------------------

def nongeneric_reference(kind: str, a: float = 1.0, b: float = 1.0, window=(0.0, 5.0),
                         n: int = 512, f_t: float = 1.0) -> Jet:
    """Closed-form jet of a nongeneric solution on ``window``.

    ``sqrt_exp_m2``: ``sqrt(a e^{-x} + b)`` (m1 = -2); ``sqrt_exp_p1``:
    ``sqrt(a e^{2x} + b)`` (m1 = 1); ``f_exp``: ``f(t) e^x`` (m1 = 1), with
    ``f_t`` the value of ``f`` at the sampled time. These functions neither
    decay nor repeat, so they are sampled on an open window with exact
    derivatives instead of on the torus.
    """
    x = np.linspace(window[0], window[1], n)
    if kind == "sqrt_exp_m2":
        q = a * np.exp(-x) + b
        qx, qxx = -a * np.exp(-x), a * np.exp(-x)
    elif kind == "sqrt_exp_p1":
        q = a * np.exp(2 * x) + b
        qx, qxx = 2 * a * np.exp(2 * x), 4 * a * np.exp(2 * x)
    elif kind == "f_exp":
        u = f_t * np.exp(x)
        return Jet(u, u.copy(), u.copy(), x)
    else:
        raise ValueError(f"unknown nongeneric family {kind!r}")
    if np.any(q <= 0):
        raise GeometryError(f"radicand is not positive on the window {window}")
    u = np.sqrt(q)
    ux = qx / (2 * u)
    uxx = qxx / (2 * u) - qx ** 2 / (4 * u ** 3)
    return Jet(u, ux, uxx, x)
