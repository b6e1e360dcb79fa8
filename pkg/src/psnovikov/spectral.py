"""Periodic pseudospectral foundation.

The whole-line problem is approximated on the torus ``[-L, L)`` with ``N``
equispaced points. Fields carry their samples and a lazily computed
spectrum of discrete coefficients ``c_k`` with

    f(x_j) = sum_k c_k exp(i xi_k x_j),    xi_k = pi k / L.

Line-transform values are recovered as ``u_hat(xi_k) ~ sqrt(2 pi) (L/pi) c_k``;
see :func:`transform`. All norm weights in :mod:`psnovikov.norms` use the
matching ``2L sum |c_k|^2`` normalization so they approximate line norms.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER = 16


class InvalidFieldError(ValueError):
    """Samples contain NaN or Inf."""


class UnsupportedOrderError(ValueError):
    """Requested derivative order exceeds the configured maximum."""


class GridMismatchError(ValueError):
    """Binary operation on fields that live on different grids."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-half_width, half_width)``."""

    half_width: float = 40.0
    n_points: int = 1024

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.n_points < 8 or self.n_points % 2:
            raise ValueError(f"n_points must be even and >= 8, got {self.n_points}")

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def N(self) -> int:
        return self.n_points

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_width + self.h * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order (0..N/2-1, -N/2..-1)."""
        k = np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).round().astype(np.int64)
        k.flags.writeable = False
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        xi = np.pi * self.k / self.half_width
        xi.flags.writeable = False
        return xi

    @property
    def xi_max(self) -> float:
        return np.pi * (self.n_points // 2) / self.half_width

    @cached_property
    def _phase(self) -> np.ndarray:
        # x_0 = -L shifts every mode by exp(i pi k) = (-1)^k
        p = np.where(self.k % 2 == 0, 1.0, -1.0)
        p.flags.writeable = False
        return p

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on the modes kept by the 2/3 rule, ``|k| < N/3``."""
        m = np.abs(self.k) < self.n_points / 3.0
        m.flags.writeable = False
        return m

    @cached_property
    def nyquist(self) -> np.ndarray:
        m = self.k == -(self.n_points // 2)
        m.flags.writeable = False
        return m


class Field:
    """Real samples on a :class:`GridSpec` with a cached spectrum.

    Instances are immutable; every operation returns a new field.
    """

    __slots__ = ("grid", "_samples", "_coeffs")

    def __init__(self, grid: GridSpec, samples, *, _coeffs=None):
        samples = np.array(samples, dtype=float, copy=True)
        if samples.shape != (grid.n_points,):
            raise ValueError(f"expected {grid.n_points} samples, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidFieldError("field samples must be finite")
        samples.flags.writeable = False
        self.grid = grid
        self._samples = samples
        self._coeffs = _coeffs

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> Field:
        return cls(grid, func(grid.x))

    @classmethod
    def from_coefficients(cls, grid: GridSpec, coeffs) -> Field:
        """Build a field from discrete coefficients ``c_k`` (FFT order).

        The imaginary part of the synthesized samples is discarded, which is
        the same as projecting ``coeffs`` onto conjugate-symmetric spectra.
        That projection is cached as the spectrum, so modes set to zero stay
        exactly zero instead of picking up FFT roundoff.
        """
        coeffs = np.asarray(coeffs, dtype=complex)
        vals = np.fft.ifft(coeffs * grid._phase) * grid.n_points
        sym = 0.5 * (coeffs + np.conj(np.roll(coeffs[::-1], 1)))
        sym.flags.writeable = False
        return cls(grid, vals.real, _coeffs=sym)

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> Field:
        return cls(grid, np.full(grid.n_points, float(value)))

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def coefficients(self) -> np.ndarray:
        """Discrete coefficients ``c_k`` in FFT order."""
        if self._coeffs is None:
            c = np.fft.fft(self._samples) * self.grid._phase / self.grid.n_points
            c.flags.writeable = False
            self._coeffs = c
        return self._coeffs

    def __add__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self._samples + other._samples)
        return Field(self.grid, self._samples + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, self._samples - other._samples)
        return Field(self.grid, self._samples - other)

    def __rsub__(self, other):
        return Field(self.grid, other - self._samples)

    def __neg__(self):
        return Field(self.grid, -self._samples)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            raise TypeError("use product() for field-field products")
        return Field(self.grid, self._samples * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Field(self.grid, self._samples / float(scalar))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._samples)))

    def __repr__(self):
        return f"Field(N={self.grid.n_points}, L={self.grid.half_width}, max|f|={self.max_abs():.3g})"


def _check_same_grid(f: Field, g: Field):
    if f.grid != g.grid:
        raise GridMismatchError(f"grid mismatch: {f.grid} vs {g.grid}")


def from_spectrum(grid: GridSpec, coeffs) -> Field:
    return Field.from_coefficients(grid, coeffs)


def transform(f: Field) -> np.ndarray:
    """Line Fourier transform sampled at ``xi_k`` (FFT order).

    Normalized as ``(2 pi)^{-1/2} int exp(-i xi x) f(x) dx`` so that it can
    be compared with closed-form transforms of rapidly decaying functions.
    """
    L = f.grid.half_width
    return math.sqrt(2.0 * math.pi) * (L / math.pi) * f.coefficients


def inverse_transform(grid: GridSpec, uhat) -> Field:
    """Inverse of :func:`transform`."""
    L = grid.half_width
    return Field.from_coefficients(grid, np.asarray(uhat) / (math.sqrt(2.0 * math.pi) * (L / math.pi)))


def derivative_multiplier(grid: GridSpec, order: int) -> np.ndarray:
    if order < 0:
        raise UnsupportedOrderError(f"derivative order must be nonnegative, got {order}")
    if order > MAX_DERIVATIVE_ORDER:
        raise UnsupportedOrderError(
            f"derivative order {order} exceeds maximum {MAX_DERIVATIVE_ORDER}")
    mult = (1j * grid.xi) ** order
    if order % 2:
        mult = np.where(grid.nyquist, 0.0, mult)
    return mult


def apply_multiplier(f: Field, mult) -> Field:
    return Field.from_coefficients(f.grid, f.coefficients * mult)


def derivative(f: Field, order: int = 1) -> Field:
    """Spectral derivative ``d^order f / dx^order``.

    For odd orders the unpaired Nyquist mode is zeroed.
    """
    if order == 0:
        derivative_multiplier(f.grid, 0)
        return f
    return apply_multiplier(f, derivative_multiplier(f.grid, order))


def helmholtz_multiplier(grid: GridSpec) -> np.ndarray:
    return 1.0 / (1.0 + grid.xi ** 2)


def helmholtz_inverse(f: Field) -> Field:
    """Apply ``(1 - d^2/dx^2)^{-1}`` as the Fourier multiplier ``1/(1 + xi^2)``."""
    return apply_multiplier(f, helmholtz_multiplier(f.grid))


def dealias(f: Field) -> Field:
    """Zero every mode with ``|k| >= N/3``."""
    return apply_multiplier(f, f.grid.dealias_mask)


def product(f: Field, g: Field) -> Field:
    """Pointwise product with 2/3-rule dealiasing.

    Both factors are truncated to ``|k| < N/3`` before multiplying and the
    product is truncated again, which removes quadratic aliasing exactly.
    """
    _check_same_grid(f, g)
    mask = f.grid.dealias_mask
    fd = Field.from_coefficients(f.grid, f.coefficients * mask)
    gd = fd if g is f else Field.from_coefficients(g.grid, g.coefficients * mask)
    raw = Field(f.grid, fd.samples * gd.samples)
    return Field.from_coefficients(f.grid, raw.coefficients * mask)


def integrate(f: Field) -> float:
    """Rectangle rule ``h sum_j f(x_j)``, spectrally accurate on the torus."""
    return float(f.grid.h * np.sum(f.samples))


def l1_norm(f: Field) -> float:
    return float(f.grid.h * np.sum(np.abs(f.samples)))


def energy_tail(f: Field) -> float:
    """Fraction of ``sum |c_k|^2`` in the top third of the active band.

    The active band is ``|k| < N/3`` (what 2/3 dealiasing retains), so the
    tail is ``|k| >= 2N/9`` and also counts anything above the cutoff.
    """
    power = np.abs(f.coefficients) ** 2
    total = power.sum()
    if total == 0.0:
        return 0.0
    tail = np.abs(f.grid.k) >= 2.0 * f.grid.n_points / 9.0
    return float(power[tail].sum() / total)


def outer_mass_fraction(f: Field) -> float:
    """Fraction of ``int |f|`` lying outside ``|x| <= L/2``."""
    a = np.abs(f.samples)
    total = a.sum()
    if total == 0.0:
        return 0.0
    outside = np.abs(f.grid.x) > f.grid.half_width / 2
    return float(a[outside].sum() / total)


def check_domain(f: Field, tol: float = 1e-12) -> bool:
    """Log a warning when the torus truncation is doubtful for ``f``."""
    frac = outer_mass_fraction(f)
    if frac > tol:
        logger.warning("%.3g of the mass lies outside |x| <= L/2; periodic truncation "
                       "may be visible", frac)
        return False
    return True


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_samples_csv(f: Field, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for xj, v in zip(f.grid.x, f.samples):
            w.writerow([_fmt(xj), _fmt(v)])


def write_spectrum_csv(f: Field, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "re", "im"])
        for k, c in zip(f.grid.k, f.coefficients):
            w.writerow([int(k), _fmt(c.real), _fmt(c.imag)])


def read_samples_csv(path, half_width: float | None = None) -> Field:
    """Read an ``x,value`` file written by :func:`write_samples_csv`.

    The grid is inferred from the abscissae unless ``half_width`` is given.
    """
    xs, vals = [], []
    with open(Path(path), newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["x", "value"]:
            raise ValueError(f"{path}: expected header 'x,value', got {header}")
        for row in r:
            if row:
                xs.append(float(row[0]))
                vals.append(float(row[1]))
    n = len(vals)
    if half_width is None:
        half_width = -xs[0]
    grid = GridSpec(half_width, n)
    if not np.allclose(grid.x, xs, rtol=0, atol=1e-9 * half_width):
        raise ValueError(f"{path}: abscissae are not the uniform grid on [-{half_width}, {half_width})")
    return Field(grid, vals)


def read_spectrum_csv(path, half_width: float) -> Field:
    ks, cs = [], []
    with open(Path(path), newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["k", "re", "im"]:
            raise ValueError(f"{path}: expected header 'k,re,im', got {header}")
        for row in r:
            if row:
                ks.append(int(row[0]))
                cs.append(complex(float(row[1]), float(row[2])))
    grid = GridSpec(half_width, len(cs))
    if list(grid.k) != ks:
        raise ValueError(f"{path}: wavenumbers are not in FFT order")
    return Field.from_coefficients(grid, np.array(cs))
