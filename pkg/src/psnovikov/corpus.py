"""Seeded random band-limited fields used by the property suites and the CLI."""
from __future__ import annotations

import numpy as np

from .spectral import Field, GridSpec


def random_band_limited(grid: GridSpec, rng: np.random.Generator, k_max: int | None = None,
                        decay: float = 0.15, amplitude: float = 1.0) -> Field:
    """Random real field with modes ``|k| <= k_max`` (default ``N/6``).

    Mode amplitudes fall off like ``exp(-decay |k|)`` so norms with positive
    Gevrey weight stay moderate; with ``k_max <= N/6`` every product of two
    corpus fields is free of aliasing.
    """
    n = grid.n_points
    if k_max is None:
        k_max = n // 6
    k_max = min(int(k_max), n // 2 - 1)
    c = np.zeros(n, dtype=complex)
    ks = np.arange(0, k_max + 1)
    vals = (rng.standard_normal(ks.size) + 1j * rng.standard_normal(ks.size)) * np.exp(-decay * ks)
    vals[0] = vals[0].real
    # fft ordering: index k for k >= 0, index n + k for k < 0
    c[ks] = vals
    c[(n - ks[1:]) % n] = np.conj(vals[1:])
    f = Field.from_coefficients(grid, c)
    scale = f.max_abs()
    return f * (amplitude / scale) if scale > 0 else f


def corpus(grid: GridSpec, seed: int, size: int, **kw) -> list[Field]:
    rng = np.random.default_rng(seed)
    return [random_band_limited(grid, rng, **kw) for _ in range(size)]
