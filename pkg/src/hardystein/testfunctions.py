"""Smooth, well-localized test functions on the default grids."""

from __future__ import annotations

import numpy as np

from .spectral import DEFAULT_GRID, GridFunction


def gaussian_bump(N=None, L=None, d=1, center=0.0, width=1.0, height=1.0):
    """height * exp(-|x - center|^2 / (2 width^2))."""
    n0, l0 = DEFAULT_GRID[d]
    c = np.broadcast_to(np.asarray(center, dtype=float), (d,))

    def fn(x):
        if d == 1:
            r2 = (x - c[0]) ** 2
        else:
            r2 = np.sum((x - c) ** 2, axis=-1)
        return height * np.exp(-r2 / (2 * width ** 2))

    return GridFunction.from_function(fn, N or n0, L or l0, d)


_ZERO_MEAN_1D = (
    lambda x: x * np.exp(-x ** 2 / 2),
    lambda x: np.exp(-x ** 2 / 2) - 0.5 * np.exp(-x ** 2 / 8),
    lambda x: (x ** 2 - 1) * np.exp(-x ** 2 / 2),
    lambda x: np.sin(2 * x) * np.exp(-x ** 2 / 4),
    lambda x: np.exp(-(x - 2) ** 2) - np.exp(-(x + 1.5) ** 2),
)


def zero_mean_family(N=None, L=None):
    """Five one-dimensional functions whose integrals vanish exactly."""
    n0, l0 = DEFAULT_GRID[1]
    return [GridFunction.from_function(fn, N or n0, L or l0) for fn in _ZERO_MEAN_1D]


def random_smooth(rng, N=None, L=None, d=1, bumps=4, zero_mean=False, spread=None):
    """Random sum of Gaussian bumps kept inside the middle half of the box.

    With ``zero_mean`` the bumps come in pairs of equal width and
    opposite mass, so the integral vanishes exactly.
    """
    n0, l0 = DEFAULT_GRID[d]
    N = N or n0
    L = L or l0
    spread = spread or L / 8
    centers = rng.uniform(-spread, spread, size=(bumps, d))
    widths = rng.uniform(0.5, 1.5, size=bumps)
    heights = rng.normal(size=bumps)
    if zero_mean:
        widths[1::2] = widths[0::2][: len(widths[1::2])]
        heights[1::2] = -heights[0::2][: len(heights[1::2])]
        if bumps % 2:
            heights[-1] = 0.0

    def fn(x):
        out = 0.0
        for c, w, a in zip(centers, widths, heights):
            r2 = (x - c[0]) ** 2 if d == 1 else np.sum((x - c) ** 2, axis=-1)
            out = out + a * np.exp(-r2 / (2 * w * w))
        return out

    return GridFunction.from_function(fn, N, L, d)
