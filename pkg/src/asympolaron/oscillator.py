"""Harmonic-oscillator eigenfunctions, quadrature grids and inner products."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

#: largest basis index accepted by :func:`hermite_fn`
MAX_BASIS = 4000


class GridSupportError(ValueError):
    """A state's support extends beyond the quadrature grid."""


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    half_width: float

    def __len__(self):
        return self.nodes.size

    def check_support(self, centers, xis) -> None:
        """Raise :class:`GridSupportError` unless every packet fits on the grid."""
        need = max(abs(float(c)) for c in centers) + 8.0 / math.sqrt(min(float(x) for x in xis))
        if need > self.half_width:
            raise GridSupportError(
                f"packet support {need:.3g} exceeds grid half width {self.half_width:.3g}")


def hermite_fn(n, x):
    """Normalized oscillator eigenfunction ``phi_n(x)`` (vectorized in ``x``).

    ``n`` may be an int or a sequence of ints.  For a sequence the result has
    shape ``(len(n), *x.shape)``.
    """
    x = np.asarray(x, dtype=float)
    ns = np.atleast_1d(np.asarray(n, dtype=int))
    if ns.min() < 0:
        raise ValueError("basis index must be non-negative")
    nmax = int(ns.max())
    if nmax > MAX_BASIS:
        raise ValueError(f"basis index {nmax} exceeds MAX_BASIS={MAX_BASIS}")
    table = hermite_table(nmax, x)
    out = table[ns]
    return out[0] if np.ndim(n) == 0 else out


def hermite_table(nmax: int, x) -> np.ndarray:
    """All ``phi_0 .. phi_nmax`` at ``x``; shape ``(nmax + 1, *x.shape)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(2, nmax + 1):
        out[k] = math.sqrt(2.0 / k) * x * out[k - 1] - math.sqrt((k - 1) / k) * out[k - 2]
    return out


def default_half_width(gp: float) -> float:
    return max(12.0, 2.0 * abs(gp) + 12.0)


def make_grid(npoints: int = 2001, half_width: float = 12.0) -> QuadratureGrid:
    """Gauss-Legendre grid on ``[-half_width, half_width]``."""
    if npoints < 64:
        raise ValueError("npoints must be at least 64")
    if not half_width > 0:
        raise ValueError("half_width must be positive")
    t, w = roots_legendre(int(npoints))
    return QuadratureGrid(nodes=half_width * t, weights=half_width * w, half_width=float(half_width))


def inner(f, g, grid: QuadratureGrid) -> float:
    """Quadrature of ``f * g`` over the grid (real sampled functions)."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape[-1] != len(grid) or g.shape[-1] != len(grid):
        raise ValueError("sampled functions must live on the grid")
    return float(np.sum(grid.weights * f * g))


def gaussian(xi, x):
    """Normalized Gaussian ``(xi/pi)^(1/4) exp(-xi x^2 / 2)``."""
    x = np.asarray(x, dtype=float)
    return (xi / math.pi) ** 0.25 * np.exp(-0.5 * xi * x * x)
