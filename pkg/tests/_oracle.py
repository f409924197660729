"""Independent quadrature oracles shared by the tests."""

import math

import numpy as np
import scipy.linalg


def packet(x, xi, center, delta):
    y = x - center
    g = (xi / math.pi) ** 0.25 * np.exp(-0.5 * xi * y * y)
    return (1.0 + delta * y) * g, (delta - xi * y * (1.0 + delta * y)) * g


def weight_problem(omega, Omega, parity, gp, shape, grid):
    """(M, S) of the two-packet trial state by quadrature.

    Spin-up potential ``omega/2 (p^2 + (x + g')^2)``; the tunneling term
    couples ``psi_+(x)`` to ``P psi_+(-x)``.
    """
    za, zb, xa, xb, da, db = shape
    x, w = grid.nodes, grid.weights
    pa, dpa = packet(x, xa, -za * gp, da)
    pb, dpb = packet(x, xb, zb * gp, db)
    fa, _ = packet(-x, xa, -za * gp, da)
    fb, _ = packet(-x, xb, zb * gp, db)
    v = (x + gp) ** 2
    f, df, r = (pa, pb), (dpa, dpb), (fa, fb)
    M = np.empty((2, 2))
    S = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            kin = np.dot(w, df[i] * df[j])
            pot = np.dot(w, f[i] * v * f[j])
            M[i, j] = 0.5 * omega * (kin + pot) + 0.5 * Omega * parity * np.dot(w, f[i] * r[j])
            S[i, j] = np.dot(w, f[i] * f[j])
    return M, S


def energy(omega, Omega, parity, gp, shape, grid):
    """Lowest variational energy and weights (alpha >= 0) by quadrature."""
    M, S = weight_problem(omega, Omega, parity, gp, shape, grid)
    lam, vec = scipy.linalg.eigh(M, S)
    c = vec[:, 0]
    c = c / math.sqrt(c @ S @ c)
    if c[0] < 0:
        c = -c
    return lam[0] - 0.5 * omega * (gp * gp + 1.0), c
