"""Pure-Python kernels: closed-form packet matrix elements, 2x2 weight solve,
the energy objective and a bounded Nelder-Mead simplex.

This module mirrors ``_kernels.pyx`` function for function.  It is used when
the compiled extension is unavailable or when ``ASYMPOLARON_PURE_PYTHON=1``.
"""

from __future__ import annotations

import math

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)
#: overlap matrices with 1 - s12^2/(s11 s22) below this are treated as collinear;
#: closer to collinearity the weights grow large and cancellation spoils the energy
COLLINEAR_RTOL = 1e-5


class DegenerateOverlapError(ValueError):
    """Overlap matrix of the two packets is not positive definite."""


# ---------------------------------------------------------------------------
# coefficients f1..f4

def _gauss_pref(xi_a, xi_b):
    return xi_a ** 0.25 * xi_b ** 0.25


def coef_f1(omega, xi_a, xi_b, zeta_a, zeta_b, gp):
    s = xi_a + xi_b
    arg = xi_a * xi_b * gp * gp * (zeta_a + zeta_b) ** 2 / (-2.0 * s)
    return omega * _gauss_pref(xi_a, xi_b) / (SQRT2 * s ** 3.5) * math.exp(arg)


def coef_f2(omega, xi_a, xi_b, zeta_a, zeta_b, delta_a, gp):
    s = xi_a + xi_b
    arg = xi_a * xi_b * gp * gp * (zeta_a + zeta_b) ** 2 / (-2.0 * s)
    return omega * delta_a * _gauss_pref(xi_a, xi_b) / (SQRT2 * s ** 4.5) * math.exp(arg)


def coef_f3(xi_a, xi_b, zeta_a, zeta_b, gp):
    s = xi_a + xi_b
    arg = -xi_a * xi_b * gp * gp * (zeta_a - zeta_b) ** 2 / (2.0 * s)
    return SQRT2 * _gauss_pref(xi_a, xi_b) * math.exp(arg) / s ** 1.5


def coef_f4(xi_a, xi_b, zeta_a, zeta_b, delta_a, gp):
    s = xi_a + xi_b
    arg = -xi_a * xi_b * gp * gp * (zeta_a - zeta_b) ** 2 / (2.0 * s)
    return SQRT2 * delta_a * _gauss_pref(xi_a, xi_b) * math.exp(arg) / s ** 2.5


# ---------------------------------------------------------------------------
# <phi|h+|phi> elements, h+ = omega/2 (p^2 + (x + g')^2)

def h_aa(omega, xi, zeta, delta, gp):
    zm = zeta - 1.0
    return omega / (8.0 * xi * xi) * (
        delta * delta * (2.0 * zm * zm * xi * gp * gp + 3.0 * xi * xi + 3.0)
        + 2.0 * xi * (2.0 * zm * zm * xi * gp * gp + xi * xi + 1.0)
        - 8.0 * delta * zm * xi * gp
    )


def h_bb(omega, xi, zeta, delta, gp):
    zp = zeta + 1.0
    return omega / (8.0 * xi * xi) * (
        delta * delta * (2.0 * zp * zp * xi * gp * gp + 3.0 * xi * xi + 3.0)
        + 2.0 * xi * (2.0 * zp * zp * xi * gp * gp + xi * xi + 1.0)
        + 8.0 * delta * zp * xi * gp
    )


def h_ab_truncated(omega, xa, xb, za, zb, da, db, g):
    """Inter-packet element without the terms linear in delta_a alone."""
    F1 = coef_f1(omega, xa, xb, za, zb, g)
    F2 = coef_f2(omega, xa, xb, za, zb, da, g)
    zs = za + zb
    zb1 = zb + 1.0
    g2 = g * g
    g3 = g2 * g
    g4 = g2 * g2
    xb2 = xb * xb
    K = za * za * (xb2 - 1.0) + 2.0 * za * (zb * xb2 + 1.0) + zb * zb * xb2 - 1.0
    t1 = F1 * (
        xa * xb * (
            xb2 - db * zb1 * zb1 * xb * g3 * zs + db * g * (-3.0 * za + zb + 4.0)
            - zb1 * xb * g2 * (2.0 * za - zb - 3.0) + 2.0
        )
        + xb2 * (2.0 * db * zb1 * g + zb1 * zb1 * xb * g2 + 1.0)
    )
    t2 = F1 * xa ** 3 * (xb + db * g3 * zs * K - 3.0 * db * xb * g * zs - g2 * K)
    t3 = F1 * xa * xa * (
        2.0 * xb2 + 2.0 * (za - 1.0) * db * zb1 * xb * g3 * zs
        - db * g * (3.0 * za * (xb2 + 1.0) + 3.0 * zb * xb2 + zb - 2.0)
        - xb * g2 * (za * za * (xb2 - 1.0) + 2.0 * za * (zb * xb2 + zb + 2.0)
                     + zb * zb * xb2 - 2.0 * zb - 3.0)
        + 1.0
    )
    t4 = F2 * db * (
        xb2 * (zb1 * xb * g2 * (2.0 * za + 3.0 * zb + 1.0) + 3.0)
        - xa * xb * (-3.0 * (xb2 + 2.0) + zb1 * zb1 * xb2 * g4 * zs * zs
                     + 3.0 * (za - 1.0) * xb * g2 * (za + 2.0 * zb + 1.0))
    )
    t5 = F2 * db * xa * xa * (
        6.0 * xb2 + 2.0 * (za - 1.0) * zb1 * xb2 * g4 * zs * zs
        - 3.0 * xb * g2 * (2.0 * za * za * xb2 + 2.0 * za * (2.0 * zb * xb2 + zb + 1.0)
                           + zb * zb * (2.0 * xb2 + 1.0) - 1.0)
        + 3.0
    )
    t6 = F2 * db * xa ** 3 * (
        3.0 * xb + xb * g4 * zs * zs * K
        - g2 * (za * za * (6.0 * xb2 - 3.0) + 2.0 * za * zb * (6.0 * xb2 - 1.0)
                + 4.0 * za + 6.0 * zb * zb * xb2 + 2.0 * zb - 1.0)
    )
    return t1 + t2 + t3 + t4 + t5 + t6


def h_ab_delta_a(omega, xa, xb, za, zb, da, g):
    """Terms of the inter-packet element linear in delta_a alone."""
    zs = za + zb
    g2 = g * g
    poly = (
        xb * xb * (-(za + 3.0 * zb + 2.0) - g2 * xb * zs * (zb + 1.0) ** 2)
        + xa * xb * (-(3.0 * xb * xb * zs - za + 3.0 * zb + 4.0)
                     + 2.0 * g2 * xb * (za - 1.0) * zs * (zb + 1.0))
        + xa * xa * (-3.0 * xb * xb * zs + 2.0 * za - 2.0
                     + g2 * xb * zs * (xb * zs - za + 1.0) * (xb * zs + za - 1.0))
    )
    return -da * g * coef_f1(omega, xa, xb, za, zb, g) * poly


def h_ab(omega, xa, xb, za, zb, da, db, g):
    return h_ab_truncated(omega, xa, xb, za, zb, da, db, g) + h_ab_delta_a(omega, xa, xb, za, zb, da, g)


# ---------------------------------------------------------------------------
# inter-spin (space-inverted) overlaps

def flip_aa(xi, zeta, delta, gp):
    return math.exp(-zeta * zeta * xi * gp * gp) / (2.0 * xi) * (
        2.0 * xi * (delta * zeta * gp + 1.0) ** 2 - delta * delta)


def flip_bb(xi, zeta, delta, gp):
    return math.exp(-zeta * zeta * xi * gp * gp) / (2.0 * xi) * (
        2.0 * xi * (delta * zeta * gp - 1.0) ** 2 - delta * delta)


def flip_ab(xa, xb, za, zb, da, db, g):
    zd = za - zb
    F3 = coef_f3(xa, xb, za, zb, g)
    F4 = coef_f4(xa, xb, za, zb, da, g)
    return F3 * (xa + xb + xa * db * g * zd) + F4 * (
        -xa * db + db * xb * (xa * g * g * zd * zd - 1.0) + xb * g * zd * (xa + xb))


# ---------------------------------------------------------------------------
# same-space overlap of two packets (1 + d_i (x - c_i)) phi0(xi_i, x - c_i)

def overlap(xi1, xi2, c1, c2, d1, d2):
    s = xi1 + xi2
    m = (xi1 * c1 + xi2 * c2) / s
    e1 = m - c1
    e2 = m - c2
    k = math.exp(-xi1 * xi2 * (c1 - c2) ** 2 / (2.0 * s))
    return _gauss_pref(xi1, xi2) / SQRT_PI * math.sqrt(2.0 * math.pi / s) * k * (
        (1.0 + d1 * e1) * (1.0 + d2 * e2) + d1 * d2 / s)


# ---------------------------------------------------------------------------
# energy

def energy_matrices(omega, Omega, parity, gp, za, zb, xa, xb, da, db):
    """Return (M11, M12, M22, S11, S12, S22) of the weight problem."""
    t = 0.5 * Omega * parity
    m11 = h_aa(omega, xa, za, da, gp) + t * flip_aa(xa, za, da, gp)
    m22 = h_bb(omega, xb, zb, db, gp) + t * flip_bb(xb, zb, db, gp)
    m12 = h_ab(omega, xa, xb, za, zb, da, db, gp) + t * flip_ab(xa, xb, za, zb, da, db, gp)
    s11 = 1.0 + da * da / (2.0 * xa)
    s22 = 1.0 + db * db / (2.0 * xb)
    s12 = overlap(xa, xb, -za * gp, zb * gp, da, db)
    return m11, m12, m22, s11, s12, s22


def lowest_pair(m11, m12, m22, s11, s12, s22, rtol=COLLINEAR_RTOL):
    """Smallest generalized eigenpair of the 2x2 pencil (M, S).

    Returns ``(lam, w1, w2)`` normalized so that ``w^T S w = 1`` with the
    gauge ``w1 >= 0``.
    """
    if not (s11 > 0.0 and s22 > 0.0):
        raise DegenerateOverlapError("non-positive packet norm")
    l11 = math.sqrt(s11)
    l21 = s12 / l11
    r = s22 - l21 * l21
    if r <= rtol * s22:
        raise DegenerateOverlapError("packets are numerically collinear")
    l22 = math.sqrt(r)
    # C = L^-1 M L^-T
    c11 = m11 / s11
    u = (m12 - l21 * m11 / l11) / l22
    c12 = u / l11
    c22 = (m22 - 2.0 * l21 * m12 / l11 + l21 * l21 * m11 / s11) / r
    half = 0.5 * (c11 - c22)
    lam = 0.5 * (c11 + c22) - math.sqrt(half * half + c12 * c12)
    a1 = c12
    a2 = lam - c11
    b1 = lam - c22
    b2 = c12
    if a1 * a1 + a2 * a2 >= b1 * b1 + b2 * b2:
        v1, v2 = a1, a2
    else:
        v1, v2 = b1, b2
    nv = math.sqrt(v1 * v1 + v2 * v2)
    if nv == 0.0:
        v1, v2 = 1.0, 0.0
    else:
        v1 /= nv
        v2 /= nv
    # w = L^-T v
    w2 = v2 / l22
    w1 = (v1 - l21 * w2) / l11
    if w1 < 0.0 or (w1 == 0.0 and w2 < 0.0):
        w1 = -w1
        w2 = -w2
    return lam, w1, w2


def shape_energy(omega, Omega, parity, gp, za, zb, xa, xb, da, db):
    """Variational energy with weights eliminated; raises on degenerate S."""
    m = energy_matrices(omega, Omega, parity, gp, za, zb, xa, xb, da, db)
    lam, _, _ = lowest_pair(*m)
    return lam - 0.5 * omega * (gp * gp + 1.0)


def shape_energy_weights(omega, Omega, parity, gp, za, zb, xa, xb, da, db):
    m = energy_matrices(omega, Omega, parity, gp, za, zb, xa, xb, da, db)
    lam, w1, w2 = lowest_pair(*m)
    return lam - 0.5 * omega * (gp * gp + 1.0), w1, w2


class EnergyObjective:
    """Energy as a function of the optimizer coordinates.

    Coordinates are ``(zeta_a, zeta_b, xi_a, xi_b, t_a, t_b)`` with
    ``delta_i = kappa * t_i * sqrt(xi_i)``; in symmetric mode only the first
    four are passed and both deltas are zero.  Degenerate overlap matrices
    evaluate to ``inf``.
    """

    def __init__(self, omega, Omega, parity, gp, kappa, symmetric=False):
        self.omega = float(omega)
        self.Omega = float(Omega)
        self.parity = float(parity)
        self.gp = float(gp)
        self.kappa = float(kappa)
        self.symmetric = bool(symmetric)
        self.nfev = 0

    def decode(self, u):
        za, zb, xa, xb = u[0], u[1], u[2], u[3]
        if self.symmetric:
            return za, zb, xa, xb, 0.0, 0.0
        return (za, zb, xa, xb,
                self.kappa * u[4] * math.sqrt(xa),
                self.kappa * u[5] * math.sqrt(xb))

    def __call__(self, u):
        self.nfev += 1
        za, zb, xa, xb, da, db = self.decode(u)
        if xa <= 0.0 or xb <= 0.0:
            return math.inf
        try:
            return shape_energy(self.omega, self.Omega, self.parity, self.gp,
                                za, zb, xa, xb, da, db)
        except DegenerateOverlapError:
            return math.inf


# ---------------------------------------------------------------------------
# bounded Nelder-Mead (adaptive coefficients, projection onto the box)

def nelder_mead(func, x0, lower, upper, step, xtol=1e-9, ftol=1e-12, maxfev=200000):
    """Minimize ``func`` over a box with the adaptive Nelder-Mead simplex.

    Returns ``(x, fx, nfev, converged)``; convergence requires the simplex
    diameter (max-norm about the best vertex) below ``xtol`` and the spread of
    vertex values below ``ftol``.
    """
    n = len(x0)
    alpha = 1.0
    gamma = 1.0 + 2.0 / n
    rho = 0.75 - 1.0 / (2.0 * n)
    sigma = 1.0 - 1.0 / n
    lo = [float(v) for v in lower]
    hi = [float(v) for v in upper]

    def clip(x):
        return [min(max(x[i], lo[i]), hi[i]) for i in range(n)]

    x0 = clip([float(v) for v in x0])
    sim = [x0]
    for i in range(n):
        y = list(x0)
        h = float(step[i])
        if y[i] + h > hi[i]:
            h = -h
        y[i] += h
        sim.append(clip(y))
    fs = [func(x) for x in sim]
    nfev = n + 1
    converged = False
    while nfev < maxfev:
        order = sorted(range(n + 1), key=lambda k: fs[k])
        sim = [sim[k] for k in order]
        fs = [fs[k] for k in order]
        best = sim[0]
        diam = 0.0
        for k in range(1, n + 1):
            for i in range(n):
                d = abs(sim[k][i] - best[i])
                if d > diam:
                    diam = d
        if diam <= xtol and fs[n] - fs[0] <= ftol:
            converged = True
            break
        cen = [sum(sim[k][i] for k in range(n)) / n for i in range(n)]
        worst = sim[n]
        xr = clip([cen[i] + alpha * (cen[i] - worst[i]) for i in range(n)])
        fr = func(xr)
        nfev += 1
        if fr < fs[0]:
            xe = clip([cen[i] + gamma * (xr[i] - cen[i]) for i in range(n)])
            fe = func(xe)
            nfev += 1
            if fe < fr:
                sim[n], fs[n] = xe, fe
            else:
                sim[n], fs[n] = xr, fr
            continue
        if fr < fs[n - 1]:
            sim[n], fs[n] = xr, fr
            continue
        if fr < fs[n]:
            xc = clip([cen[i] + rho * (xr[i] - cen[i]) for i in range(n)])
            fc = func(xc)
            nfev += 1
            if fc <= fr:
                sim[n], fs[n] = xc, fc
                continue
        else:
            xc = clip([cen[i] + rho * (worst[i] - cen[i]) for i in range(n)])
            fc = func(xc)
            nfev += 1
            if fc < fs[n]:
                sim[n], fs[n] = xc, fc
                continue
        for k in range(1, n + 1):
            sim[k] = clip([best[i] + sigma * (sim[k][i] - best[i]) for i in range(n)])
            fs[k] = func(sim[k])
        nfev += n
    k = min(range(n + 1), key=lambda j: fs[j])
    return list(sim[k]), fs[k], nfev, converged
