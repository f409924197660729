# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_kernels_py`` for the reference implementation."""

from libc.math cimport exp, sqrt, pow, fabs, INFINITY, M_PI

cdef double SQRT2 = sqrt(2.0)
cdef double SQRT_PI = sqrt(M_PI)


#: overlap matrices with 1 - s12^2/(s11 s22) below this are treated as collinear
COLLINEAR_RTOL = 1e-5
cdef double _CRTOL = 1e-5


class DegenerateOverlapError(ValueError):
    """Overlap matrix of the two packets is not positive definite."""


cdef inline double _pref(double xa, double xb) nogil:
    return pow(xa, 0.25) * pow(xb, 0.25)


cdef double _f1(double om, double xa, double xb, double za, double zb, double gp) nogil:
    cdef double s = xa + xb
    cdef double zs = za + zb
    return om * _pref(xa, xb) / (SQRT2 * pow(s, 3.5)) * exp(xa * xb * gp * gp * zs * zs / (-2.0 * s))


cdef double _f2(double om, double xa, double xb, double za, double zb, double da, double gp) nogil:
    cdef double s = xa + xb
    cdef double zs = za + zb
    return om * da * _pref(xa, xb) / (SQRT2 * pow(s, 4.5)) * exp(xa * xb * gp * gp * zs * zs / (-2.0 * s))


cdef double _f3(double xa, double xb, double za, double zb, double gp) nogil:
    cdef double s = xa + xb
    cdef double zd = za - zb
    return SQRT2 * _pref(xa, xb) * exp(-xa * xb * gp * gp * zd * zd / (2.0 * s)) / pow(s, 1.5)


cdef double _f4(double xa, double xb, double za, double zb, double da, double gp) nogil:
    cdef double s = xa + xb
    cdef double zd = za - zb
    return SQRT2 * da * _pref(xa, xb) * exp(-xa * xb * gp * gp * zd * zd / (2.0 * s)) / pow(s, 2.5)


cdef double _h_aa(double om, double xi, double zeta, double delta, double gp) nogil:
    cdef double zm = zeta - 1.0
    return om / (8.0 * xi * xi) * (
        delta * delta * (2.0 * zm * zm * xi * gp * gp + 3.0 * xi * xi + 3.0)
        + 2.0 * xi * (2.0 * zm * zm * xi * gp * gp + xi * xi + 1.0)
        - 8.0 * delta * zm * xi * gp)


cdef double _h_bb(double om, double xi, double zeta, double delta, double gp) nogil:
    cdef double zp = zeta + 1.0
    return om / (8.0 * xi * xi) * (
        delta * delta * (2.0 * zp * zp * xi * gp * gp + 3.0 * xi * xi + 3.0)
        + 2.0 * xi * (2.0 * zp * zp * xi * gp * gp + xi * xi + 1.0)
        + 8.0 * delta * zp * xi * gp)


cdef double _h_ab_truncated(double om, double xa, double xb, double za, double zb,
                          double da, double db, double g) nogil:
    cdef double F1 = _f1(om, xa, xb, za, zb, g)
    cdef double F2 = _f2(om, xa, xb, za, zb, da, g)
    cdef double zs = za + zb
    cdef double zb1 = zb + 1.0
    cdef double g2 = g * g
    cdef double g3 = g2 * g
    cdef double g4 = g2 * g2
    cdef double xb2 = xb * xb
    cdef double xa3 = pow(xa, 3.0)
    cdef double K = za * za * (xb2 - 1.0) + 2.0 * za * (zb * xb2 + 1.0) + zb * zb * xb2 - 1.0
    cdef double t1, t2, t3, t4, t5, t6
    t1 = F1 * (
        xa * xb * (
            xb2 - db * zb1 * zb1 * xb * g3 * zs + db * g * (-3.0 * za + zb + 4.0)
            - zb1 * xb * g2 * (2.0 * za - zb - 3.0) + 2.0)
        + xb2 * (2.0 * db * zb1 * g + zb1 * zb1 * xb * g2 + 1.0))
    t2 = F1 * xa3 * (xb + db * g3 * zs * K - 3.0 * db * xb * g * zs - g2 * K)
    t3 = F1 * xa * xa * (
        2.0 * xb2 + 2.0 * (za - 1.0) * db * zb1 * xb * g3 * zs
        - db * g * (3.0 * za * (xb2 + 1.0) + 3.0 * zb * xb2 + zb - 2.0)
        - xb * g2 * (za * za * (xb2 - 1.0) + 2.0 * za * (zb * xb2 + zb + 2.0)
                     + zb * zb * xb2 - 2.0 * zb - 3.0)
        + 1.0)
    t4 = F2 * db * (
        xb2 * (zb1 * xb * g2 * (2.0 * za + 3.0 * zb + 1.0) + 3.0)
        - xa * xb * (-3.0 * (xb2 + 2.0) + zb1 * zb1 * xb2 * g4 * zs * zs
                     + 3.0 * (za - 1.0) * xb * g2 * (za + 2.0 * zb + 1.0)))
    t5 = F2 * db * xa * xa * (
        6.0 * xb2 + 2.0 * (za - 1.0) * zb1 * xb2 * g4 * zs * zs
        - 3.0 * xb * g2 * (2.0 * za * za * xb2 + 2.0 * za * (2.0 * zb * xb2 + zb + 1.0)
                           + zb * zb * (2.0 * xb2 + 1.0) - 1.0)
        + 3.0)
    t6 = F2 * db * xa3 * (
        3.0 * xb + xb * g4 * zs * zs * K
        - g2 * (za * za * (6.0 * xb2 - 3.0) + 2.0 * za * zb * (6.0 * xb2 - 1.0)
                + 4.0 * za + 6.0 * zb * zb * xb2 + 2.0 * zb - 1.0))
    return t1 + t2 + t3 + t4 + t5 + t6


cdef double _h_ab_delta_a(double om, double xa, double xb, double za, double zb,
                          double da, double g) nogil:
    cdef double zs = za + zb
    cdef double g2 = g * g
    cdef double poly = (
        xb * xb * (-(za + 3.0 * zb + 2.0) - g2 * xb * zs * (zb + 1.0) * (zb + 1.0))
        + xa * xb * (-(3.0 * xb * xb * zs - za + 3.0 * zb + 4.0)
                     + 2.0 * g2 * xb * (za - 1.0) * zs * (zb + 1.0))
        + xa * xa * (-3.0 * xb * xb * zs + 2.0 * za - 2.0
                     + g2 * xb * zs * (xb * zs - za + 1.0) * (xb * zs + za - 1.0)))
    return -da * g * _f1(om, xa, xb, za, zb, g) * poly


cdef double _flip_aa(double xi, double zeta, double delta, double gp) nogil:
    cdef double q = delta * zeta * gp + 1.0
    return exp(-zeta * zeta * xi * gp * gp) / (2.0 * xi) * (2.0 * xi * q * q - delta * delta)


cdef double _flip_bb(double xi, double zeta, double delta, double gp) nogil:
    cdef double q = delta * zeta * gp - 1.0
    return exp(-zeta * zeta * xi * gp * gp) / (2.0 * xi) * (2.0 * xi * q * q - delta * delta)


cdef double _flip_ab(double xa, double xb, double za, double zb, double da, double db, double g) nogil:
    cdef double zd = za - zb
    return _f3(xa, xb, za, zb, g) * (xa + xb + xa * db * g * zd) + _f4(xa, xb, za, zb, da, g) * (
        -xa * db + db * xb * (xa * g * g * zd * zd - 1.0) + xb * g * zd * (xa + xb))


cdef double _overlap(double xi1, double xi2, double c1, double c2, double d1, double d2) nogil:
    cdef double s = xi1 + xi2
    cdef double m = (xi1 * c1 + xi2 * c2) / s
    cdef double e1 = m - c1
    cdef double e2 = m - c2
    cdef double k = exp(-xi1 * xi2 * (c1 - c2) * (c1 - c2) / (2.0 * s))
    return _pref(xi1, xi2) / SQRT_PI * sqrt(2.0 * M_PI / s) * k * (
        (1.0 + d1 * e1) * (1.0 + d2 * e2) + d1 * d2 / s)


cdef void _matrices(double om, double Om, double parity, double gp, double za, double zb,
                    double xa, double xb, double da, double db, double* out) nogil:
    cdef double t = 0.5 * Om * parity
    out[0] = _h_aa(om, xa, za, da, gp) + t * _flip_aa(xa, za, da, gp)
    out[1] = (_h_ab_truncated(om, xa, xb, za, zb, da, db, gp) + _h_ab_delta_a(om, xa, xb, za, zb, da, gp)
              + t * _flip_ab(xa, xb, za, zb, da, db, gp))
    out[2] = _h_bb(om, xb, zb, db, gp) + t * _flip_bb(xb, zb, db, gp)
    out[3] = 1.0 + da * da / (2.0 * xa)
    out[4] = _overlap(xa, xb, -za * gp, zb * gp, da, db)
    out[5] = 1.0 + db * db / (2.0 * xb)


cdef int _lowest(double m11, double m12, double m22, double s11, double s12, double s22,
                 double rtol, double* res) nogil:
    """Fill res = (lam, w1, w2); return 0, or 1 if S is degenerate."""
    cdef double l11, l21, r, l22, c11, u, c12, c22, half, lam
    cdef double a1, a2, b1, b2, v1, v2, nv, w1, w2
    if not (s11 > 0.0 and s22 > 0.0):
        return 1
    l11 = sqrt(s11)
    l21 = s12 / l11
    r = s22 - l21 * l21
    if r <= rtol * s22:
        return 1
    l22 = sqrt(r)
    c11 = m11 / s11
    u = (m12 - l21 * m11 / l11) / l22
    c12 = u / l11
    c22 = (m22 - 2.0 * l21 * m12 / l11 + l21 * l21 * m11 / s11) / r
    half = 0.5 * (c11 - c22)
    lam = 0.5 * (c11 + c22) - sqrt(half * half + c12 * c12)
    a1 = c12
    a2 = lam - c11
    b1 = lam - c22
    b2 = c12
    if a1 * a1 + a2 * a2 >= b1 * b1 + b2 * b2:
        v1 = a1
        v2 = a2
    else:
        v1 = b1
        v2 = b2
    nv = sqrt(v1 * v1 + v2 * v2)
    if nv == 0.0:
        v1 = 1.0
        v2 = 0.0
    else:
        v1 = v1 / nv
        v2 = v2 / nv
    w2 = v2 / l22
    w1 = (v1 - l21 * w2) / l11
    if w1 < 0.0 or (w1 == 0.0 and w2 < 0.0):
        w1 = -w1
        w2 = -w2
    res[0] = lam
    res[1] = w1
    res[2] = w2
    return 0


# ---------------------------------------------------------------------------
# Python-visible wrappers

def coef_f1(double omega, double xi_a, double xi_b, double zeta_a, double zeta_b, double gp):
    return _f1(omega, xi_a, xi_b, zeta_a, zeta_b, gp)


def coef_f2(double omega, double xi_a, double xi_b, double zeta_a, double zeta_b, double delta_a, double gp):
    return _f2(omega, xi_a, xi_b, zeta_a, zeta_b, delta_a, gp)


def coef_f3(double xi_a, double xi_b, double zeta_a, double zeta_b, double gp):
    return _f3(xi_a, xi_b, zeta_a, zeta_b, gp)


def coef_f4(double xi_a, double xi_b, double zeta_a, double zeta_b, double delta_a, double gp):
    return _f4(xi_a, xi_b, zeta_a, zeta_b, delta_a, gp)


def h_aa(double omega, double xi, double zeta, double delta, double gp):
    return _h_aa(omega, xi, zeta, delta, gp)


def h_bb(double omega, double xi, double zeta, double delta, double gp):
    return _h_bb(omega, xi, zeta, delta, gp)


def h_ab_truncated(double omega, double xa, double xb, double za, double zb, double da, double db, double g):
    return _h_ab_truncated(omega, xa, xb, za, zb, da, db, g)


def h_ab_delta_a(double omega, double xa, double xb, double za, double zb, double da, double g):
    return _h_ab_delta_a(omega, xa, xb, za, zb, da, g)


def h_ab(double omega, double xa, double xb, double za, double zb, double da, double db, double g):
    return _h_ab_truncated(omega, xa, xb, za, zb, da, db, g) + _h_ab_delta_a(omega, xa, xb, za, zb, da, g)


def flip_aa(double xi, double zeta, double delta, double gp):
    return _flip_aa(xi, zeta, delta, gp)


def flip_bb(double xi, double zeta, double delta, double gp):
    return _flip_bb(xi, zeta, delta, gp)


def flip_ab(double xa, double xb, double za, double zb, double da, double db, double g):
    return _flip_ab(xa, xb, za, zb, da, db, g)


def overlap(double xi1, double xi2, double c1, double c2, double d1, double d2):
    return _overlap(xi1, xi2, c1, c2, d1, d2)


def energy_matrices(double omega, double Omega, double parity, double gp, double za, double zb,
                    double xa, double xb, double da, double db):
    cdef double out[6]
    _matrices(omega, Omega, parity, gp, za, zb, xa, xb, da, db, out)
    return out[0], out[1], out[2], out[3], out[4], out[5]


def lowest_pair(double m11, double m12, double m22, double s11, double s12, double s22, double rtol=1e-5):
    cdef double res[3]
    if _lowest(m11, m12, m22, s11, s12, s22, rtol, res):
        raise DegenerateOverlapError("packets are numerically collinear")
    return res[0], res[1], res[2]


def shape_energy(double omega, double Omega, double parity, double gp, double za, double zb,
                 double xa, double xb, double da, double db):
    cdef double out[6]
    cdef double res[3]
    _matrices(omega, Omega, parity, gp, za, zb, xa, xb, da, db, out)
    if _lowest(out[0], out[1], out[2], out[3], out[4], out[5], _CRTOL, res):
        raise DegenerateOverlapError("packets are numerically collinear")
    return res[0] - 0.5 * omega * (gp * gp + 1.0)


def shape_energy_weights(double omega, double Omega, double parity, double gp, double za, double zb,
                         double xa, double xb, double da, double db):
    cdef double out[6]
    cdef double res[3]
    _matrices(omega, Omega, parity, gp, za, zb, xa, xb, da, db, out)
    if _lowest(out[0], out[1], out[2], out[3], out[4], out[5], _CRTOL, res):
        raise DegenerateOverlapError("packets are numerically collinear")
    return res[0] - 0.5 * omega * (gp * gp + 1.0), res[1], res[2]


cdef class EnergyObjective:
    """Energy as a function of optimizer coordinates (compiled)."""

    cdef public double omega, Omega, parity, gp, kappa
    cdef public bint symmetric
    cdef public long nfev

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
                self.kappa * u[4] * sqrt(xa),
                self.kappa * u[5] * sqrt(xb))

    cdef double evaluate(self, double* u) nogil:
        cdef double out[6]
        cdef double res[3]
        cdef double da = 0.0
        cdef double db = 0.0
        self.nfev += 1
        if u[2] <= 0.0 or u[3] <= 0.0:
            return INFINITY
        if not self.symmetric:
            da = self.kappa * u[4] * sqrt(u[2])
            db = self.kappa * u[5] * sqrt(u[3])
        _matrices(self.omega, self.Omega, self.parity, self.gp, u[0], u[1], u[2], u[3], da, db, out)
        if _lowest(out[0], out[1], out[2], out[3], out[4], out[5], _CRTOL, res):
            return INFINITY
        return res[0] - 0.5 * self.omega * (self.gp * self.gp + 1.0)

    def __call__(self, u):
        cdef double buf[6]
        cdef int i
        cdef int n = len(u)
        for i in range(n):
            buf[i] = u[i]
        return self.evaluate(buf)


# ---------------------------------------------------------------------------
# bounded adaptive Nelder-Mead

cdef enum:
    NMAX = 8

cdef class _PyFunc:
    cdef object f
    cdef int n

    def __init__(self, f, n):
        self.f = f
        self.n = n

    cdef double call(self, double* x):
        return float(self.f([x[i] for i in range(self.n)]))


cdef inline void _clip(double* x, double* lo, double* hi, int n) nogil:
    cdef int i
    for i in range(n):
        if x[i] < lo[i]:
            x[i] = lo[i]
        if x[i] > hi[i]:
            x[i] = hi[i]


cdef double _call(EnergyObjective fast, _PyFunc slow, double* x):
    if fast is not None:
        return fast.evaluate(x)
    return slow.call(x)


def nelder_mead(func, x0, lower, upper, step, double xtol=1e-9, double ftol=1e-12, long maxfev=200000):
    """Minimize ``func`` over a box with the adaptive Nelder-Mead simplex.

    Same algorithm and return value as the pure-Python version.
    """
    cdef int n = len(x0)
    if n > NMAX:
        raise ValueError("at most %d coordinates" % NMAX)
    cdef double sim[NMAX + 1][NMAX]
    cdef double fs[NMAX + 1]
    cdef double lo[NMAX]
    cdef double hi[NMAX]
    cdef double cen[NMAX]
    cdef double xr[NMAX]
    cdef double xe[NMAX]
    cdef double xc[NMAX]
    cdef double tmp[NMAX]
    cdef double ftmp, fr, fe, fc, h, d, diam
    cdef int i, k, j
    cdef long nfev
    cdef bint converged = False
    cdef double alpha = 1.0
    cdef double gamma = 1.0 + 2.0 / n
    cdef double rho = 0.75 - 1.0 / (2.0 * n)
    cdef double sigma = 1.0 - 1.0 / n
    cdef EnergyObjective fast = func if isinstance(func, EnergyObjective) else None
    cdef _PyFunc slow = None if fast is not None else _PyFunc(func, n)

    for i in range(n):
        lo[i] = lower[i]
        hi[i] = upper[i]
        sim[0][i] = x0[i]
    _clip(sim[0], lo, hi, n)
    for k in range(1, n + 1):
        for i in range(n):
            sim[k][i] = sim[0][i]
        h = step[k - 1]
        if sim[k][k - 1] + h > hi[k - 1]:
            h = -h
        sim[k][k - 1] += h
        _clip(sim[k], lo, hi, n)
    for k in range(n + 1):
        fs[k] = _call(fast, slow, sim[k])
    nfev = n + 1

    while nfev < maxfev:
        # stable insertion sort by value
        for k in range(1, n + 1):
            ftmp = fs[k]
            for i in range(n):
                tmp[i] = sim[k][i]
            j = k - 1
            while j >= 0 and fs[j] > ftmp:
                fs[j + 1] = fs[j]
                for i in range(n):
                    sim[j + 1][i] = sim[j][i]
                j -= 1
            fs[j + 1] = ftmp
            for i in range(n):
                sim[j + 1][i] = tmp[i]
        diam = 0.0
        for k in range(1, n + 1):
            for i in range(n):
                d = fabs(sim[k][i] - sim[0][i])
                if d > diam:
                    diam = d
        if diam <= xtol and fs[n] - fs[0] <= ftol:
            converged = True
            break
        for i in range(n):
            cen[i] = 0.0
            for k in range(n):
                cen[i] += sim[k][i]
            cen[i] /= n
        for i in range(n):
            xr[i] = cen[i] + alpha * (cen[i] - sim[n][i])
        _clip(xr, lo, hi, n)
        fr = _call(fast, slow, xr)
        nfev += 1
        if fr < fs[0]:
            for i in range(n):
                xe[i] = cen[i] + gamma * (xr[i] - cen[i])
            _clip(xe, lo, hi, n)
            fe = _call(fast, slow, xe)
            nfev += 1
            if fe < fr:
                for i in range(n):
                    sim[n][i] = xe[i]
                fs[n] = fe
            else:
                for i in range(n):
                    sim[n][i] = xr[i]
                fs[n] = fr
            continue
        if fr < fs[n - 1]:
            for i in range(n):
                sim[n][i] = xr[i]
            fs[n] = fr
            continue
        if fr < fs[n]:
            for i in range(n):
                xc[i] = cen[i] + rho * (xr[i] - cen[i])
            _clip(xc, lo, hi, n)
            fc = _call(fast, slow, xc)
            nfev += 1
            if fc <= fr:
                for i in range(n):
                    sim[n][i] = xc[i]
                fs[n] = fc
                continue
        else:
            for i in range(n):
                xc[i] = cen[i] + rho * (sim[n][i] - cen[i])
            _clip(xc, lo, hi, n)
            fc = _call(fast, slow, xc)
            nfev += 1
            if fc < fs[n]:
                for i in range(n):
                    sim[n][i] = xc[i]
                fs[n] = fc
                continue
        for k in range(1, n + 1):
            for i in range(n):
                sim[k][i] = sim[0][i] + sigma * (sim[k][i] - sim[0][i])
            _clip(sim[k], lo, hi, n)
            fs[k] = _call(fast, slow, sim[k])
        nfev += n

    k = 0
    for j in range(1, n + 1):
        if fs[j] < fs[k]:
            k = j
    return [sim[k][i] for i in range(n)], fs[k], nfev, bool(converged)
