"""Quantum Fisher information of the variational state and its decomposition.

The spin-up component is ``psi = sum_a c_a phi_a`` and the spin-down one is
its parity image.  Differentiating with respect to ``g`` splits ``psi'`` into
four resources per packet: displacement ``x`` (the packet center), frequency
renormalization ``xi``, asymmetry ``delta`` and weight ``rho``:

    D_x[a]   = c_a  dphi_a/dcenter  dcenter_a/dg
    D_xi[a]  = c_a  dphi_a/dxi      dxi_a/dg
    D_d[a]   = c_a  dphi_a/ddelta   ddelta_a/dg
    D_rho[a] = dc_a/dg  phi_a

With the spinor ``Psi = (psi_+ |up> + psi_- |down>) / sqrt(2)`` the QFI is
``4 <Psi'|Psi'> = 2 sum_sigma ||sum_{r,a} D_r[a]||^2``.  Diagonal components
collect ``<D_r|D_r>`` and cross components ``<D_r|D_s> + <D_s|D_r>`` over all
packet pairs, so the ten components add up to the total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .model import ModelParams, gc0
from .oscillator import QuadratureGrid
from .polaron import Packet, PolaronShape, packet_center, packet_partials, eval_packet
from .variational import (OptimizerSettings, ScanResult, VariationalResult, grid_for, optimize)

PARAM_NAMES = ("zeta_a", "zeta_b", "xi_a", "xi_b", "delta_a", "delta_b", "alpha", "beta")
RESOURCES = ("x", "xi", "d", "rho")
COMPONENTS = ("xx", "xixi", "dd", "rr", "xxi", "xrho", "xd", "rhoxi", "rhod", "xid")
QFI_COLUMNS = ("g", "g_over_gc0") + COMPONENTS + ("total", "total_oracle")


class PeakWindowError(ValueError):
    """The maximum of a sampled curve lies on the window boundary."""


@dataclass
class QfiBreakdown:
    g: float
    xx: float
    xixi: float
    dd: float
    rr: float
    xxi: float
    xrho: float
    xd: float
    rhoxi: float
    rhod: float
    xid: float
    total: float
    total_oracle: float = math.nan

    def components(self) -> dict:
        return {k: getattr(self, k) for k in COMPONENTS}

    def component_sum(self) -> float:
        return float(sum(self.components().values()))


@dataclass
class ParamDerivatives:
    g: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    valid: np.ndarray
    method: str = "central"


def result_vector(res: VariationalResult) -> np.ndarray:
    return np.array(res.shape.as_tuple() + (res.weights.alpha, res.weights.beta))


def _three_point(gm, g0, gp_, fm, f0, fp):
    """Derivative at ``g0`` from samples at unequal spacing."""
    hm = g0 - gm
    hp = gp_ - g0
    return (-hp / (hm * (hm + hp))) * fm + ((hp - hm) / (hm * hp)) * f0 + (hm / (hp * (hm + hp))) * fp


def param_derivatives(scan: ScanResult) -> ParamDerivatives:
    """Central differences of the optimized parameters over the scan grid.

    End rows, rows whose stencil crosses a flagged jump and rows with an
    unconverged neighbour are marked invalid.
    """
    n = len(scan.rows)
    g = scan.g
    vals = np.array([result_vector(r) for r in scan.rows]) if n else np.zeros((0, 8))
    der = np.full_like(vals, np.nan)
    valid = np.zeros(n, dtype=bool)
    jumps = scan.jump_flags()
    for i in range(1, n - 1):
        if jumps[i] or jumps[i + 1]:
            continue
        if not all(scan.rows[k].converged for k in (i - 1, i, i + 1)):
            continue
        der[i] = _three_point(g[i - 1], g[i], g[i + 1], vals[i - 1], vals[i], vals[i + 1])
        valid[i] = True
    return ParamDerivatives(g=g, values=vals, derivs=der, valid=valid)


# ---------------------------------------------------------------------------
# decomposition

def _packet_table(shape: PolaronShape, weights, params: ModelParams, dparams, x):
    """Resource functions ``D_r[a]`` of the spin-up component, per packet."""
    gp = params.gprime
    dgp = math.sqrt(2.0) / params.omega
    dz_a, dz_b, dxi_a, dxi_b, dd_a, dd_b, dal, dbe = dparams
    rows = []
    for which, c, dc, dz, dxi, dd in ((Packet.POLARON, weights[0], dal, dz_a, dxi_a, dd_a),
                                      (Packet.ANTIPOLARON, weights[1], dbe, dz_b, dxi_b, dd_b)):
        zeta = shape.zeta_a if which is Packet.POLARON else shape.zeta_b
        eta = -1.0 if which is Packet.POLARON else 1.0
        dcenter = eta * (dz * gp + zeta * dgp)
        p_c, p_xi, p_d = packet_partials(which, shape, params, x)
        phi = eval_packet(which, shape, params, x)
        rows.append({"x": c * p_c * dcenter, "xi": c * p_xi * dxi, "d": c * p_d * dd,
                     "rho": dc * phi})
    return rows


def _reflect(table, parity: int):
    """Resource functions of the spin-down component, ``P f(-x)``."""
    return [{k: parity * v[::-1] for k, v in row.items()} for row in table]


def _is_symmetric_grid(x) -> bool:
    return np.allclose(x, -x[::-1], rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(x)))))


def qfi_decompose(res: VariationalResult, dparams, grid: QuadratureGrid | None = None,
                  literal: bool = False, total_oracle: float = math.nan) -> QfiBreakdown:
    """Ten-component QFI decomposition at the state ``res``.

    ``dparams`` are the ``g``-derivatives of ``(zeta_a, zeta_b, xi_a, xi_b,
    delta_a, delta_b, alpha, beta)``.  With ``literal=True`` the cross
    components skip same-packet pairs and the ``delta``-``rho`` block uses
    displacement factors; that variant does not
    satisfy the sum rule and exists for comparison only.
    """
    grid = grid or grid_for(res.params, res.shape)
    x = grid.nodes
    if not _is_symmetric_grid(x):
        raise ValueError("decomposition needs a grid symmetric about the origin")
    w = grid.weights
    up = _packet_table(res.shape, (res.weights.alpha, res.weights.beta), res.params,
                       np.asarray(dparams, float), x)
    spins = (up, _reflect(up, int(res.parity)))

    def ip(f, h):
        return float(np.sum(w * f * h))

    def block(r, s, same_packet=True):
        tot = 0.0
        for tab in spins:
            for a in range(len(tab)):
                for b in range(len(tab)):
                    if not same_packet and a == b:
                        continue
                    tot += ip(tab[a][r], tab[b][s])
        return 2.0 * tot

    def cross(r, s):
        same = not literal
        return block(r, s, same) + block(s, r, same)

    out = {
        "xx": block("x", "x"), "xixi": block("xi", "xi"), "dd": block("d", "d"),
        "rr": block("rho", "rho"), "xxi": cross("x", "xi"), "xrho": cross("x", "rho"),
        "xd": cross("x", "d"), "rhoxi": cross("rho", "xi"),
        "rhod": cross("x", "rho") if literal else cross("rho", "d"),
        "xid": cross("xi", "d"),
    }
    # total from the full derivative, independent of the bookkeeping above
    total = 0.0
    for tab in spins:
        f = sum(tab[a][r] for a in range(len(tab)) for r in RESOURCES)
        total += ip(f, f)
    return QfiBreakdown(g=res.params.g, total=2.0 * total, total_oracle=total_oracle, **out)


def whole_function_qfi(minus: VariationalResult, plus: VariationalResult, grid: QuadratureGrid) -> float:
    """``4 <Psi'|Psi'>`` from central differences of the sampled trial state."""
    h2 = plus.params.g - minus.params.g
    x = grid.nodes
    d_up = (plus.state.psi_plus(x) - minus.state.psi_plus(x)) / h2
    d_dn = (plus.state.psi_minus(x) - minus.state.psi_minus(x)) / h2
    return float(2.0 * np.sum(grid.weights * (d_up * d_up + d_dn * d_dn)))


@dataclass
class Stencil:
    minus: VariationalResult
    center: VariationalResult
    plus: VariationalResult

    @property
    def h(self) -> float:
        return 0.5 * (self.plus.params.g - self.minus.params.g)

    def derivatives(self) -> np.ndarray:
        return (result_vector(self.plus) - result_vector(self.minus)) / (2.0 * self.h)


def local_stencil(row: VariationalResult, h: float, settings: OptimizerSettings | None = None) -> Stencil:
    """Re-optimize at ``g +- h`` warm-started from ``row``."""
    settings = settings or OptimizerSettings()
    warm = OptimizerSettings(**{**settings.__dict__, "starts": 0})
    p = row.params
    if p.g - h < 0.0:
        raise ValueError("stencil reaches negative coupling")
    lo = optimize(p.with_g(p.g - h), row.parity, row.mode, seed=row.shape, settings=warm)
    hi = optimize(p.with_g(p.g + h), row.parity, row.mode, seed=row.shape, settings=warm)
    return Stencil(lo, row, hi)


def qfi_at(row: VariationalResult, h: float, settings: OptimizerSettings | None = None,
           literal: bool = False) -> QfiBreakdown:
    """Decomposition at a scan row with a local stencil of half-width ``h``
    plus the whole-function oracle on the same neighbour states."""
    st = local_stencil(row, h, settings)
    grid = grid_for(row.params, row.shape)
    oracle = whole_function_qfi(st.minus, st.plus, grid)
    return qfi_decompose(row, st.derivatives(), grid, literal=literal, total_oracle=oracle)


def qfi_sweep(scan: ScanResult, h_rel: float = 1e-4, settings: OptimizerSettings | None = None):
    """Decompositions for every row of a scan (``h = h_rel * g_c0``)."""
    h = h_rel * gc0(scan.omega, scan.Omega)
    return [qfi_at(r, h, settings) for r in scan.rows]


def qfi_rows(breakdowns, omega: float, Omega: float = 1.0):
    g0 = gc0(omega, Omega)
    for b in breakdowns:
        yield (b.g, b.g / g0) + tuple(getattr(b, k) for k in COMPONENTS) + (b.total, b.total_oracle)


# ---------------------------------------------------------------------------
# peak extraction

def parabola_vertex(x, y):
    """Vertex of the parabola through three points."""
    (x0, x1, x2), (y0, y1, y2) = x, y
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
    c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / den
    xv = -b / (2.0 * a)
    return xv, c - b * b / (4.0 * a)


def find_qfi_peak(g, F):
    """Peak position and height by a parabola through the top three samples."""
    g = np.asarray(g, float)
    F = np.asarray(F, float)
    k = int(np.nanargmax(F))
    if k == 0 or k == F.size - 1:
        raise PeakWindowError("maximum on the boundary of the scanned window")
    return parabola_vertex(g[k - 1:k + 2], F[k - 1:k + 2])
