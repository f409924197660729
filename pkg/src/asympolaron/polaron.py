"""Asymmetric polaron trial state and its Gaussian matrix elements.

The spin-up component of the trial state is ``psi(x) = alpha phi_a(x) + beta
phi_b(x)`` with packets

    phi_i(x) = (1 + delta_i y_i) (xi_i/pi)^(1/4) exp(-xi_i y_i^2 / 2),

``y_a = x + zeta_a g'`` (polaron, sitting in the spin-up well) and
``y_b = x - zeta_b g'`` (antipolaron).  The spin-down component follows from
parity, ``psi_-(x) = P psi(-x)``.  Weights are normalized so that
``<psi|psi> = 1``; the full spinor carries an extra ``1/sqrt(2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .model import ModelParams, Parity
from .oscillator import QuadratureGrid, gaussian, inner


class Packet(enum.Enum):
    POLARON = "a"
    ANTIPOLARON = "b"

    @classmethod
    def parse(cls, value) -> "Packet":
        if isinstance(value, Packet):
            return value
        key = str(value).lower()
        if key in ("a", "alpha", "polaron"):
            return cls.POLARON
        if key in ("b", "beta", "antipolaron"):
            return cls.ANTIPOLARON
        raise ValueError(f"unknown packet {value!r}")


@dataclass(frozen=True)
class PolaronShape:
    zeta_a: float
    zeta_b: float
    xi_a: float
    xi_b: float
    delta_a: float = 0.0
    delta_b: float = 0.0

    def __post_init__(self):
        if not (self.xi_a > 0.0 and self.xi_b > 0.0):
            raise ValueError("xi_a and xi_b must be positive")

    FIELDS = ("zeta_a", "zeta_b", "xi_a", "xi_b", "delta_a", "delta_b")

    def as_tuple(self):
        return (self.zeta_a, self.zeta_b, self.xi_a, self.xi_b, self.delta_a, self.delta_b)

    @classmethod
    def from_sequence(cls, values):
        return cls(*[float(v) for v in values])

    def symmetric(self) -> "PolaronShape":
        return replace(self, delta_a=0.0, delta_b=0.0)

    def packet(self, which: Packet):
        """``(zeta, xi, delta)`` of one packet."""
        if Packet.parse(which) is Packet.POLARON:
            return self.zeta_a, self.xi_a, self.delta_a
        return self.zeta_b, self.xi_b, self.delta_b


@dataclass(frozen=True)
class PolaronWeights:
    alpha: float
    beta: float


def packet_center(which, shape: PolaronShape, gp: float) -> float:
    """Position of the packet center: ``-zeta_a g'`` or ``+zeta_b g'``."""
    if Packet.parse(which) is Packet.POLARON:
        return -shape.zeta_a * gp
    return shape.zeta_b * gp


def eval_packet(which, shape: PolaronShape, params: ModelParams, x):
    """Amplitude of the polaron or antipolaron packet at ``x``."""
    which = Packet.parse(which)
    _, xi, delta = shape.packet(which)
    y = np.asarray(x, dtype=float) - packet_center(which, shape, params.gprime)
    return (1.0 + delta * y) * gaussian(xi, y)


def packet_norm2(xi: float, delta: float) -> float:
    """``<phi|phi>`` of a single packet."""
    return 1.0 + delta * delta / (2.0 * xi)


@dataclass(frozen=True)
class TrialState:
    shape: PolaronShape
    weights: PolaronWeights
    params: ModelParams
    parity: Parity

    def psi_plus(self, x):
        return (self.weights.alpha * eval_packet(Packet.POLARON, self.shape, self.params, x)
                + self.weights.beta * eval_packet(Packet.ANTIPOLARON, self.shape, self.params, x))

    def psi_minus(self, x):
        x = np.asarray(x, dtype=float)
        return int(self.parity) * self.psi_plus(-x)

    def psi_plus_dd(self, x):
        """Analytic second derivative of ``psi_plus``."""
        out = 0.0
        for which, w in ((Packet.POLARON, self.weights.alpha), (Packet.ANTIPOLARON, self.weights.beta)):
            _, xi, d = self.shape.packet(which)
            y = np.asarray(x, dtype=float) - packet_center(which, self.shape, self.params.gprime)
            out = out + w * (-2.0 * d * xi * y + (1.0 + d * y) * (xi * xi * y * y - xi)) * gaussian(xi, y)
        return out

    def norm2(self) -> float:
        """``<psi|psi>`` from closed forms (``+2 alpha beta`` cross term)."""
        a, b = self.weights.alpha, self.weights.beta
        s = self.shape
        return (a * a * packet_norm2(s.xi_a, s.delta_a) + b * b * packet_norm2(s.xi_b, s.delta_b)
                + 2.0 * a * b * overlap_same("a", "b", s, self.params))


# ---------------------------------------------------------------------------
# closed-form matrix elements

def overlap_flip(a, b, shape: PolaronShape, params: ModelParams) -> float:
    """``<phi_a | phi_b(-x)>``; symmetric in its packet arguments."""
    a, b = Packet.parse(a), Packet.parse(b)
    gp = params.gprime
    s = shape
    if a is b:
        if a is Packet.POLARON:
            return kernels.flip_aa(s.xi_a, s.zeta_a, s.delta_a, gp)
        return kernels.flip_bb(s.xi_b, s.zeta_b, s.delta_b, gp)
    return kernels.flip_ab(s.xi_a, s.xi_b, s.zeta_a, s.zeta_b, s.delta_a, s.delta_b, gp)


def overlap_same(a, b, shape: PolaronShape, params: ModelParams) -> float:
    """``<phi_a | phi_b>`` without space inversion."""
    a, b = Packet.parse(a), Packet.parse(b)
    gp = params.gprime
    za, xa, da = shape.packet(a)
    zb, xb, db = shape.packet(b)
    return kernels.overlap(xa, xb, packet_center(a, shape, gp), packet_center(b, shape, gp), da, db)


def hplus_element(a, b, shape: PolaronShape, params: ModelParams, truncated: bool = False) -> float:
    """``<phi_a | h+ | phi_b>`` with ``h+ = omega (p^2 + (x + g')^2) / 2``.

    With ``truncated=True`` the inter-packet element omits the terms linear in
    ``delta_a`` alone; kept for comparison, it disagrees with quadrature.
    """
    a, b = Packet.parse(a), Packet.parse(b)
    om, gp = params.omega, params.gprime
    s = shape
    if a is b:
        if a is Packet.POLARON:
            return kernels.h_aa(om, s.xi_a, s.zeta_a, s.delta_a, gp)
        return kernels.h_bb(om, s.xi_b, s.zeta_b, s.delta_b, gp)
    f = kernels.h_ab_truncated if truncated else kernels.h_ab
    return f(om, s.xi_a, s.xi_b, s.zeta_a, s.zeta_b, s.delta_a, s.delta_b, gp)


def coefficients(shape: PolaronShape, params: ModelParams):
    """The prefactors ``(f1, f2, f3, f4)`` of the inter-packet elements."""
    s, om, gp = shape, params.omega, params.gprime
    return (kernels.coef_f1(om, s.xi_a, s.xi_b, s.zeta_a, s.zeta_b, gp),
            kernels.coef_f2(om, s.xi_a, s.xi_b, s.zeta_a, s.zeta_b, s.delta_a, gp),
            kernels.coef_f3(s.xi_a, s.xi_b, s.zeta_a, s.zeta_b, gp),
            kernels.coef_f4(s.xi_a, s.xi_b, s.zeta_a, s.zeta_b, s.delta_a, gp))


# ---------------------------------------------------------------------------
# geometry

def peak_offset(xi: float, delta: float) -> float:
    """Shift of the packet maximum from its center caused by ``delta``.

    Written in the rationalized form so that ``delta -> 0`` is exact.
    """
    rx = math.sqrt(xi)
    return 2.0 * delta / (rx * (math.sqrt(xi + 4.0 * delta * delta) + rx))


def peak_position(which, shape: PolaronShape, params: ModelParams):
    """Peak position ``x_p`` and effective factor ``zeta_p = zeta + zeta_delta``.

    ``x_p = eta zeta g' + offset`` with ``eta = -1`` for the polaron and
    ``+1`` for the antipolaron; ``zeta_delta = eta offset / g'`` (``nan`` at
    ``g' = 0``).
    """
    which = Packet.parse(which)
    zeta, xi, delta = shape.packet(which)
    gp = params.gprime
    eta = -1.0 if which is Packet.POLARON else 1.0
    off = peak_offset(xi, delta)
    xp = eta * zeta * gp + off
    zeta_delta = eta * off / gp if gp > 0.0 else math.nan
    return xp, zeta + zeta_delta


# ---------------------------------------------------------------------------
# observables

@dataclass(frozen=True)
class Observables:
    photon_number: float
    sigma_x: float
    coupling_corr: float


def observables(state: TrialState, grid: QuadratureGrid) -> Observables:
    """Photon number, ``<sigma_x>`` and ``<sigma_z (a^+ + a)>`` by quadrature."""
    x = grid.nodes
    psi = state.psi_plus(x)
    n = inner(psi, psi, grid)
    x2 = inner(psi, x * x * psi, grid)
    p2 = -inner(psi, state.psi_plus_dd(x), grid)
    photon = 0.5 * (x2 + p2 - n) / n
    sx = int(state.parity) * inner(psi, state.psi_plus(-x), grid) / n
    cc = math.sqrt(2.0) * inner(psi, x * psi, grid) / n
    return Observables(photon_number=photon, sigma_x=sx, coupling_corr=cc)


def induced_potential(state: TrialState, x, component: str = "+", guard: float = 1e-8):
    """Induced potential ``(Omega/omega) psi_mp / psi_pm``.

    Returns ``(values, valid)``; entries where ``|psi_pm|`` falls below
    ``guard * max|psi_pm|`` are ``nan`` and flagged invalid.  The maximum is
    taken over the supplied points.
    """
    x = np.asarray(x, dtype=float)
    if component == "+":
        num, den = state.psi_minus(x), state.psi_plus(x)
    elif component == "-":
        num, den = state.psi_plus(x), state.psi_minus(x)
    else:
        raise ValueError("component must be '+' or '-'")
    valid = np.abs(den) >= guard * np.max(np.abs(den))
    out = np.full(x.shape, np.nan)
    out[valid] = state.params.Omega / state.params.omega * num[valid] / den[valid]
    return out, valid


@dataclass(frozen=True)
class ChannelEnergies:
    omega_aa: float
    omega_bb: float
    omega_ab: float

    @property
    def total(self) -> float:
        return self.omega_aa + self.omega_bb + 2.0 * self.omega_ab


def channel_energies(state: TrialState) -> ChannelEnergies:
    """Tunneling energy split into same-side and cross channels."""
    t = 0.5 * state.params.Omega * int(state.parity)
    a, b = state.weights.alpha, state.weights.beta
    s, p = state.shape, state.params
    return ChannelEnergies(
        omega_aa=t * a * a * overlap_flip("a", "a", s, p),
        omega_bb=t * b * b * overlap_flip("b", "b", s, p),
        omega_ab=t * a * b * overlap_flip("a", "b", s, p),
    )


# ---------------------------------------------------------------------------
# packet derivatives (used by the QFI decomposition)

def packet_partials(which, shape: PolaronShape, params: ModelParams, x):
    """Partial derivatives of a packet w.r.t. its center, ``xi`` and ``delta``."""
    which = Packet.parse(which)
    _, xi, d = shape.packet(which)
    y = np.asarray(x, dtype=float) - packet_center(which, shape, params.gprime)
    g = gaussian(xi, y)
    d_center = (-d + xi * y * (1.0 + d * y)) * g
    d_xi = (1.0 + d * y) * (0.25 / xi - 0.5 * y * y) * g
    d_delta = y * g
    return d_center, d_xi, d_delta
