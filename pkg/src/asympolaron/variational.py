"""Variational energy, shape optimization and continuation scans in ``g``.

The two weights are eliminated exactly through the 2x2 generalized
eigenproblem ``M w = lambda S w``; the remaining shape parameters are
optimized with a bounded Nelder-Mead simplex using internal coordinates
``u = (zeta_a, zeta_b, xi_a, xi_b, t_a, t_b)`` where
``delta_i = kappa t_i sqrt(xi_i)`` and ``|t_i| <= 1``.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import DegenerateOverlapError
from .model import ModelParams, Parity, gc
from .oscillator import default_half_width, make_grid
from .polaron import Observables, PolaronShape, PolaronWeights, TrialState, observables, packet_center

log = logging.getLogger(__name__)

ZETA_BOUNDS = (-0.5, 2.0)
XI_BOUNDS = (0.05, 5.0)
#: default positivity guard, ``|delta| <= KAPPA sqrt(xi)``
KAPPA = 0.95
JUMP_THRESHOLD = 0.2


class Mode(enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class OptimizerSettings:
    starts: int = 8
    max_evals: int = 200_000
    xtol: float = 1e-9
    ftol: float = 1e-12
    max_restarts: int = 20
    kappa: float = KAPPA
    rng_seed: int = 0
    grid_points: int = 2001


@dataclass
class VariationalResult:
    shape: PolaronShape
    weights: PolaronWeights
    energy: float
    parity: Parity
    params: ModelParams
    mode: Mode
    observables: Observables
    converged: bool
    n_evals: int
    restarts_used: int
    guard_active: bool = False
    discarded_energy: float = math.nan

    @property
    def state(self) -> TrialState:
        return TrialState(self.shape, self.weights, self.params, self.parity)

    def to_dict(self) -> dict:
        d = {"omega": self.params.omega, "Omega": self.params.Omega, "g": self.params.g,
             "parity": int(self.parity), "mode": self.mode.value, "energy": self.energy,
             "alpha": self.weights.alpha, "beta": self.weights.beta}
        d.update(zip(PolaronShape.FIELDS, self.shape.as_tuple()))
        d.update(photon=self.observables.photon_number, sigma_x=self.observables.sigma_x,
                 coupling_corr=self.observables.coupling_corr, converged=self.converged,
                 n_evals=self.n_evals, restarts_used=self.restarts_used,
                 guard_active=self.guard_active)
        return d


def energy(shape: PolaronShape, params: ModelParams, parity) -> tuple[float, PolaronWeights]:
    """Variational energy of ``shape`` with optimal weights.

    Raises :class:`DegenerateOverlapError` when the two packets are
    numerically collinear.
    """
    p = Parity.parse(parity)
    e, a, b = kernels.shape_energy_weights(
        params.omega, params.Omega, float(p), params.gprime, shape.zeta_a, shape.zeta_b,
        shape.xi_a, shape.xi_b, shape.delta_a, shape.delta_b)
    return e, PolaronWeights(a, b)


@functools.lru_cache(maxsize=64)
def _grid(npoints: int, half_width: float):
    return make_grid(npoints, half_width)


def grid_for(params: ModelParams, shape: PolaronShape | None = None, npoints: int = 2001):
    """Default quadrature grid for a state at ``params``; checks support."""
    gp = params.gprime
    grid = _grid(npoints, default_half_width(gp))
    if shape is not None:
        grid.check_support([packet_center("a", shape, gp), packet_center("b", shape, gp)],
                           [shape.xi_a, shape.xi_b])
    return grid


# ---------------------------------------------------------------------------
# optimizer

def _bounds(symmetric: bool):
    lo = [ZETA_BOUNDS[0], ZETA_BOUNDS[0], XI_BOUNDS[0], XI_BOUNDS[0]]
    hi = [ZETA_BOUNDS[1], ZETA_BOUNDS[1], XI_BOUNDS[1], XI_BOUNDS[1]]
    if not symmetric:
        lo += [-1.0, -1.0]
        hi += [1.0, 1.0]
    return lo, hi


def _steps(symmetric: bool):
    s = [0.1, 0.1, 0.1, 0.1]
    return s if symmetric else s + [0.2, 0.2]


def _encode(shape: PolaronShape, symmetric: bool, kappa: float):
    u = [shape.zeta_a, shape.zeta_b, shape.xi_a, shape.xi_b]
    if not symmetric:
        u += [shape.delta_a / (kappa * math.sqrt(shape.xi_a)),
              shape.delta_b / (kappa * math.sqrt(shape.xi_b))]
    lo, hi = _bounds(symmetric)
    return [min(max(v, l), h) for v, l, h in zip(u, lo, hi)]


def _decode(u, symmetric: bool, kappa: float) -> PolaronShape:
    if symmetric:
        return PolaronShape(u[0], u[1], u[2], u[3], 0.0, 0.0)
    return PolaronShape(u[0], u[1], u[2], u[3],
                        kappa * u[4] * math.sqrt(u[2]), kappa * u[5] * math.sqrt(u[3]))


def _minimize(obj, u0, symmetric, settings: OptimizerSettings):
    """Simplex runs restarted from the incumbent until the energy stalls."""
    lo, hi = _bounds(symmetric)
    step = _steps(symmetric)
    u, f, nfev, conv = kernels.nelder_mead(obj, u0, lo, hi, step, settings.xtol, settings.ftol,
                                           settings.max_evals)
    restarts = 0
    stalled = False
    while restarts < settings.max_restarts:
        u2, f2, n2, conv2 = kernels.nelder_mead(obj, u, lo, hi, step, settings.xtol, settings.ftol,
                                                settings.max_evals)
        nfev += n2
        restarts += 1
        improvement = f - f2
        if f2 < f:
            u, f = u2, f2
        conv = conv2
        if improvement <= settings.ftol:
            stalled = True
            break
    return u, f, nfev, bool(conv and stalled), restarts


def _start_points(params, seed, sym_best, symmetric, rng):
    """Candidate initial shapes for the multi-start."""
    pts = []
    if sym_best is not None:
        pts.append(sym_best)
    pts.append(PolaronShape(0.05, 0.05, 1.0, 0.6))
    pts.append(PolaronShape(1.0, 1.0, 1.0, 1.0))
    base = sym_best or PolaronShape(0.9, 0.6, 0.8, 0.8)
    if not symmetric:
        for sa, sb in ((1, -1), (-1, 1), (1, 1), (-1, -1)):
            pts.append(PolaronShape(base.zeta_a, base.zeta_b, base.xi_a, base.xi_b,
                                    0.2 * sa * math.sqrt(base.xi_a), 0.2 * sb * math.sqrt(base.xi_b)))
    else:
        pts.append(PolaronShape(0.5, 0.5, 0.7, 1.3))
        pts.append(PolaronShape(1.0, 0.2, 0.6, 0.9))
    jit = rng.uniform(-1.0, 1.0, 6)
    pts.append(PolaronShape(
        min(max(base.zeta_a + 0.2 * jit[0], ZETA_BOUNDS[0]), ZETA_BOUNDS[1]),
        min(max(base.zeta_b + 0.2 * jit[1], ZETA_BOUNDS[0]), ZETA_BOUNDS[1]),
        min(max(base.xi_a * (1.0 + 0.2 * jit[2]), XI_BOUNDS[0]), XI_BOUNDS[1]),
        min(max(base.xi_b * (1.0 + 0.2 * jit[3]), XI_BOUNDS[0]), XI_BOUNDS[1]),
        0.0 if symmetric else 0.3 * jit[4] * math.sqrt(base.xi_a),
        0.0 if symmetric else 0.3 * jit[5] * math.sqrt(base.xi_b)))
    return pts


def optimize(params: ModelParams, parity, mode="asymmetric", seed: PolaronShape | None = None,
             settings: OptimizerSettings | None = None) -> VariationalResult:
    """Minimize the variational energy over the packet shapes.

    Multi-start: the optional ``seed``, the symmetric-mode optimum (for the
    asymmetric mode), ``zeta`` near 0 and near 1, the four sign patterns of
    the asymmetry factors and one seeded random jitter.  ``settings.starts``
    caps the number of these; a ``seed`` is always tried in addition.
    """
    settings = settings or OptimizerSettings()
    parity = Parity.parse(parity)
    mode = Mode.parse(mode)
    symmetric = mode is Mode.SYMMETRIC
    rng = np.random.default_rng(settings.rng_seed)
    kappa = settings.kappa
    total_evals = 0
    sym_best = None
    if not symmetric and settings.starts > 0:
        sres = optimize(params, parity, Mode.SYMMETRIC,
                        seed=seed.symmetric() if seed is not None else None, settings=settings)
        sym_best = sres.shape
        total_evals += sres.n_evals
    obj = kernels.EnergyObjective(params.omega, params.Omega, float(parity), params.gprime,
                                  kappa, symmetric)
    starts = _start_points(params, seed, sym_best, symmetric, rng)[:max(0, settings.starts)]
    if seed is not None:
        starts.insert(0, seed)
    elif not starts:
        raise ValueError("at least one start is required")
    runs = []
    for s in starts:
        u0 = _encode(s, symmetric, kappa)
        u, f, nfev, conv, restarts = _minimize(obj, u0, symmetric, settings)
        total_evals += nfev
        runs.append((f, tuple(u), conv, restarts))
    runs.sort(key=lambda r: (r[0], r[1]))
    f, u, conv, restarts = runs[0]
    if not math.isfinite(f):
        raise DegenerateOverlapError("no start produced a finite energy")
    shape = _decode(u, symmetric, kappa)
    e, w = energy(shape, params, parity)
    grid = grid_for(params, shape, settings.grid_points)
    obs = observables(TrialState(shape, w, params, parity), grid)
    guard = (not symmetric) and max(abs(u[4]), abs(u[5])) > 1.0 - 1e-6
    return VariationalResult(shape=shape, weights=w, energy=e, parity=parity, params=params,
                             mode=mode, observables=obs, converged=conv, n_evals=total_evals,
                             restarts_used=restarts, guard_active=guard)


# ---------------------------------------------------------------------------
# scans

def normalized_parameters(res: VariationalResult) -> np.ndarray:
    """Parameters used by the jump detector.

    Asymmetry factors enter as ``delta / sqrt(xi)`` and the weights as the
    polaron fraction ``alpha^2 / (alpha^2 + beta^2)``.
    """
    s, w = res.shape, res.weights
    frac = w.alpha ** 2 / (w.alpha ** 2 + w.beta ** 2)
    return np.array([s.zeta_a, s.zeta_b, s.xi_a, s.xi_b,
                     s.delta_a / math.sqrt(s.xi_a), s.delta_b / math.sqrt(s.xi_b), frac])


@dataclass
class ScanResult:
    omega: float
    Omega: float
    parity: Parity
    mode: Mode
    rows: list = field(default_factory=list)
    jumps: list = field(default_factory=list)

    @property
    def g(self) -> np.ndarray:
        return np.array([r.params.g for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        out = []
        for r in self.rows:
            if name in PolaronShape.FIELDS:
                out.append(getattr(r.shape, name))
            elif name in ("alpha", "beta"):
                out.append(getattr(r.weights, name))
            elif name == "energy":
                out.append(r.energy)
            elif name == "photon":
                out.append(r.observables.photon_number)
            elif name in ("sigma_x", "coupling_corr"):
                out.append(getattr(r.observables, name))
            else:
                raise KeyError(name)
        return np.array(out)

    def jump_flags(self) -> np.ndarray:
        """Boolean per row: a jump occurs between this row and the previous."""
        flags = np.zeros(len(self.rows), dtype=bool)
        for i in self.jumps:
            flags[i] = True
        return flags


SCAN_COLUMNS = ("g", "g_over_gc", "energy", "alpha", "beta", "zeta_a", "zeta_b", "xi_a", "xi_b",
                "delta_a", "delta_b", "photon", "sigma_x", "coupling_corr", "converged", "jump")


def scan_rows(scan: ScanResult):
    gcv = gc(scan.omega, scan.Omega)
    jumps = scan.jump_flags()
    for r, jump in zip(scan.rows, jumps):
        s, w, o = r.shape, r.weights, r.observables
        yield (r.params.g, r.params.g / gcv, r.energy, w.alpha, w.beta, s.zeta_a, s.zeta_b,
               s.xi_a, s.xi_b, s.delta_a, s.delta_b, o.photon_number, o.sigma_x, o.coupling_corr,
               int(r.converged), int(jump))


def scan_g(omega: float, g_list, parity, mode="asymmetric", Omega: float = 1.0,
           settings: OptimizerSettings | None = None) -> ScanResult:
    """Continuation scan over sorted ``g_list``.

    A forward pass optimizes each point with the full multi-start seeded by
    the previous optimum.  A backward pass re-optimizes each point from its
    right neighbour and keeps the lower-energy branch; the losing energy is
    stored as ``discarded_energy``.  Adjacent rows whose normalized
    parameters differ by more than ``JUMP_THRESHOLD`` are flagged.
    """
    settings = settings or OptimizerSettings()
    g_list = [float(g) for g in g_list]
    if any(b < a for a, b in zip(g_list, g_list[1:])):
        raise ValueError("g_list must be sorted")
    parity = Parity.parse(parity)
    mode = Mode.parse(mode)
    rows = []
    prev = None
    for i, g in enumerate(g_list):
        p = ModelParams(omega=omega, g=g, Omega=Omega)
        st = OptimizerSettings(**{**settings.__dict__, "rng_seed": settings.rng_seed + i})
        res = optimize(p, parity, mode, seed=prev, settings=st)
        rows.append(res)
        prev = res.shape
    warm = OptimizerSettings(**{**settings.__dict__, "starts": 0})
    for i in range(len(rows) - 2, -1, -1):
        res = optimize(rows[i].params, parity, mode, seed=rows[i + 1].shape, settings=warm)
        if res.energy < rows[i].energy - settings.ftol:
            res.discarded_energy = rows[i].energy
            res.n_evals += rows[i].n_evals
            rows[i] = res
        else:
            rows[i].discarded_energy = res.energy
    scan = ScanResult(omega=omega, Omega=Omega, parity=parity, mode=mode, rows=rows)
    for i in range(1, len(rows)):
        d = np.max(np.abs(normalized_parameters(rows[i]) - normalized_parameters(rows[i - 1])))
        if d > JUMP_THRESHOLD:
            scan.jumps.append(i)
            log.info("parameter jump between g=%.6g and g=%.6g (%.3g)",
                     rows[i - 1].params.g, rows[i].params.g, d)
    return scan
