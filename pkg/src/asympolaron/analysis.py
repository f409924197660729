"""Transition boundaries, the ED asymmetry quantity Q, polaron fits of ED
wavefunctions and accuracy tables."""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from . import kernels
from .ed import converged_cutoff, diagonalize, observables_ed
from .model import ModelParams, Parity, gc
from .oscillator import QuadratureGrid, hermite_table
from .polaron import Packet, PolaronShape, PolaronWeights, TrialState, eval_packet
from .variational import (KAPPA, XI_BOUNDS, ZETA_BOUNDS, Mode, OptimizerSettings, ScanResult,
                          VariationalResult, grid_for, optimize, scan_g)

log = logging.getLogger(__name__)

POOR_FIT = 0.05
PEAK_AMBIGUITY = 0.01


class AmbiguousPeakError(ValueError):
    """Two highest peaks are within ``PEAK_AMBIGUITY`` of each other."""


class BoundaryKind(enum.Enum):
    MIN_XI_BETA = "MinXiBeta"
    MAX_DELTA_ALPHA = "MaxDeltaAlpha"
    MIN_DELTA_BETA = "MinDeltaBeta"
    IMBALANCE_ZERO = "ImbalanceZero"
    ZETA_ALPHA_ONE = "ZetaAlphaOne"
    WEIGHT_EQUAL = "WeightEqual"
    DELTA_ALPHA_ZERO = "DeltaAlphaZero"
    MAIN_PEAK_ZETA_MIN = "MainPeakZetaMin"
    MAIN_PEAK_ZETA_ONE = "MainPeakZetaOne"


@dataclass
class PhaseBoundary:
    kind: BoundaryKind
    points: list = field(default_factory=list)

    def sorted(self) -> "PhaseBoundary":
        return PhaseBoundary(self.kind, sorted(self.points))


# ---------------------------------------------------------------------------
# detectors

def detect_sign_change(g, values, refine=None, rounds: int = 3):
    """Roots of a sampled series by bracketing and linear interpolation.

    ``refine(g) -> value`` (optional) re-evaluates the series inside a
    bracket; ``rounds`` bisection steps precede the final interpolation.
    Exact zeros at interior samples count as roots.
    """
    g = np.asarray(g, float)
    v = np.asarray(values, float)
    roots = []
    for i in range(len(g) - 1):
        a, b, fa, fb = g[i], g[i + 1], v[i], v[i + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if fa == 0.0:
            if 0 < i and v[i - 1] * fb < 0:
                roots.append(float(a))
            continue
        if fa * fb >= 0.0:
            continue
        if refine is not None:
            for _ in range(rounds):
                m = 0.5 * (a + b)
                fm = refine(m)
                if fm == 0.0:
                    a = b = m
                    fa = fb = 0.0
                    break
                if fa * fm < 0.0:
                    b, fb = m, fm
                else:
                    a, fa = m, fm
        roots.append(float(a) if fa == fb else float(a - fa * (b - a) / (fb - fa)))
    return roots


def detect_extremum(g, values, kind: str = "both"):
    """Interior local extrema with parabolic refinement.

    Returns a list of ``(g, value, "min" | "max")``.
    """
    from .qfi import parabola_vertex

    g = np.asarray(g, float)
    v = np.asarray(values, float)
    out = []
    for k in range(1, len(g) - 1):
        lo, mid, hi = v[k - 1], v[k], v[k + 1]
        if mid < lo and mid < hi:
            typ = "min"
        elif mid > lo and mid > hi:
            typ = "max"
        else:
            continue
        if kind != "both" and typ != kind:
            continue
        gv, fv = parabola_vertex(g[k - 1:k + 2], v[k - 1:k + 2])
        out.append((float(gv), float(fv), typ))
    return out


def global_interior_extremum(g, values, kind: str):
    """The global extremum if it is interior, else ``None``."""
    v = np.asarray(values, float)
    k = int(np.nanargmin(v) if kind == "min" else np.nanargmax(v))
    if k == 0 or k == v.size - 1:
        return None
    for gv, fv, typ in detect_extremum(np.asarray(g)[k - 1:k + 2], v[k - 1:k + 2], kind):
        return gv, fv
    return None


# ---------------------------------------------------------------------------
# main peak

def _local_maxima(y):
    y = np.abs(np.asarray(y, float))
    k = np.flatnonzero((y[1:-1] >= y[:-2]) & (y[1:-1] > y[2:])) + 1
    return k


def main_peak(psi, x, ambiguity: float = PEAK_AMBIGUITY) -> float:
    """Position of the largest ``|psi|`` peak, refined off the sample grid.

    ``psi`` is a callable or values sampled at ``x``.  Raises
    :class:`AmbiguousPeakError` if the two highest peaks are within
    ``ambiguity`` (relative) of each other.
    """
    x = np.asarray(x, float)
    fn = psi if callable(psi) else CubicSpline(x, np.asarray(psi, float))
    y = np.abs(fn(x)) if callable(psi) else np.abs(np.asarray(psi, float))
    peaks = _local_maxima(y)
    if peaks.size == 0:
        raise AmbiguousPeakError("no interior peak")
    order = peaks[np.argsort(y[peaks])[::-1]]
    if order.size > 1 and y[order[1]] > (1.0 - ambiguity) * y[order[0]]:
        raise AmbiguousPeakError(
            f"peaks at {x[order[0]]:.4g} and {x[order[1]]:.4g} differ by < {ambiguity:.0%}")
    k = order[0]
    r = minimize_scalar(lambda t: -abs(float(fn(t))), bounds=(x[k - 1], x[k + 1]), method="bounded",
                        options={"xatol": 1e-12})
    return float(r.x)


def asymmetry_Q(psi, x, x_m: float | None = None, npoints: int = 801) -> float:
    """Filtered left/right imbalance of ``psi`` about its main peak.

    ``Q = int psi^2 sign(x - x_m) exp(-(x - x_m)^2 / 2) dx``.  ``psi`` is a
    callable or samples at ``x`` (interpolated by a cubic spline); the
    integral is split at ``x_m`` and each half done by Gauss-Legendre.
    """
    x = np.asarray(x, float)
    fn = psi if callable(psi) else CubicSpline(x, np.asarray(psi, float))
    if x_m is None:
        x_m = main_peak(fn if callable(psi) else psi, x)
    t, w = np.polynomial.legendre.leggauss(npoints)

    def half(a, b):
        xs = 0.5 * (b - a) * t + 0.5 * (a + b)
        f = np.asarray(fn(xs), float)
        return 0.5 * (b - a) * float(np.sum(w * f * f * np.exp(-0.5 * (xs - x_m) ** 2)))

    # the filter is below 1e-18 beyond 9 units
    a = max(x[0], x_m - 9.0)
    b = min(x[-1], x_m + 9.0)
    return half(x_m, b) - half(a, x_m)


def ed_wavefunction(params: ModelParams, parity, cutoff: int | None = None, scale: float = math.sqrt(2.0)):
    """Callable spin-up ED wavefunction of the lowest state in ``parity``.

    The default scale gives a unit-norm component; the sign makes the
    largest-magnitude lobe positive.
    """
    if cutoff is None:
        cutoff = converged_cutoff(params)
    res = diagonalize(params, cutoff)
    c = res.eigenvectors[0::2, res.index(parity)] * scale
    probe = np.linspace(-12.0 - 3.0 * params.gprime, 12.0 + 3.0 * params.gprime, 4001)
    vals = c @ hermite_table(cutoff, probe)
    if vals[int(np.argmax(np.abs(vals)))] < 0:
        c = -c

    def psi(x):
        xa = np.asarray(x, float)
        return c @ hermite_table(cutoff, np.atleast_1d(xa)) if xa.ndim else float(
            c @ hermite_table(cutoff, np.atleast_1d(xa))[:, 0])

    return psi


# ---------------------------------------------------------------------------
# fitting

@dataclass
class FitResult:
    shape: PolaronShape
    weights: PolaronWeights
    residual: float
    norm2: float
    poor_fit: bool

    @property
    def delta_alpha_N(self) -> float:
        return self.shape.delta_a

    @property
    def relative_residual(self) -> float:
        return self.residual / self.norm2


def _fit_objective(target, params, grid, symmetric, kappa):
    x = grid.nodes
    w = grid.weights
    gp = params.gprime

    def solve(u):
        za, zb, xa, xb = u[0], u[1], u[2], u[3]
        da = 0.0 if symmetric else kappa * u[4] * math.sqrt(xa)
        db = 0.0 if symmetric else kappa * u[5] * math.sqrt(xb)
        ya = x + za * gp
        yb = x - zb * gp
        pa = (1.0 + da * ya) * (xa / math.pi) ** 0.25 * np.exp(-0.5 * xa * ya * ya)
        pb = (1.0 + db * yb) * (xb / math.pi) ** 0.25 * np.exp(-0.5 * xb * yb * yb)
        saa = np.dot(w, pa * pa)
        sbb = np.dot(w, pb * pb)
        sab = np.dot(w, pa * pb)
        ta = np.dot(w, pa * target)
        tb = np.dot(w, pb * target)
        det = saa * sbb - sab * sab
        if det <= 1e-12 * saa * sbb:
            return math.inf, (0.0, 0.0), (za, zb, xa, xb, da, db)
        al = (sbb * ta - sab * tb) / det
        be = (saa * tb - sab * ta) / det
        r = target - al * pa - be * pb
        return float(np.dot(w, r * r)), (al, be), (za, zb, xa, xb, da, db)

    return solve


def fit_polaron_to_ed(psi_ed, params: ModelParams, parity, seed: VariationalResult | PolaronShape,
                      grid: QuadratureGrid | None = None, symmetric: bool = False,
                      kappa: float = KAPPA, xtol: float = 1e-10, max_evals: int = 100_000) -> FitResult:
    """Least-squares fit of ``alpha phi_a + beta phi_b`` to the spin-up ED
    wavefunction.

    Weights enter linearly and are solved exactly for every shape, so the
    simplex runs over the six shape parameters.  Starts: the seed shape, its
    symmetric version and the two flipped asymmetry sign patterns.
    """
    shape0 = seed.shape if isinstance(seed, VariationalResult) else seed
    grid = grid or grid_for(params, shape0)
    target = np.asarray(psi_ed(grid.nodes) if callable(psi_ed) else psi_ed, float)
    norm2 = float(np.dot(grid.weights, target * target))
    solve = _fit_objective(target, params, grid, symmetric, kappa)

    def f(u):
        return solve(u)[0]

    lo = [ZETA_BOUNDS[0], ZETA_BOUNDS[0], XI_BOUNDS[0], XI_BOUNDS[0]]
    hi = [ZETA_BOUNDS[1], ZETA_BOUNDS[1], XI_BOUNDS[1], XI_BOUNDS[1]]
    step = [0.05, 0.05, 0.05, 0.05]
    if not symmetric:
        lo += [-1.0, -1.0]
        hi += [1.0, 1.0]
        step += [0.1, 0.1]
    s = shape0
    base = [s.zeta_a, s.zeta_b, s.xi_a, s.xi_b]
    if symmetric:
        starts = [base]
    else:
        ta = s.delta_a / (kappa * math.sqrt(s.xi_a))
        tb = s.delta_b / (kappa * math.sqrt(s.xi_b))
        starts = [base + [ta, tb], base + [0.0, 0.0], base + [-ta, tb], base + [ta, -tb]]
    best = None
    for u0 in starts:
        u0 = [min(max(v, l), h) for v, l, h in zip(u0, lo, hi)]
        u, fu, _, _ = kernels.nelder_mead(f, u0, lo, hi, step, xtol, 1e-16, max_evals)
        for _ in range(5):
            u2, f2, _, _ = kernels.nelder_mead(f, u, lo, hi, step, xtol, 1e-16, max_evals)
            done = fu - f2 <= 1e-15
            if f2 < fu:
                u, fu = u2, f2
            if done:
                break
        if best is None or (fu, tuple(u)) < (best[0], tuple(best[1])):
            best = (fu, u)
    res, (al, be), shp = solve(best[1])
    if al < 0.0:
        al, be = -al, -be
    return FitResult(shape=PolaronShape(*shp), weights=PolaronWeights(al, be), residual=res,
                     norm2=norm2, poor_fit=res > POOR_FIT * norm2)


def peak_residual_asymmetry(fit: FitResult, psi_ed, params: ModelParams, distances, x_m: float | None = None):
    """``psi_a(x_m - d) - psi_a(x_m + d)`` for the isolated polaron part
    ``psi_a = psi_ED - beta phi_b`` around its main peak ``x_m``."""
    d = np.asarray(distances, float)

    def psi_a(x):
        x = np.asarray(x, float)
        base = psi_ed(x) if callable(psi_ed) else psi_ed
        return np.asarray(base, float) - fit.weights.beta * eval_packet(Packet.ANTIPOLARON, fit.shape, params, x)

    if x_m is None:
        c = -fit.shape.zeta_a * params.gprime
        width = 4.0 / math.sqrt(fit.shape.xi_a)
        r = minimize_scalar(lambda t: -abs(float(psi_a(np.array([t]))[0])), bounds=(c - width, c + width),
                            method="bounded", options={"xatol": 1e-12})
        x_m = float(r.x)
    return psi_a(x_m - d) - psi_a(x_m + d)


# ---------------------------------------------------------------------------
# phase diagrams

def main_peak_zeta(res: VariationalResult, npoints: int = 4001) -> float:
    """Displacement factor ``-x_m / g'`` of the main peak of the trial state."""
    gp = res.params.gprime
    if gp <= 0.0:
        return math.nan
    st = res.state
    hw = 2.0 * gp + 12.0
    x = np.linspace(-hw, hw, npoints)
    try:
        xm = main_peak(st.psi_plus, x)
    except AmbiguousPeakError:
        return math.nan
    return -xm / gp


def scan_series(scan: ScanResult):
    """Series used by the boundary detectors, keyed by name."""
    g = scan.g
    s = {
        "xi_b": scan.column("xi_b"),
        "delta_a": scan.column("delta_a"),
        "delta_b": scan.column("delta_b"),
        "imbalance": scan.column("delta_a") + scan.column("delta_b"),
        "zeta_a_minus_one": scan.column("zeta_a") - 1.0,
        "weight_diff": scan.column("alpha") ** 2 - scan.column("beta") ** 2,
        "main_zeta": np.array([main_peak_zeta(r) for r in scan.rows]),
    }
    return g, s


def _series_value(name: str, res: VariationalResult) -> float:
    s, w = res.shape, res.weights
    return {
        "delta_a": lambda: s.delta_a,
        "imbalance": lambda: s.delta_a + s.delta_b,
        "zeta_a_minus_one": lambda: s.zeta_a - 1.0,
        "weight_diff": lambda: w.alpha ** 2 - w.beta ** 2,
        "main_zeta_minus_one": lambda: main_peak_zeta(res) - 1.0,
    }[name]()


def _refiner(scan: ScanResult, name: str, settings: OptimizerSettings):
    g = scan.g
    warm = OptimizerSettings(**{**settings.__dict__, "starts": 0})

    def refine(gm):
        k = int(np.argmin(np.abs(g - gm)))
        row = scan.rows[k]
        res = optimize(row.params.with_g(gm), scan.parity, scan.mode, seed=row.shape, settings=warm)
        return _series_value(name, res)

    return refine


def boundaries_for_scan(scan: ScanResult, settings: OptimizerSettings | None = None, refine: bool = True):
    """Detect every boundary kind on one scan.

    Returns ``(points, omitted, extras)`` where ``points`` maps kind to a
    list of ``g`` values, ``omitted`` lists kinds not found and ``extras``
    records both extrema of ``xi_beta``.
    """
    settings = settings or OptimizerSettings()
    g, s = scan_series(scan)
    pts = {k: [] for k in BoundaryKind}
    ref = (lambda name: _refiner(scan, name, settings)) if refine else (lambda name: None)
    for kind, series, fn in ((BoundaryKind.IMBALANCE_ZERO, "imbalance", s["imbalance"]),
                             (BoundaryKind.ZETA_ALPHA_ONE, "zeta_a_minus_one", s["zeta_a_minus_one"]),
                             (BoundaryKind.WEIGHT_EQUAL, "weight_diff", s["weight_diff"]),
                             (BoundaryKind.DELTA_ALPHA_ZERO, "delta_a", s["delta_a"]),
                             (BoundaryKind.MAIN_PEAK_ZETA_ONE, "main_zeta_minus_one", s["main_zeta"] - 1.0)):
        pts[kind] = detect_sign_change(g, fn, ref(series))
    for kind, series, typ in ((BoundaryKind.MIN_XI_BETA, s["xi_b"], "min"),
                              (BoundaryKind.MAX_DELTA_ALPHA, s["delta_a"], "max"),
                              (BoundaryKind.MIN_DELTA_BETA, s["delta_b"], "min"),
                              (BoundaryKind.MAIN_PEAK_ZETA_MIN, s["main_zeta"], "min")):
        ext = global_interior_extremum(g, series, typ)
        if ext is not None:
            pts[kind] = [ext[0]]
    omitted = [k.value for k, v in pts.items() if not v]
    extras = {"xi_b_min": global_interior_extremum(g, s["xi_b"], "min"),
              "xi_b_max": global_interior_extremum(g, s["xi_b"], "max")}
    return pts, omitted, extras


def _phase_task(args):
    omega, parity, mode, Omega, n_g, g_range, settings, refine = args
    gcv = gc(omega, Omega)
    g_list = gcv * np.linspace(g_range[0], g_range[1], n_g)
    scan = scan_g(omega, g_list, parity, mode, Omega=Omega, settings=settings)
    pts, omitted, extras = boundaries_for_scan(scan, settings, refine)
    return omega, {k.value: v for k, v in pts.items()}, omitted, extras, len(scan.jumps)


@dataclass
class PhaseDiagram:
    boundaries: list
    omitted: list
    extras: dict
    parity: Parity
    mode: Mode
    Omega: float = 1.0

    def rows(self):
        for b in self.boundaries:
            for om, g in b.points:
                yield (b.kind.value, om, g, g / gc(om, self.Omega))

    def summary(self) -> dict:
        return {
            "parity": int(self.parity),
            "mode": self.mode.value,
            "counts": {b.kind.value: len(b.points) for b in self.boundaries},
            "omitted": self.omitted,
            "xi_beta_extrema": self.extras,
        }


def default_omegas(n: int = 24, lo: float = 0.05, hi: float = 1.0):
    return np.geomspace(lo, hi, n)


def phase_diagram(omega_list, parity, mode="asymmetric", Omega: float = 1.0, n_g: int = 81,
                  g_range=(0.2, 2.0), settings: OptimizerSettings | None = None, workers: int = 1,
                  refine: bool = True) -> PhaseDiagram:
    """Scan every frequency and assemble boundary curves.

    Frequencies run in a process pool when ``workers > 1``; results are
    collected in input order so output does not depend on scheduling.
    """
    settings = settings or OptimizerSettings()
    parity = Parity.parse(parity)
    mode = Mode.parse(mode)
    tasks = [(float(om), parity, mode, Omega, n_g, tuple(g_range), settings, refine) for om in omega_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_phase_task, tasks))
    else:
        results = [_phase_task(t) for t in tasks]
    bounds = {k: PhaseBoundary(k) for k in BoundaryKind}
    omitted = []
    extras = {}
    for om, pts, om_missing, ext, njumps in results:
        for name, gs in pts.items():
            for gv in gs:
                bounds[BoundaryKind(name)].points.append((om, gv))
        for name in om_missing:
            omitted.append({"kind": name, "omega": om})
            log.info("boundary %s not found at omega=%g", name, om)
        extras[repr(om)] = {k: (list(v) if v is not None else None) for k, v in ext.items()}
        extras[repr(om)]["jumps"] = njumps
    return PhaseDiagram([bounds[k].sorted() for k in BoundaryKind], omitted, extras, parity, mode, Omega)


# ---------------------------------------------------------------------------
# accuracy

ACCURACY_QUANTITIES = ("energy", "photon", "sigma_x", "coupling_corr")


def accuracy_table(omega: float, parity, g_list, Omega: float = 1.0,
                   settings: OptimizerSettings | None = None, scans=None, ed_tol: float = 1e-12):
    """``q_var - q_ED`` per quantity and mode.

    Returns a list of dicts with keys ``g`` and ``d<q>_<mode>``.  Existing
    scans can be passed as ``{"symmetric": scan, "asymmetric": scan}``.
    ``ed_tol`` is the cutoff tolerance of the reference; it sits well below
    the differences being compared.
    """
    parity = Parity.parse(parity)
    scans = scans or {m.value: scan_g(omega, g_list, parity, m, Omega=Omega, settings=settings)
                      for m in Mode}
    rows = []
    for i, g in enumerate(g_list):
        p = ModelParams(omega, float(g), Omega)
        res = diagonalize(p, converged_cutoff(p, ed_tol))
        ed = observables_ed(res, res.index(parity))
        ref = {"energy": ed.energy, "photon": ed.photon_number, "sigma_x": ed.sigma_x,
               "coupling_corr": ed.coupling_corr}
        row = {"g": float(g), "g_over_gc": float(g) / gc(omega, Omega)}
        for m, sc in scans.items():
            r = sc.rows[i]
            var = {"energy": r.energy, "photon": r.observables.photon_number,
                   "sigma_x": r.observables.sigma_x, "coupling_corr": r.observables.coupling_corr}
            for q in ACCURACY_QUANTITIES:
                row[f"d{q}_{m}"] = var[q] - ref[q]
        rows.append(row)
    return rows
