"""Self-checks: closed forms against quadrature, QFI sum rule, ED convergence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ed import converged_cutoff, diagonalize, qfi_ed
from .model import ModelParams, gc
from .oscillator import make_grid

ORACLE_TOL = 1e-9


@dataclass
class Check:
    name: str
    value: float
    tol: float

    @property
    def ok(self) -> bool:
        return bool(self.value <= self.tol)


@dataclass
class Report:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self):
        for c in self.checks:
            yield f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.value:.3e} (tol {c.tol:.0e})"


def random_draw(rng):
    """Parameters in the oracle range: xi in [0.2, 2], |zeta| <= 1.5, |delta| <= 1, g' <= 6."""
    xa, xb = rng.uniform(0.2, 2.0, 2)
    za, zb = rng.uniform(-1.5, 1.5, 2)
    da, db = rng.uniform(-1.0, 1.0, 2)
    gp = rng.uniform(0.0, 6.0)
    om = rng.uniform(0.05, 2.0)
    return om, xa, xb, za, zb, da, db, gp


def _packet(x, xi, c, d):
    y = x - c
    g = (xi / math.pi) ** 0.25 * np.exp(-0.5 * xi * y * y)
    return (1.0 + d * y) * g, (d - xi * y * (1.0 + d * y)) * g


def quadrature_elements(om, xa, xb, za, zb, da, db, gp, grid):
    """All closed-form quantities evaluated by quadrature."""
    x, w = grid.nodes, grid.weights
    pa, dpa = _packet(x, xa, -za * gp, da)
    pb, dpb = _packet(x, xb, zb * gp, db)
    pa_r, _ = _packet(-x, xa, -za * gp, da)
    pb_r, _ = _packet(-x, xb, zb * gp, db)
    v = (x + gp) ** 2

    def h(f, df, k, dk):
        return 0.5 * om * (np.dot(w, df * dk) + np.dot(w, f * v * k))

    return {
        "h_aa": h(pa, dpa, pa, dpa), "h_bb": h(pb, dpb, pb, dpb), "h_ab": h(pa, dpa, pb, dpb),
        "flip_aa": np.dot(w, pa * pa_r), "flip_bb": np.dot(w, pb * pb_r),
        "flip_ab": np.dot(w, pa * pb_r), "overlap_ab": np.dot(w, pa * pb),
        "norm_a": np.dot(w, pa * pa), "norm_b": np.dot(w, pb * pb),
    }


def closed_elements(om, xa, xb, za, zb, da, db, gp):
    return {
        "h_aa": kernels.h_aa(om, xa, za, da, gp), "h_bb": kernels.h_bb(om, xb, zb, db, gp),
        "h_ab": kernels.h_ab(om, xa, xb, za, zb, da, db, gp),
        "flip_aa": kernels.flip_aa(xa, za, da, gp), "flip_bb": kernels.flip_bb(xb, zb, db, gp),
        "flip_ab": kernels.flip_ab(xa, xb, za, zb, da, db, gp),
        "overlap_ab": kernels.overlap(xa, xb, -za * gp, zb * gp, da, db),
        "norm_a": 1.0 + da * da / (2.0 * xa), "norm_b": 1.0 + db * db / (2.0 * xb),
    }


def oracle_errors(draws: int = 200, seed: int = 12345, npoints: int = 3001, half_width: float = 40.0):
    """Largest absolute closed-form vs quadrature error per element."""
    rng = np.random.default_rng(seed)
    grid = make_grid(npoints, half_width)
    worst = {}
    for _ in range(draws):
        p = random_draw(rng)
        q = quadrature_elements(*p, grid)
        c = closed_elements(*p)
        for k in q:
            worst[k] = max(worst.get(k, 0.0), abs(q[k] - c[k]))
    return worst


def qfi_sum_rule_error(omega: float = 0.3, g_rel: float = 1.0) -> float:
    from .qfi import qfi_decompose
    from .variational import OptimizerSettings, optimize

    p = ModelParams(omega, g_rel * gc(omega))
    res = optimize(p, -1, "asymmetric", settings=OptimizerSettings(starts=4))
    rng = np.random.default_rng(7)
    b = qfi_decompose(res, rng.normal(size=8))
    return abs(b.component_sum() - b.total) / abs(b.total)


def ed_convergence_error(omega: float = 0.3, g_rel: float = 1.5) -> float:
    p = ModelParams(omega, g_rel * gc(omega))
    n = converged_cutoff(p)
    q1 = qfi_ed(p, 0, cutoff=n)
    q2 = qfi_ed(p, 0, cutoff=2 * n)
    e1 = diagonalize(p, n).eigenvalues[0]
    e2 = diagonalize(p, 2 * n).eigenvalues[0]
    return max(abs(q1 - q2) / abs(q2), abs(e1 - e2))


def run_validation(draws: int = 200, seed: int = 12345) -> Report:
    rep = Report()
    for name, err in sorted(oracle_errors(draws, seed).items()):
        rep.checks.append(Check(f"closed form {name} vs quadrature ({draws} draws)", err, ORACLE_TOL))
    rep.checks.append(Check("QFI decomposition sum rule (relative)", qfi_sum_rule_error(), 1e-6))
    rep.checks.append(Check("ED cutoff doubling (energy, relative QFI)", ed_convergence_error(), 1e-6))
    return rep
