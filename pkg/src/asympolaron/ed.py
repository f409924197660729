"""Exact diagonalization of the quantum Rabi model in a truncated Fock basis.

Basis ordering is ``|n> (x) |s>`` with flat index ``2 n + s``; ``s = 0`` is
``sigma_z = +1`` and ``s = 1`` is ``sigma_z = -1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import ModelParams, Parity
from .oscillator import QuadratureGrid, hermite_table

#: largest Fock cutoff tried by :func:`converged_cutoff`
MAX_CUTOFF = 1024
PARITY_PURITY = 0.99
DEGENERACY_TOL = 1e-9


class CutoffError(RuntimeError):
    """Fock cutoff too small (parity impure or energies unconverged)."""


class AlignmentError(RuntimeError):
    """Neighbouring eigenvectors could not be sign-aligned; decrease dg."""


def _hamiltonian(omega: float, Omega: float, g: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    dim = 2 * (cutoff + 1)
    h = np.zeros((dim, dim))
    up = 2 * n
    dn = 2 * n + 1
    h[up, up] = omega * n
    h[dn, dn] = omega * n
    h[up, dn] = 0.5 * Omega
    h[dn, up] = 0.5 * Omega
    root = np.sqrt(n[:-1] + 1.0)
    h[up[:-1], up[1:]] = g * root
    h[up[1:], up[:-1]] = g * root
    h[dn[:-1], dn[1:]] = -g * root
    h[dn[1:], dn[:-1]] = -g * root
    return h


def build_hamiltonian(params: ModelParams, cutoff: int) -> np.ndarray:
    """Dense Hamiltonian of dimension ``2 (cutoff + 1)``."""
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    return _hamiltonian(params.omega, params.Omega, params.g, int(cutoff))


def parity_diagonal(cutoff: int) -> np.ndarray:
    """``P`` acts as ``(-1)^n`` times a spin flip; this returns ``(-1)^n`` per basis entry."""
    n = np.repeat(np.arange(cutoff + 1), 2)
    return np.where(n % 2 == 0, 1.0, -1.0)


def parity_apply(vecs: np.ndarray, cutoff: int) -> np.ndarray:
    """Apply the parity operator to the columns of ``vecs``."""
    v = np.asarray(vecs)
    out = np.empty_like(v)
    out[0::2] = v[1::2]
    out[1::2] = v[0::2]
    return parity_diagonal(cutoff)[:, None] * out if v.ndim == 2 else parity_diagonal(cutoff) * out


@dataclass
class EDResult:
    cutoff: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    parity_labels: np.ndarray
    params: ModelParams

    def index(self, parity, rank: int = 0) -> int:
        """Spectrum index of the ``rank``-th state in a parity sector."""
        p = int(Parity.parse(parity))
        idx = np.flatnonzero(self.parity_labels == p)
        if rank >= idx.size:
            raise IndexError("not enough states in sector")
        return int(idx[rank])

    def sector_rank(self, index: int):
        p = int(self.parity_labels[index])
        idx = np.flatnonzero(self.parity_labels == p)
        return Parity(p), int(np.searchsorted(idx, index))

    def energy(self, parity, rank: int = 0) -> float:
        return float(self.eigenvalues[self.index(parity, rank)])


def _eigh(omega, Omega, g, cutoff):
    h = _hamiltonian(omega, Omega, g, cutoff)
    w, v = scipy.linalg.eigh(h)
    pv = parity_apply(v, cutoff)
    # rotate degenerate clusters onto parity eigenstates
    i = 0
    dim = w.size
    while i < dim:
        j = i + 1
        while j < dim and w[j] - w[i] < DEGENERACY_TOL * max(1.0, abs(w[i])):
            j += 1
        if j - i > 1:
            block = v[:, i:j]
            pm = block.T @ parity_apply(block, cutoff)
            pw, pu = np.linalg.eigh(0.5 * (pm + pm.T))
            v[:, i:j] = block @ pu
            pv[:, i:j] = parity_apply(v[:, i:j], cutoff)
        i = j
    pexp = np.einsum("ij,ij->j", v, pv)
    return w, v, pexp


def diagonalize(params: ModelParams, cutoff: int) -> EDResult:
    """Full dense eigensolve with parity labels."""
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    w, v, pexp = _eigh(params.omega, params.Omega, params.g, int(cutoff))
    if np.any(np.abs(pexp) < PARITY_PURITY):
        raise CutoffError("eigenstates are not parity pure; increase cutoff")
    labels = np.where(pexp > 0, 1, -1)
    return EDResult(int(cutoff), w, v, labels, params)


def converged_cutoff(params: ModelParams, tol: float = 1e-10, start: int = 1,
                     max_cutoff: int = MAX_CUTOFF) -> int:
    """Smallest cutoff in the doubling sequence from ``start`` with converged
    ground and first positive-parity energies."""
    n = max(1, int(start))
    prev = diagonalize(params, n)
    while 2 * n <= max_cutoff:
        nxt = diagonalize(params, 2 * n)
        if (abs(prev.energy(-1) - nxt.energy(-1)) < tol
                and abs(prev.energy(+1) - nxt.energy(+1)) < tol):
            return n
        n *= 2
        prev = nxt
    raise CutoffError(f"energies not converged up to cutoff {max_cutoff}")


def state_vector(res: EDResult, index: int) -> np.ndarray:
    return res.eigenvectors[:, index]


def wavefunction(res: EDResult, index: int, grid_or_x, scale: float = 1.0):
    """Spin components ``(psi_+, psi_-)`` on a grid or at positions.

    With ``scale = 1`` the components satisfy ``<psi_+|psi_+> + <psi_-|psi_-> = 1``;
    ``scale = sqrt(2)`` gives each component unit norm.  The global sign makes
    ``psi_+`` positive at its largest-magnitude sample.
    """
    x = grid_or_x.nodes if isinstance(grid_or_x, QuadratureGrid) else np.asarray(grid_or_x, float)
    c = res.eigenvectors[:, index]
    table = hermite_table(res.cutoff, x)
    up = scale * (c[0::2] @ table)
    dn = scale * (c[1::2] @ table)
    k = int(np.argmax(np.abs(up)))
    if up.flat[k] < 0:
        up, dn = -up, -dn
    return up, dn


@dataclass(frozen=True)
class EDObservables:
    energy: float
    photon_number: float
    sigma_x: float
    coupling_corr: float


def observables_ed(res: EDResult, index: int) -> EDObservables:
    """Expectation values from the Fock-space coefficients."""
    c = res.eigenvectors[:, index]
    up, dn = c[0::2], c[1::2]
    n = np.arange(res.cutoff + 1)
    photon = float(np.sum(n * (up * up + dn * dn)))
    sx = float(2.0 * np.sum(up * dn))
    root = np.sqrt(n[:-1] + 1.0)
    cc = float(2.0 * np.sum(root * (up[:-1] * up[1:] - dn[:-1] * dn[1:])))
    return EDObservables(float(res.eigenvalues[index]), photon, sx, cc)


def _sector_state(omega, Omega, g, cutoff, parity, rank):
    w, v, pexp = _eigh(omega, Omega, g, cutoff)
    idx = np.flatnonzero(np.sign(pexp) == int(parity))
    return v[:, idx[rank]]


def qfi_ed(params: ModelParams, index: int = 0, dg: float = 1e-4, cutoff: int | None = None,
           richardson: bool = True) -> float:
    """Quantum Fisher information of eigenstate ``index`` with respect to ``g``.

    Central finite difference of the sign-aligned eigenvector; the state is
    tracked by its parity sector and rank within it.
    """
    if cutoff is None:
        cutoff = converged_cutoff(params)
    res = diagonalize(params, cutoff)
    parity, rank = res.sector_rank(index)
    v0 = res.eigenvectors[:, index]

    def aligned(g):
        v = _sector_state(params.omega, params.Omega, g, cutoff, parity, rank)
        ov = float(v @ v0)
        if abs(ov) < 0.9:
            raise AlignmentError(f"neighbour overlap {ov:.3g} at dg={dg:g}")
        return v if ov > 0 else -v

    def deriv(h):
        return (aligned(params.g + h) - aligned(params.g - h)) / (2.0 * h)

    d = deriv(dg)
    if richardson:
        d = (4.0 * deriv(0.5 * dg) - d) / 3.0
    return float(4.0 * (d @ d) - 4.0 * (d @ v0) ** 2)


def qfi_sum_over_states(res: EDResult, index: int = 0) -> float:
    """``4 sum_n |<n|dH/dg|k>|^2 / (E_n - E_k)^2`` within the truncated space."""
    v = res.eigenvectors
    vop = _hamiltonian(0.0, 0.0, 1.0, res.cutoff)
    m = v.T @ (vop @ v[:, index])
    de = res.eigenvalues - res.eigenvalues[index]
    mask = np.abs(de) > DEGENERACY_TOL
    return float(4.0 * np.sum(m[mask] ** 2 / de[mask] ** 2))


def fidelity_qfi(params: ModelParams, index: int = 0, dg: float = 1e-4, cutoff: int | None = None) -> float:
    """``8 (1 - |<psi(g)|psi(g + dg)>|) / dg^2``."""
    if cutoff is None:
        cutoff = converged_cutoff(params)
    res = diagonalize(params, cutoff)
    parity, rank = res.sector_rank(index)
    v1 = _sector_state(params.omega, params.Omega, params.g + dg, cutoff, parity, rank)
    return float(8.0 * (1.0 - abs(res.eigenvectors[:, index] @ v1)) / dg ** 2)


ED_COLUMNS = ("g", "E0", "E1", "parity0", "parity1", "photon", "sigma_x", "coupling_corr", "qfi",
              "cutoff")


def ed_row(params: ModelParams, state=-1, cutoff: int | None = None, qfi_method: str = "fd",
           dg: float = 1e-4):
    """One sweep row: two lowest levels, and observables/QFI of the chosen
    parity sector's lowest state."""
    if cutoff is None:
        cutoff = converged_cutoff(params)
    res = diagonalize(params, cutoff)
    k = res.index(state)
    obs = observables_ed(res, k)
    if qfi_method == "sos":
        q = qfi_sum_over_states(res, k)
    else:
        q = qfi_ed(params, k, dg=dg, cutoff=cutoff)
    return (params.g, float(res.eigenvalues[0]), float(res.eigenvalues[1]),
            int(res.parity_labels[0]), int(res.parity_labels[1]), obs.photon_number, obs.sigma_x,
            obs.coupling_corr, q, cutoff)


def ed_sweep(omega: float, g_list, state=-1, Omega: float = 1.0, cutoff: int | None = None,
             qfi_method: str = "fd", dg: float = 1e-4):
    return [ed_row(ModelParams(omega, g, Omega), state, cutoff, qfi_method, dg) for g in g_list]
