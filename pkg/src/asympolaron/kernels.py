"""Backend selection for the hot kernels.

The compiled extension is used when importable; setting the environment
variable ``ASYMPOLARON_PURE_PYTHON=1`` forces the pure-Python twin.
"""

import os

if os.environ.get("ASYMPOLARON_PURE_PYTHON") == "1":
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

DegenerateOverlapError = _impl.DegenerateOverlapError
EnergyObjective = _impl.EnergyObjective
coef_f1 = _impl.coef_f1
coef_f2 = _impl.coef_f2
coef_f3 = _impl.coef_f3
coef_f4 = _impl.coef_f4
h_aa = _impl.h_aa
h_bb = _impl.h_bb
h_ab = _impl.h_ab
h_ab_truncated = _impl.h_ab_truncated
h_ab_delta_a = _impl.h_ab_delta_a
flip_aa = _impl.flip_aa
flip_bb = _impl.flip_bb
flip_ab = _impl.flip_ab
overlap = _impl.overlap
energy_matrices = _impl.energy_matrices
lowest_pair = _impl.lowest_pair
shape_energy = _impl.shape_energy
shape_energy_weights = _impl.shape_energy_weights
nelder_mead = _impl.nelder_mead

__all__ = [
    "BACKEND", "DegenerateOverlapError", "EnergyObjective", "coef_f1", "coef_f2",
    "coef_f3", "coef_f4", "h_aa", "h_bb", "h_ab", "h_ab_truncated", "h_ab_delta_a",
    "flip_aa", "flip_bb", "flip_ab", "overlap", "energy_matrices", "lowest_pair",
    "shape_energy", "shape_energy_weights", "nelder_mead",
]
