"""Physical parameters of the quantum Rabi model and critical-coupling formulas.

Energies are in units of the qubit splitting ``Omega`` (normally 1).  The
Hamiltonian is ``H = omega a^+a + Omega/2 sigma_x + g sigma_z (a^+ + a)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

#: fine-structure constant entering the low-frequency critical-coupling fit
ALPHA_FS = 1.0 / 137.0

#: coefficients of the full-range critical-coupling fit
FULLRANGE_C = (1.3715, -0.1311, 0.0184)


class Parity(enum.IntEnum):
    """Parity sector of ``sigma_x (-1)^{a^+a}``."""

    NEGATIVE = -1
    POSITIVE = 1

    @classmethod
    def parse(cls, value) -> "Parity":
        if isinstance(value, Parity):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            table = {"-1": cls.NEGATIVE, "negative": cls.NEGATIVE, "ground": cls.NEGATIVE,
                     "-": cls.NEGATIVE, "1": cls.POSITIVE, "+1": cls.POSITIVE,
                     "positive": cls.POSITIVE, "excited": cls.POSITIVE, "+": cls.POSITIVE}
            if key not in table:
                raise ValueError(f"unknown parity {value!r}")
            return table[key]
        v = int(value)
        if v not in (-1, 1):
            raise ValueError(f"parity must be -1 or +1, got {value!r}")
        return cls(v)


class GcVariant(enum.Enum):
    LOW_FREQ = "lowfreq"
    FULL_RANGE = "fullrange"


@dataclass(frozen=True)
class ModelParams:
    """Cavity frequency ``omega``, qubit splitting ``Omega`` and coupling ``g``."""

    omega: float
    g: float = 0.0
    Omega: float = 1.0

    def __post_init__(self):
        if not (self.omega > 0.0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not (self.Omega > 0.0 and math.isfinite(self.Omega)):
            raise ValueError(f"Omega must be positive, got {self.Omega}")
        if not (self.g >= 0.0 and math.isfinite(self.g)):
            raise ValueError(f"g must be non-negative, got {self.g}")

    @property
    def gprime(self) -> float:
        return gprime(self)

    @property
    def epsilon0(self) -> float:
        return epsilon0(self)

    def with_g(self, g: float) -> "ModelParams":
        return ModelParams(omega=self.omega, g=g, Omega=self.Omega)


def gprime(params: ModelParams) -> float:
    """Potential displacement ``sqrt(2) g / omega``."""
    if params.omega <= 0.0:
        raise ValueError("omega must be positive")
    return math.sqrt(2.0) * params.g / params.omega


def epsilon0(params: ModelParams) -> float:
    """Constant energy offset ``-omega (g'^2 + 1) / 2``."""
    gp = gprime(params)
    return -0.5 * params.omega * (gp * gp + 1.0)


def _check(omega, Omega):
    if not (omega > 0.0 and Omega > 0.0):
        raise ValueError("omega and Omega must be positive")


def gc0(omega: float, Omega: float = 1.0) -> float:
    """Low-frequency critical coupling ``sqrt(omega Omega) / 2``."""
    _check(omega, Omega)
    return 0.5 * math.sqrt(omega * Omega)


def gc(omega: float, Omega: float = 1.0) -> float:
    """Finite-frequency critical coupling scale."""
    g0 = gc0(omega, Omega)
    return math.sqrt(omega * omega + math.sqrt(omega ** 4 + g0 ** 4))


def gcF(omega: float, Omega: float = 1.0, variant="fullrange") -> float:
    """Fractional-power fit of the QFI peak position.

    ``variant`` is ``"lowfreq"`` (valid for ``omega/Omega <= 0.5``) or
    ``"fullrange"`` (valid for ``omega/Omega <= 3``).  A warning is issued
    outside the validity window.
    """
    variant = GcVariant(variant.value if isinstance(variant, GcVariant) else str(variant).lower())
    if omega < 0.0 or Omega <= 0.0:
        raise ValueError("omega must be non-negative and Omega positive")
    r = omega / Omega
    g0 = 0.5 * math.sqrt(omega * Omega)
    if variant is GcVariant.LOW_FREQ:
        if r > 0.5:
            warnings.warn(f"lowfreq gcF used outside its window (omega/Omega={r:g} > 0.5)",
                          stacklevel=2)
        return g0 * (1.0 + r ** (2.0 / 3.0) / (100.0 * ALPHA_FS) - r ** (4.0 / 3.0) / 8.0)
    if r > 3.0:
        warnings.warn(f"fullrange gcF used outside its window (omega/Omega={r:g} > 3)",
                      stacklevel=2)
    c1, c2, c3 = FULLRANGE_C
    return g0 * (1.0 + c1 * r ** (2.0 / 3.0) + c2 * r ** (4.0 / 3.0) + c3 * r * r)
