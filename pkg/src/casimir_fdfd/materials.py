"""Permittivity models on the imaginary-frequency axis.

Material parameters and the frequency argument of :func:`epsilon_iw` are
in units of 2*pi*c/a, the convention in which tabulated Drude fits are
usually quoted.  The field solver works with the angular imaginary
frequency ``xi = 2*pi*w`` in units of c/a and converts through
:func:`epsilon_at_angular`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Material",
    "Vacuum",
    "PerfectMetal",
    "ConstantDielectric",
    "Drude",
    "VACUUM",
    "PERFECT_METAL",
    "epsilon_iw",
    "epsilon_at_angular",
    "d_w2eps_dw_angular",
    "drude_gold_preset",
]


class Material:
    """Base class of all material models (mu is always 1)."""

    mu = 1.0

    @property
    def is_metal(self) -> bool:
        return False

    @property
    def is_vacuum(self) -> bool:
        return False


@dataclass(frozen=True)
class Vacuum(Material):
    @property
    def is_vacuum(self) -> bool:
        return True


@dataclass(frozen=True)
class PerfectMetal(Material):
    """Perfect conductor; enters the operator as a boundary condition."""

    @property
    def is_metal(self) -> bool:
        return True


@dataclass(frozen=True)
class ConstantDielectric(Material):
    eps: float

    def __post_init__(self):
        if not (self.eps >= 1.0 and math.isfinite(self.eps)):
            raise ValueError(f"ConstantDielectric needs finite eps >= 1, got {self.eps}")


@dataclass(frozen=True)
class Drude(Material):
    """Drude metal ``eps(iw) = 1 + omega_p**2 / (w (w + gamma_p))``."""

    omega_p: float
    gamma_p: float = 0.0

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ValueError(f"Drude omega_p must be > 0, got {self.omega_p}")
        if not self.gamma_p >= 0:
            raise ValueError(f"Drude gamma_p must be >= 0, got {self.gamma_p}")


VACUUM = Vacuum()
PERFECT_METAL = PerfectMetal()


def _check_w(w):
    w = float(w)
    if not w > 0:
        raise ValueError(f"imaginary frequency must be > 0, got {w}")
    return w


def epsilon_iw(m: Material, w: float) -> float:
    """Permittivity at the imaginary frequency ``iw``.

    Parameters
    ----------
    m : Material
        Any material except :class:`PerfectMetal`.
    w : float
        Imaginary frequency in units of 2*pi*c/a, strictly positive.

    Returns
    -------
    float
        Real permittivity, always >= 1.
    """
    w = _check_w(w)
    if isinstance(m, PerfectMetal):
        raise ValueError("perfect metal has no bulk permittivity")
    if isinstance(m, Vacuum):
        return 1.0
    if isinstance(m, ConstantDielectric):
        return float(m.eps)
    if isinstance(m, Drude):
        return 1.0 + m.omega_p**2 / (w * (w + m.gamma_p))
    raise TypeError(f"unknown material {m!r}")


def epsilon_at_angular(m: Material, xi: float) -> float:
    """``epsilon_iw`` evaluated at angular imaginary frequency ``xi`` (c/a)."""
    return epsilon_iw(m, xi / (2.0 * math.pi))


def d_w2eps_dw_angular(m: Material, xi: float) -> float:
    """Derivative d(xi^2 eps(i xi))/d xi, with xi the angular frequency."""
    xi = _check_w(xi)
    if isinstance(m, Drude):
        # xi^2 eps = xi^2 + W^2 xi/(xi + G) in angular units
        wp = 2.0 * math.pi * m.omega_p
        g = 2.0 * math.pi * m.gamma_p
        return 2.0 * xi + wp**2 * g / (xi + g) ** 2
    return 2.0 * xi * epsilon_at_angular(m, xi)


def drude_gold_preset() -> Drude:
    """Drude fit of gold for a reference length of 1 micron.

    Plasma frequency 1.37e16 Hz and damping 5.32e13 Hz, expressed in units
    of 2*pi*c/a with a = 1 um.
    """
    return Drude(omega_p=7.2731, gamma_p=0.028243)
