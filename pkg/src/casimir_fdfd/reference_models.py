"""Closed-form comparison values: the 1D force and PFA normalizations.

All forces are per polarization and positive when attractive (hbar = c = 1).
The PFA normalizations of the square and block geometries are the
parallel-plate values of one polarization times the facing side ``s``;
for perfect metals the two polarizations coincide.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import zeta

from .materials import Material, PerfectMetal
from .quadrature import QuadratureSpec, integrate_w

__all__ = ["force_1d_analytic", "pfa_2d_squares", "pfa_3d_blocks", "pfa_cylinder_plate", "pfa_slabs_2d", "slab_pressure_2d"]


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be > 0")


def force_1d_analytic(a) -> float:
    """``pi / (24 a^2)``: force between two perfect-metal points in 1D."""
    _positive(a=a)
    return math.pi / (24.0 * a * a)


def pfa_2d_squares(s, a) -> float:
    """``zeta(3) s / (8 pi a^3)``: 2D perfect-metal squares of side ``s``, gap ``a``."""
    _positive(s=s, a=a)
    return float(zeta(3)) * s / (8.0 * math.pi * a**3)


def pfa_3d_blocks(s, a) -> float:
    """``pi^2 s / (480 a^4)``: z-invariant perfect-metal blocks, per unit length."""
    _positive(s=s, a=a)
    return math.pi**2 * s / (480.0 * a**4)


def pfa_cylinder_plate(R, a) -> float:
    """``pi^3 sqrt(2R) / (1536 a^(7/2))``: z-invariant metal cylinder of radius ``R``
    at gap ``a`` from a plate, per unit length.

    The plate pressure ``pi^2/(480 d^4)`` summed over the strips of a
    parabolic surface ``d = a + x^2/(2R)`` gives ``5 pi/16 sqrt(2R) a^(-7/2)``
    times it; half of that is carried by each polarization.
    """
    _positive(R=R, a=a)
    return math.pi**3 * math.sqrt(2.0 * R) / (1536.0 * a**3.5)


def slab_pressure_2d(material: Material, a, polarization, thickness=None, dx=None, quad=None):
    """Force per unit facing length between two 2D slabs (z-invariant, ``k_z = 0``).

    Computed on the 1D grid machinery: the 1D force integrand at
    frequency ``w`` and transverse wavevector ``k`` is integrated as
    ``int dw (1/pi) int_0^inf dk F_1D(w, k)``.  The slabs are ``thickness``
    thick (default ``8a``, standing in for half-spaces) and separated by
    ``a``; their periodic images are another ``thickness`` away.
    """
    from .force import ForceProblem
    from .scenes import slab_pair_1d

    _positive(a=a)
    T = 8.0 * a if thickness is None else float(thickness)
    dx = a / 40.0 if dx is None else float(dx)
    quad = QuadratureSpec(rel_tol=1e-4) if quad is None else quad
    scene = slab_pair_1d(material, s=T, a=a, margin=T / 2)
    problem = ForceProblem(scene, dx, (polarization,))
    s0 = 2 * math.pi / a
    # the inner integrals die off exponentially in w; an absolute floor on
    # the scale of the 1D force keeps round-off from driving refinement
    inner = QuadratureSpec(rel_tol=quad.rel_tol, abs_tol=1e-3 * quad.rel_tol / a**2,
                           max_subdivisions=quad.max_subdivisions)

    def over_k(w):
        f = lambda k: problem.integrand(w, polarization, k_transverse=k)[0]
        return integrate_w(f, inner, w_scale=max(w, 1.0 / a)).value / math.pi

    return integrate_w(over_k, quad, w_scale=s0).value


def pfa_slabs_2d(material: Material, s, a, **kw) -> dict:
    """PFA force for 2D squares of ``material`` from the slab pressure.

    Returns ``{"TM": ..., "TE": ..., "mean": ...}`` (each times ``s``).
    ``mean`` is the polarization average, the quantity that reduces to
    :func:`pfa_2d_squares` for perfect metal.
    """
    _positive(s=s, a=a)
    if isinstance(material, PerfectMetal) and not kw:
        v = pfa_2d_squares(s, a)
        return {"TM": v, "TE": v, "mean": v}
    out = {p: s * slab_pressure_2d(material, a, p, **kw) for p in ("TM", "TE")}
    out["mean"] = 0.5 * (out["TM"] + out["TE"])
    return out
