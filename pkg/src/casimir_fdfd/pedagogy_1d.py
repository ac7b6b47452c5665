"""The two precursor methods in 1D: eigenmode summation and energy density.

Both treat two perfect-metal sheets a distance ``a`` apart on a periodic
line of length ``L`` (so the outside segment has length ``L - a``), with a
single scalar field vanishing on the sheets.  Forces are per polarization
and positive when attractive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import rasterize, shift_body
from .grid_operator import OperatorSpec
from .linear_solver import DirectSolver
from .materials import PerfectMetal, d_w2eps_dw_angular
from .scenes import parallel_plates_1d

__all__ = [
    "ModeSpectrum",
    "discrete_modes",
    "zero_point_energy",
    "force_energy_difference",
    "force_spectrum",
    "ForceSpectrum",
    "energy_method_integrand",
    "mode_energy",
]


def _cells(d, dx):
    f = d / dx
    n = int(round(f))
    if abs(f - n) > 1e-9 * max(1.0, f) or n < 2:
        raise ValueError(f"segment length {d} must be an integer multiple (>= 2) of dx = {dx}")
    return n


@dataclass(frozen=True)
class ModeSpectrum:
    """Eigenfrequencies of the discretized segments.

    ``omegas[k]`` holds the modes of the segment of length ``lengths[k]``.
    """

    omegas: tuple
    lengths: tuple
    dx: float

    @property
    def all(self):
        return np.concatenate(self.omegas) if self.omegas else np.zeros(0)


def _segment_modes(d, dx):
    n = _cells(d, dx)
    k = np.arange(n + 1)
    return (2.0 / dx) * np.sin(k * math.pi * dx / (2.0 * d))


def discrete_modes(d, dx) -> ModeSpectrum:
    """Frequencies ``(2/dx) sin(n pi dx / 2d)``, ``n = 0 .. d/dx``, of one segment.

    These are the frequencies of the second-difference operator of a
    segment of length ``d`` with the field pinned at both ends (the
    ``n = 0`` and ``n = d/dx`` entries are the edge of the band).

    Raises
    ------
    ValueError
        If ``d/dx`` is not an integer >= 2.
    """
    return ModeSpectrum((_segment_modes(d, dx),), (float(d),), float(dx))


def _plates_spectrum(a, L, dx):
    return ModeSpectrum((_segment_modes(a, dx), _segment_modes(L - a, dx)), (float(a), float(L - a)), float(dx))


def zero_point_energy(spec: ModeSpectrum) -> float:
    """``U = sum_n omega_n / 2`` over every segment (hbar = 1)."""
    return 0.5 * float(sum(np.sum(o) for o in spec.omegas))


def mode_energy(a, L, dx) -> float:
    """Zero-point energy of the two-segment ring."""
    return zero_point_energy(_plates_spectrum(a, L, dx))


def force_energy_difference(a, L, dx) -> float:
    """Finite-difference force ``[U(a + dx) - U(a)] / dx`` (positive attracts)."""
    return (mode_energy(a + dx, L, dx) - mode_energy(a, L, dx)) / dx


@dataclass(frozen=True)
class ForceSpectrum:
    """Per-mode force summands sorted by frequency.

    ``summand[i]`` is ``Delta omega / (2 dx)`` of the mode at ``omega[i]``;
    ``partial`` holds the running sums, whose last entry is the force.
    """

    omega: np.ndarray
    summand: np.ndarray
    partial: np.ndarray

    @property
    def force(self):
        return float(self.partial[-1]) if len(self.partial) else 0.0


def force_spectrum(a, L, dx) -> ForceSpectrum:
    """Mode-by-mode decomposition of :func:`force_energy_difference`.

    Modes of equal index ``n`` are paired between the configurations
    ``a`` and ``a + dx`` of each segment; the one mode without a partner
    (the segment that grows gains a mode, the other loses one) enters with
    its own frequency.
    """
    omega, summand = [], []
    for d0, d1 in ((a, a + dx), (L - a, L - a - dx)):
        w0 = _segment_modes(d0, dx)
        w1 = _segment_modes(d1, dx)
        m = min(len(w0), len(w1))
        omega.extend(w0[:m])
        summand.extend((w1[:m] - w0[:m]) / (2 * dx))
        if len(w1) > m:
            omega.extend(w1[m:])
            summand.extend(w1[m:] / (2 * dx))
        else:
            omega.extend(w0[m:])
            summand.extend(-w0[m:] / (2 * dx))
    omega = np.array(omega)
    summand = np.array(summand)
    order = np.argsort(omega, kind="stable")
    omega, summand = omega[order], summand[order]
    return ForceSpectrum(omega, summand, np.cumsum(summand))


def _energy_density_sum(domain, xi):
    """``-(1/2pi) sum_x dx xi d(xi^2 eps)/dxi G(x, x)``, one solve per node."""
    spec = OperatorSpec(domain, xi, "scalar")
    solver = DirectSolver(spec)
    keep = ~domain.metal
    mats = domain.node_material[keep]
    coeff = np.array([xi * d_w2eps_dw_angular(domain.materials[m], xi) for m in mats])
    total = 0.0
    e = np.zeros(spec.N)
    for i in range(spec.N):
        # the naive algorithm: a full solve for every grid point
        e[i] = 1.0 / domain.dx
        g = solver.solve(e)
        e[i] = 0.0
        total += coeff[i] * g[i] * domain.dx
    return -total / (2 * math.pi)


def energy_method_integrand(a, L, dx, w) -> float:
    """Force integrand at angular imaginary frequency ``w`` from the energy density.

    The energy per unit frequency is the grid trace of the Green's
    function weighted by ``w d(w^2 eps)/dw``; it is differenced between
    plate separations ``a`` and ``a + dx`` (the right sheet moves).
    Positive values attract.
    """
    if not w > 0:
        raise ValueError("w must be > 0")
    sc = parallel_plates_1d(a, L)
    moved = shift_body(sc, "right", 0, dx)
    u0 = _energy_density_sum(rasterize(sc, dx), w)
    u1 = _energy_density_sum(rasterize(moved, dx), w)
    return (u1 - u0) / dx
