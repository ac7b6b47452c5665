"""Self-checks behind ``casimir-fdfd validate``.

The 1D checks compare against the exact force of two perfect-metal points
on a ring of length ``L``, ``pi/24 (1/a^2 - 1/(L-a)^2)``, which is the
value all three methods converge to on the periodic grid.
"""

from __future__ import annotations

import math

import numpy as np

from .force import ForceProblem, compute_force
from .green_stress import box_contour, contour_integral, default_contour, rasterize_for
from .geometry import Scene
from .pedagogy_1d import energy_method_integrand, force_energy_difference
from .quadrature import QuadratureSpec, integrate_w
from .reference_models import force_1d_analytic
from .scenes import parallel_plates_1d, two_squares

__all__ = ["ring_force_1d", "run_checks", "vacuum_null_ratio"]


def ring_force_1d(a, L):
    """Exact per-polarization force on a point plate of a two-plate ring."""
    return force_1d_analytic(a) - force_1d_analytic(L - a)


def _stress_1d(dx, a=1.0, L=5.0, subtract=True, rel_tol=1e-6):
    res = compute_force(parallel_plates_1d(a, L), dx, ("TM",), QuadratureSpec(rel_tol=rel_tol), subtract=subtract)
    return float(res.F[0])


def _energy_1d(dx, a=1.0, L=5.0, rel_tol=1e-6):
    return integrate_w(lambda w: energy_method_integrand(a, L, dx, w), QuadratureSpec(rel_tol=rel_tol),
                       w_scale=2 * math.pi / a).value


def vacuum_null_ratio(w, polarization, n=32, dx=1 / 16):
    """``|closed-contour integrand| / sum |T . n| dS`` in empty space."""
    scene = Scene((), (n * dx, n * dx))
    dom = rasterize_for(scene, dx, polarization)
    c = box_contour(dom, [(n // 4, 3 * n // 4), (n // 3, 2 * n // 3)])
    F, T = contour_integral(dom, w, polarization, c, return_samples=True)
    tn = np.einsum("sij,sj->si", T[:, :2, :2], c.normals)
    scale = np.abs(tn).sum() * dx
    return float(np.linalg.norm(F) / scale)


def run_checks(quick=False):
    """Yield ``(name, ok, detail)`` for every check."""
    a, L, dx = 1.0, 5.0, 0.05
    exact = ring_force_1d(a, L)

    eig = force_energy_difference(a, L, dx)
    en = _energy_1d(dx)
    rel = abs(eig - en) / abs(eig)
    yield "eigenmode sum equals energy-density integral (dx=0.05)", rel <= 1e-6, f"rel. diff {rel:.2e} <= 1e-6"

    st = _stress_1d(dx)
    rel = abs(st - exact) / exact
    yield "stress-tensor 1D force vs exact ring value (dx=0.05)", rel <= 0.02, f"{st:.6f} vs {exact:.6f}, {rel:.2%} <= 2%"

    rel = abs(eig - exact) / exact
    yield "eigenmode 1D force vs exact ring value (dx=0.05)", rel <= 0.1, f"{eig:.6f} vs {exact:.6f}, {rel:.2%} <= 10%"

    if not quick:
        # first-order Richardson extrapolation of the finite-difference methods
        # and second-order extrapolation of the stress method
        e2 = force_energy_difference(a, L, dx / 2)
        eig_x = 2 * e2 - eig
        st2 = _stress_1d(dx / 2)
        st_x = (4 * st2 - st) / 3
        for name, v in (("eigenmode", eig_x), ("stress-tensor", st_x)):
            rel = abs(v - exact) / exact
            yield f"{name} extrapolated to dx -> 0 vs exact ring value", rel <= 0.01, f"{v:.6f}, {rel:.2%} <= 1%"

    worst = max(vacuum_null_ratio(w, p) for w in (0.5, 2.0, 8.0) for p in ("TM", "TE"))
    yield "vacuum closed-contour integrand", worst <= 1e-6, f"max relative {worst:.1e} <= 1e-6"

    sc = two_squares(offset=0.25)
    gdx = 1 / 16
    quad = QuadratureSpec(rel_tol=1e-3)
    if quick:
        ws = (0.5, 2.0)
        FA = FB = np.zeros(2)
        for p in ("TM", "TE"):
            dom = rasterize_for(sc, gdx, p)
            for w in ws:
                FA = FA + contour_integral(dom, w, p, default_contour(sc, dom, "A"))
                FB = FB + contour_integral(dom, w, p, default_contour(sc, dom, "B"))
    else:
        FA = compute_force(sc, gdx, quad=quad, subtract=False).F
        FB = compute_force(sc.with_target("B"), gdx, quad=quad, subtract=False).F
    rel = float(np.linalg.norm(FA + FB) / np.linalg.norm(FA))
    yield "Newton's third law, two offset squares", rel <= 0.02, f"|F_A + F_B|/|F_A| = {rel:.1e} <= 2%"
