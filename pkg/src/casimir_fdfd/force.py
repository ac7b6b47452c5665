"""Force on a target body: contour integrand integrated over frequency.

This is the driver that ties the pieces together.  For every requested
polarization the scene (and, with subtraction, each isolated-body variant)
is rasterized once on that polarization's lattice, a contour is placed
around the target, and the force integrand is integrated over the angular
imaginary frequency ``xi`` with :func:`integrate_w`.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Scene
from .green_stress import (
    ContourError,
    ForceResult,
    contour_integral,
    default_contour,
    rasterize_for,
    subtraction_variants,
)
from .quadrature import QuadratureSpec, integrate_kz, integrate_w, z_invariant_weight

__all__ = ["ForceProblem", "compute_force", "compute_force_modes", "smallest_gap", "force_unit"]


def smallest_gap(scene: Scene) -> float:
    """Smallest bounding-box distance between two bodies (``scene.a`` if none)."""
    best = math.inf
    bodies = scene.bodies
    d = scene.dimension
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            sep = []
            for ax in range(d):
                b1, b2 = bodies[i].shape.bounds(ax), bodies[j].shape.bounds(ax)
                if b1 is None or b2 is None:
                    sep.append(0.0)
                    continue
                L = scene.cell[ax]
                g = min((b2[0] - b1[1]) % L, (b1[0] - b2[1]) % L)
                lap = not (b1[1] <= b2[0] or b2[1] <= b1[0])
                sep.append(0.0 if lap else g)
            gap = math.hypot(*sep)
            if gap > 0:
                best = min(best, gap)
    return scene.a if not math.isfinite(best) else best


def force_unit(dimension: int, mode: str) -> str:
    """Unit label of a force in ``mode`` for a scene of ``dimension``."""
    power = {"2d": 2, "bloch": 3, "zinv3d": 3}[mode] + (1 if dimension == 1 and mode == "zinv3d" else 0)
    return f"hbar*c/a^{power}"


class ForceProblem:
    """Rasterized variants and contours of one scene at one resolution.

    Parameters
    ----------
    scene : Scene
    dx : float
    polarizations : sequence of str
        Any of ``"TM"`` and ``"TE"`` (``"TM"`` is the scalar problem in 1D).
    subtract : bool
        Subtract the isolated-body integrands.
    contour : callable, optional
        ``contour(scene, domain)`` returning the StressContour to use;
        defaults to :func:`default_contour`.
    solver : {"direct", "cg"}
    options : SolveOptions, optional
        Used with ``solver="cg"``.
    """

    def __init__(self, scene: Scene, dx, polarizations=("TM", "TE"), subtract=True, contour=None,
                 solver="direct", options=None):
        if scene.target is None:
            raise ContourError("scene has no target body")
        self.scene = scene
        self.dx = float(dx)
        self.polarizations = tuple(polarizations)
        for p in self.polarizations:
            if p not in ("TM", "TE"):
                raise ValueError(f"unknown polarization {p!r}")
        self.solver = solver
        self.options = options
        pairs = subtraction_variants(scene) if subtract else [(1.0, scene)]
        self.signs = [wt for wt, _ in pairs]
        variants = [v for _, v in pairs]
        make = contour if contour is not None else (lambda sc, dom: default_contour(sc, dom))
        self.domains = {}
        self.contours = {}
        for p in self.polarizations:
            doms = [rasterize_for(v, self.dx, p) for v in variants]
            self.domains[p] = doms
            self.contours[p] = make(scene, doms[0])

    @property
    def dimension(self):
        return self.scene.dimension

    def integrand(self, w, polarization, bloch_k=None, k_transverse=0.0):
        """Force integrand vector at ``w`` for one polarization."""
        c = self.contours[polarization]
        F = np.zeros(self.dimension)
        for sgn, dom in zip(self.signs, self.domains[polarization]):
            F = F + sgn * contour_integral(dom, w, polarization, c, bloch_k=bloch_k, k_transverse=k_transverse,
                                           solver=self.solver, options=self.options)
        return F

    def bloch_integrand(self, w, polarization, quad: QuadratureSpec):
        ax = self.scene.bloch_axis
        if ax is None:
            raise ValueError("bloch mode needs a scene with a bloch_axis")
        Lam = self.scene.cell[ax]

        def at(k):
            bk = [None] * self.dimension
            bk[ax] = k
            return self.integrand(w, polarization, bloch_k=tuple(bk))

        return integrate_kz(at, Lam, quad)

    def stacked(self, w, quad: QuadratureSpec):
        """All polarizations at ``w``, concatenated (mode-independent part)."""
        parts = []
        for p in self.polarizations:
            if quad.mode == "bloch":
                parts.append(self.bloch_integrand(w, p, quad))
            else:
                parts.append(self.integrand(w, p))
        return np.concatenate(parts)


def _mode_weight(mode, dimension, scene):
    if mode == "zinv3d":
        n = 3 - dimension
        z_invariant_weight(1.0, n, scene=scene)  # validates the materials
        return lambda w: z_invariant_weight(w, n)
    return lambda w: 1.0


def compute_force_modes(scene: Scene, dx, polarizations=("TM", "TE"), quad: QuadratureSpec | None = None, *,
                        modes=("2d",), subtract=True, contour=None, solver="direct", options=None,
                        executor=None, problem: ForceProblem | None = None):
    """Forces for several frequency weightings sharing integrand samples.

    Each mode is integrated adaptively to ``quad.rel_tol``; samples taken
    for one mode are reused by the next, so e.g. ``("2d", "zinv3d")``
    costs little more than ``"2d"`` alone.

    Returns
    -------
    dict
        ``mode -> ForceResult``.
    """
    quad = QuadratureSpec() if quad is None else quad
    if problem is None:
        problem = ForceProblem(scene, dx, polarizations, subtract=subtract, contour=contour, solver=solver,
                               options=options)
    pols = problem.polarizations
    d = problem.dimension
    s0 = quad.w_scale if quad.w_scale is not None else 2 * math.pi / smallest_gap(scene)
    cache = {}
    out = {}
    total_evals = 0
    for mode in modes:
        weight = _mode_weight(mode, d, scene)
        raw = {}

        def f(w):
            v = problem.stacked(w, quad)
            raw[w] = v
            return v

        def g(w, _weight=weight):
            v = cache.get(w)
            if v is None:
                v = f(w)
                cache[w] = v
            return _weight(w) * v

        before = len(cache)
        res = integrate_w(g, quad, w_scale=s0, executor=executor)
        fresh = len(cache) - before
        total_evals += fresh
        val = np.asarray(res.value, dtype=float).reshape(len(pols), d)
        parts = {p: val[i] for i, p in enumerate(pols)}
        ws = tuple(sorted(res.samples))
        integrand = {p: np.array([res.samples[w].reshape(len(pols), d)[i] for w in ws]) for i, p in enumerate(pols)}
        out[mode] = ForceResult(
            F=val.sum(axis=0),
            parts=parts,
            error=res.error,
            n_evals=len(res.samples),
            unit=force_unit(d, mode),
            dx=problem.dx,
            cell=tuple(scene.cell),
            contour=problem.contours[pols[0]],
            w_samples=ws,
            integrand=integrand,
            errors={"fresh_evals": fresh},
        )
    return out


def compute_force(scene: Scene, dx, polarizations=("TM", "TE"), quad: QuadratureSpec | None = None, *,
                  subtract=True, contour=None, solver="direct", options=None, executor=None) -> ForceResult:
    """Force on ``scene.target`` integrated over frequency.

    The weighting follows ``quad.mode``: ``"2d"`` gives the force of the
    gridded problem itself (per unit length of the invariant direction in
    2D), ``"zinv3d"`` applies the perfect-metal invariant-direction weight
    and ``"bloch"`` integrates over the Bloch wavevector of
    ``scene.bloch_axis``.  Positive ``F`` along an axis points toward
    increasing coordinate.
    """
    quad = QuadratureSpec() if quad is None else quad
    return compute_force_modes(scene, dx, polarizations, quad, modes=(quad.mode,), subtract=subtract,
                               contour=contour, solver=solver, options=options, executor=executor)[quad.mode]
