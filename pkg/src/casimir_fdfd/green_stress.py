"""Field correlations, stress tensor and contour integrals.

For one polarization the unknown ``psi`` (E_z for TM, H_z for TE) solves
``A psi = delta / dx^d`` and ``G = A^-1 / dx^d`` is its Green's function on
the grid.  The in-plane field is the rotated gradient ``F_x = d_y psi``,
``F_y = -d_x psi``; writing ``phi = P psi`` for the edge differences, the
identity

    w^2 (P M^-1 P^H + w^2 K^-1)^-1 = K - K P A^-1 P^H K

gives the in-plane Green's function (the right-hand side of the in-plane
curl-curl problem) from node-source solves alone.  Every correlation at a
stress sample is therefore a small linear combination of entries of ``G``
between nearby nodes, and a contour needs about two solves per sample.

Sign convention: correlations are the imaginary-frequency spectral
densities obtained by rotating the real-frequency integral onto the
imaginary axis, ``<E_j E_k>_w = -(1/pi) w^2 G_jk`` (and likewise for H).
With this sign the stress tensor has its textbook form, ``T_xx`` in the gap
between attracting plates exceeds its value outside, and the force on the
enclosed body is ``F_i = sum_j oint T_ij n_j dS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DiscretizedDomain, GeometryError, Scene, rasterize
from .grid_operator import OperatorSpec
from .linear_solver import DirectSolver, SolveOptions, cg_inverse_block

__all__ = [
    "StressContour",
    "FieldCorrelations",
    "StressSample",
    "ForceResult",
    "ContourError",
    "box_contour",
    "default_contour",
    "correlations_at",
    "stress_at",
    "contour_integral",
    "contour_integrals",
    "rasterize_for",
    "subtraction_variants",
    "subtracted_contour_integral",
    "stress_map",
    "write_raster",
    "read_raster",
]


class ContourError(GeometryError):
    pass


# ---------------------------------------------------------------------------
# contours


@dataclass(frozen=True, eq=False)
class StressContour:
    """Closed grid-aligned surface made of edge-centred segments.

    Segment ``s`` sits on the edge that starts at node ``index[s]`` and runs
    along ``normal_axis[s]``; its outward normal is ``sign[s]`` times that
    axis.  Indices may lie outside ``[0, n)``; they are understood
    periodically.
    """

    normal_axis: np.ndarray
    sign: np.ndarray
    index: np.ndarray
    dx: float
    origin: tuple
    shape: tuple
    target: str | None = None

    def __len__(self):
        return len(self.sign)

    @property
    def dimension(self):
        return len(self.shape)

    @property
    def lengths(self):
        ell = self.dx ** (self.dimension - 1)
        return np.full(len(self), ell)

    @property
    def normals(self):
        n = np.zeros((len(self), self.dimension))
        n[np.arange(len(self)), self.normal_axis] = self.sign
        return n

    @property
    def midpoints(self):
        pts = np.asarray(self.origin) + self.dx * self.index.astype(float)
        pts[np.arange(len(self)), self.normal_axis] += 0.5 * self.dx
        return pts

    def closure(self):
        """Sum of normal times length; zero for a closed contour."""
        return (self.normals * self.lengths[:, None]).sum(axis=0)

    def is_closed(self):
        return bool(np.all(np.abs(self.closure()) <= 1e-12 * max(1.0, len(self) * self.dx)))


def box_contour(domain: DiscretizedDomain, bounds, target=None) -> StressContour:
    """Rectangle with sides on edge planes.

    Parameters
    ----------
    bounds : sequence
        Per axis, ``(lo, hi)`` node indices: the sides sit on the edges
        ``lo + 1/2`` and ``hi + 1/2``.  ``None`` means the contour runs
        through the whole periodic extent of that axis (no sides normal to
        it), as needed around slabs.
    """
    d = domain.dimension
    bounds = list(bounds)
    if len(bounds) != d:
        raise ContourError("bounds need one entry per axis")
    ranges = []
    for ax, b in enumerate(bounds):
        if b is None:
            ranges.append(np.arange(domain.shape[ax]))
        else:
            lo, hi = int(b[0]), int(b[1])
            if hi <= lo or hi - lo >= domain.shape[ax]:
                raise ContourError(f"invalid contour bounds {b} on axis {ax}")
            ranges.append(np.arange(lo + 1, hi + 1))
    axes, signs, idx = [], [], []
    for ax, b in enumerate(bounds):
        if b is None:
            continue
        others = [ranges[t] for t in range(d) if t != ax]
        grids = np.meshgrid(*others, indexing="ij") if others else []
        count = int(np.prod([len(r) for r in others])) if others else 1
        for sgn, plane in ((-1, int(b[0])), (1, int(b[1]))):
            ind = np.zeros((count, d), dtype=np.int64)
            ind[:, ax] = plane
            k = 0
            for t in range(d):
                if t == ax:
                    continue
                ind[:, t] = grids[k].ravel()
                k += 1
            axes.append(np.full(count, ax))
            signs.append(np.full(count, sgn))
            idx.append(ind)
    if not axes:
        raise ContourError("a contour needs at least one bounded axis")
    return StressContour(
        normal_axis=np.concatenate(axes),
        sign=np.concatenate(signs).astype(float),
        index=np.concatenate(idx),
        dx=domain.dx,
        origin=tuple(domain.origin),
        shape=tuple(domain.shape),
        target=target,
    )


def _edge_plane(x, origin, dx, toward):
    # the nearest edge plane on the ``toward`` side (+1 or -1) of x, so both
    # sides of a contour round toward the body and mirror images stay mirrored
    f = (x - origin) / dx - 0.5
    if toward > 0:
        return int(math.ceil(f - 1e-9))
    return int(math.floor(f + 1e-9))


def default_contour(scene: Scene, domain: DiscretizedDomain, target=None, max_standoff=None) -> StressContour:
    """Rectangle around the target, midway to the nearest body on each side.

    On every side the distance to the nearest other body (or periodic image)
    along that axis is halved, and the standoff never exceeds a third of the
    gap to the target's own image; ``max_standoff``
    optionally caps it.  Only bodies whose extent overlaps the target's in
    the other directions count as neighbours.  Axes along which the target
    is unbounded (slabs) are crossed completely.
    """
    target = scene.target if target is None else target
    if target is None:
        raise ContourError("scene has no target body")
    tb = scene.body(target)
    d = scene.dimension
    bounds = []
    for ax in range(d):
        tiv = tb.shape.bounds(ax)
        if tiv is None:
            bounds.append(None)
            continue
        L = scene.cell[ax]
        # a third of the gap to the target's own image keeps the two sides
        # of the contour apart
        gap_hi = 2 * (L - (tiv[1] - tiv[0])) / 3
        gap_lo = gap_hi
        for b in scene.bodies:
            if b.id == target:
                continue
            biv = b.shape.bounds(ax)
            if biv is None:
                continue
            if not _overlaps_transverse(tb.shape, b.shape, ax, d):
                continue
            gap_hi = min(gap_hi, (biv[0] - tiv[1]) % L)
            gap_lo = min(gap_lo, (tiv[0] - biv[1]) % L)
        s_hi, s_lo = gap_hi / 2, gap_lo / 2
        if max_standoff is not None:
            s_hi, s_lo = min(s_hi, max_standoff), min(s_lo, max_standoff)
        o = domain.origin[ax]
        lo = _edge_plane(tiv[0] - s_lo, o, domain.dx, +1)
        hi = _edge_plane(tiv[1] + s_hi, o, domain.dx, -1)
        bounds.append((lo, hi))
    c = box_contour(domain, bounds, target=target)
    check_contour(domain, c)
    return c


def _overlaps_transverse(s1, s2, ax, d):
    for t in range(d):
        if t == ax:
            continue
        i1, i2 = s1.bounds(t), s2.bounds(t)
        if i1 is None or i2 is None:
            continue
        if i1[1] <= i2[0] or i2[1] <= i1[0]:
            return False
    return True


def check_contour(domain: DiscretizedDomain, contour: StressContour, clearance: int = 2):
    """Raise unless every segment has vacuum within ``clearance`` cells."""
    if not contour.is_closed():
        raise ContourError("contour is not closed")
    d = domain.dimension
    offs = np.arange(-clearance, clearance + 1)
    for s in range(len(contour)):
        base = contour.index[s]
        ax = contour.normal_axis[s]
        ranges = []
        for t in range(d):
            if t == ax:
                ranges.append(np.arange(base[t] - clearance + 1, base[t] + clearance + 1))
            else:
                ranges.append(base[t] + offs)
        grid = np.ix_(*[np.mod(r, domain.shape[t]) for t, r in enumerate(ranges)])
        if np.any(domain.node_material[grid] != 0):
            raise ContourError(
                f"contour segment at {contour.midpoints[s]} is closer than {clearance}dx to a material interface"
            )


# ---------------------------------------------------------------------------
# correlations and stress


@dataclass(frozen=True)
class FieldCorrelations:
    """Equal-point correlation tensors (x, y, z) at one sample point."""

    EE: np.ndarray
    HH: np.ndarray
    polarization: str


@dataclass(frozen=True)
class StressSample:
    """In-plane (x, y) block of the stress tensor at one sample point."""

    T: np.ndarray


@dataclass
class ForceResult:
    """Force obtained by frequency integration.

    ``F`` is the total over the computed polarizations; ``parts`` maps each
    polarization to its own vector.  ``error`` is the quadrature error
    estimate of the total.
    """

    F: np.ndarray
    parts: dict
    error: float
    n_evals: int
    unit: str
    dx: float = float("nan")
    cell: tuple = ()
    contour: StressContour | None = None
    w_samples: tuple = ()
    integrand: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    @property
    def TM(self):
        return self.parts.get("TM")

    @property
    def TE(self):
        return self.parts.get("TE")

    @property
    def total(self):
        return self.F


def _stress_from(EE, HH):
    """Stress tensor (in-plane block) from stacked 3x3 correlations."""
    eye = np.eye(3)
    T = HH - 0.5 * np.trace(HH, axis1=-2, axis2=-1)[..., None, None] * eye
    T = T + EE - 0.5 * np.trace(EE, axis1=-2, axis2=-1)[..., None, None] * eye
    return T[..., :2, :2]


def stress_at(corr: FieldCorrelations) -> StressSample:
    """``T_ij = HH_ij - tr(HH)/2 delta_ij + EE_ij - tr(EE)/2 delta_ij`` (vacuum)."""
    EE = np.asarray(corr.EE, dtype=float)
    HH = np.asarray(corr.HH, dtype=float)
    if not (np.all(np.isfinite(EE)) and np.all(np.isfinite(HH))):
        raise ValueError("correlations are not finite")
    return StressSample(_stress_from(EE, HH))


class _Functionals:
    """Linear functionals on node values, ``sum_i c_i psi(node_i)``.

    Nodes are given as unwrapped grid positions; wrapping brings them into
    the cell and contributes the Bloch factor.  At most two terms each.
    """

    def __init__(self, spec: OperatorSpec):
        self.spec = spec
        self.shape = np.array(spec.domain.shape)
        self.nodes = []  # per functional: (flat0, flat1)
        self.coef = []

    def _wrap(self, pos):
        pos = np.asarray(pos)
        turns = np.floor_divide(pos, self.shape)
        w = np.mod(pos, self.shape)
        flat = np.ravel_multi_index(tuple(w.T), tuple(self.shape))
        ph = np.ones(len(pos), dtype=complex)
        for ax, p in enumerate(self.spec.phases):
            if p != 1.0:
                ph *= np.power(complex(p), turns[:, ax])
        return flat, ph

    def edges(self, start, axis):
        """Forward differences from ``start`` (m x d) along ``axis``."""
        start = np.asarray(start)
        end = start.copy()
        end[:, axis] += 1
        f0, p0 = self._wrap(start)
        f1, p1 = self._wrap(end)
        dx = self.spec.domain.dx
        return np.stack([f0, f1], 1), np.stack([-p0 / dx, p1 / dx], 1)

    def nodes_times(self, pos, factor):
        f0, p0 = self._wrap(np.asarray(pos))
        return np.stack([f0, f0], 1), np.stack([factor * p0, np.zeros_like(p0)], 1)


def _pair(G, fa, ca, fb, cb):
    """``sum_ij ca_i conj(cb_j) G[fa_i, fb_j]`` for stacked functionals."""
    out = 0
    for i in range(2):
        for j in range(2):
            out = out + ca[..., i] * np.conj(cb[..., j]) * G(fa[..., i], fb[..., j])
    return out


def _sample_correlations(spec, G, psi_nodes, comps):
    """Correlation tensors at a stack of samples.

    Parameters
    ----------
    G : callable
        ``G(flat_u, flat_v)`` returns grid Green's function entries.
    psi_nodes : (ns, m) flat node indices averaged for the scalar term.
    comps : list of two entries (x and y in-plane functionals), each
        ``None`` or a tuple ``(nodes, coef)`` of shape ``(ns, m, 2)``; the
        values are averaged over ``m``.
    """
    d = spec.dimension
    w2 = spec.w**2
    contact = 1.0 / spec.domain.dx**d
    ns = psi_nodes.shape[0]
    psipsi = w2 * np.mean(G(psi_nodes, psi_nodes).real, axis=1)
    C = np.zeros((ns, 2, 2))
    for a in range(2):
        if comps[a] is None:
            continue
        fa, ca = comps[a]
        C[:, a, a] = np.mean(contact - _pair(G, fa, ca, fa, ca).real, axis=1)
    if comps[0] is not None and comps[1] is not None:
        fx, cx = comps[0]
        fy, cy = comps[1]
        acc = 0.0
        for i in range(fx.shape[1]):
            for j in range(fy.shape[1]):
                acc = acc - _pair(G, fx[:, i], cx[:, i], fy[:, j], cy[:, j]).real
        C[:, 0, 1] = C[:, 1, 0] = acc / (fx.shape[1] * fy.shape[1])
    # in-plane field is the rotated gradient: F_x = phi_y, F_y = -phi_x
    FF = np.empty_like(C)
    FF[:, 0, 0] = C[:, 1, 1]
    FF[:, 1, 1] = C[:, 0, 0]
    FF[:, 0, 1] = FF[:, 1, 0] = -C[:, 0, 1]
    inplane = np.zeros((ns, 3, 3))
    inplane[:, :2, :2] = FF
    normal = np.zeros((ns, 3, 3))
    normal[:, 2, 2] = psipsi
    # rotation of the spectral integral onto the imaginary axis
    scale = -1.0 / math.pi
    if spec.field_kind == "electric":
        return scale * normal, scale * inplane  # EE, HH
    return scale * inplane, scale * normal


def _segment_stencils(spec, contour: StressContour, fn: _Functionals):
    """Group segments by normal axis and build their functionals."""
    d = spec.dimension
    groups = []
    for ax in range(d):
        sel = np.flatnonzero(contour.normal_axis == ax)
        if len(sel) == 0:
            continue
        p = contour.index[sel]
        q = p.copy()
        q[:, ax] += 1
        psi = np.stack([fn._wrap(p)[0], fn._wrap(q)[0]], 1)
        comps = [None, None]
        n0, c0 = fn.edges(p, ax)
        comps[ax] = (n0[:, None, :], c0[:, None, :])
        if d == 2:
            t = 1 - ax
            starts = []
            for base in (p, q):
                lo = base.copy()
                lo[:, t] -= 1
                starts += [lo, base]
            parts = [fn.edges(s, t) for s in starts]
            comps[t] = (np.stack([x[0] for x in parts], 1), np.stack([x[1] for x in parts], 1))
        elif spec.k_transverse:
            parts = [fn.nodes_times(base, 1j * spec.k_transverse) for base in (p, q)]
            comps[1] = (np.stack([x[0] for x in parts], 1), np.stack([x[1] for x in parts], 1))
        groups.append((sel, psi, comps))
    return groups


def _green_lookup(spec, flat_nodes, solver, options):
    """Green's function restricted to a set of nodes, as a lookup callable."""
    dom = spec.domain
    uniq = np.unique(np.asarray(flat_nodes).ravel())
    unknown = dom.unknown_index.ravel()[uniq]
    if np.any(unknown < 0):
        raise ContourError("stress samples touch perfect-metal nodes")
    if solver == "direct":
        lookup = DirectSolver(spec).selected(unknown)
    elif solver == "cg":
        block = cg_inverse_block(spec, unknown, options or SolveOptions())
        lookup = lambda a, b: block[a, b]  # noqa: E731
    else:
        raise ValueError("solver must be 'direct' or 'cg'")
    scale = 1.0 / dom.dx**spec.dimension
    pos = np.full(int(np.prod(dom.shape)), -1, dtype=np.int64)
    pos[uniq] = np.arange(len(uniq))

    def G(u, v):
        return scale * lookup(pos[u], pos[v])

    return G


def _contour_stress(spec, contour, solver="direct", options=None):
    fn = _Functionals(spec)
    groups = _segment_stencils(spec, contour, fn)
    needed = []
    for _, psi, comps in groups:
        needed.append(psi.ravel())
        for c in comps:
            if c is not None:
                needed.append(c[0].ravel())
    G = _green_lookup(spec, np.concatenate(needed), solver, options)
    EE = np.zeros((len(contour), 3, 3))
    HH = np.zeros((len(contour), 3, 3))
    for sel, psi, comps in groups:
        EE[sel], HH[sel] = _sample_correlations(spec, G, psi, comps)
    return EE, HH


def _make_spec(domain, w, polarization, bloch_k=None, k_transverse=0.0):
    if polarization == "scalar" or (domain.dimension == 1 and polarization == "TM"):
        polarization = "scalar" if domain.dimension == 1 else polarization
    return OperatorSpec(domain, float(w), polarization, bloch_k=bloch_k, k_transverse=k_transverse)


def correlations_at(domain: DiscretizedDomain, w, polarization, point, *, bloch_k=None, k_transverse=0.0,
                    solver="direct") -> FieldCorrelations:
    """Correlations at an edge midpoint.

    ``point`` gives coordinates; exactly one of them must lie halfway
    between nodes, which selects the edge (and thus the stencil).
    """
    spec = _make_spec(domain, w, polarization, bloch_k, k_transverse)
    f = (np.asarray(point, dtype=float) - np.asarray(domain.origin)) / domain.dx
    half = np.abs(f - np.floor(f) - 0.5) < 1e-6
    whole = np.abs(f - np.round(f)) < 1e-6
    if half.sum() != 1 or not np.all(half | whole):
        raise ContourError("point must be an edge midpoint of the grid")
    ax = int(np.flatnonzero(half)[0])
    idx = np.round(f).astype(np.int64)
    idx[ax] = int(np.floor(f[ax]))
    c = StressContour(
        normal_axis=np.array([ax]), sign=np.array([1.0]), index=idx[None, :],
        dx=domain.dx, origin=tuple(domain.origin), shape=tuple(domain.shape),
    )
    EE, HH = _contour_stress(spec, c, solver)
    return FieldCorrelations(EE[0], HH[0], spec.polarization)


def contour_integral(domain: DiscretizedDomain, w, polarization, contour: StressContour, *, bloch_k=None,
                     k_transverse=0.0, solver="direct", options=None, return_samples=False):
    """Force integrand ``F_i(w) = sum_s sum_j T_ij n_j dS`` on one grid.

    Returns a vector with one entry per grid axis (the 1D result is the
    force per unit transverse area).  ``return_samples=True`` also returns
    the per-segment stress tensors.
    """
    spec = _make_spec(domain, w, polarization, bloch_k, k_transverse)
    if (tuple(contour.shape) != tuple(domain.shape) or contour.dx != domain.dx
            or not np.allclose(contour.origin, domain.origin)):
        raise ContourError("contour was built for a different grid")
    EE, HH = _contour_stress(spec, contour, solver, options)
    T = _stress_from(EE, HH)
    d = domain.dimension
    tn = np.einsum("sij,sj->si", T[:, :d, :d], contour.normals)
    F = (tn * contour.lengths[:, None]).sum(axis=0)
    if return_samples:
        return F, T
    return F


def contour_integrals(domain, w, polarization, contours, **kw):
    """Several contours on one grid sharing a single factorization."""
    spec = _make_spec(domain, w, polarization, kw.pop("bloch_k", None), kw.pop("k_transverse", 0.0))
    merged = StressContour(
        normal_axis=np.concatenate([c.normal_axis for c in contours]),
        sign=np.concatenate([c.sign for c in contours]),
        index=np.concatenate([c.index for c in contours]),
        dx=domain.dx, origin=tuple(domain.origin), shape=tuple(domain.shape),
    )
    EE, HH = _contour_stress(spec, merged, kw.get("solver", "direct"), kw.get("options"))
    T = _stress_from(EE, HH)
    d = domain.dimension
    out, start = [], 0
    for c in contours:
        sl = slice(start, start + len(c))
        tn = np.einsum("sij,sj->si", T[sl, :d, :d], c.normals)
        out.append((tn * c.lengths[:, None]).sum(axis=0))
        start += len(c)
    return out


def rasterize_for(scene: Scene, dx, polarization) -> DiscretizedDomain:
    """Rasterize on the lattice of ``polarization`` (staggered for TE)."""
    return rasterize(scene, dx, staggered=(polarization == "TE"))


def isolated_variants(scene: Scene):
    """Scenes with one movable body each (fixed bodies always present)."""
    return [scene.only([b.id]) for b in scene.movable]


def subtraction_variants(scene: Scene):
    """``(weight, scene)`` pairs of the isolated-body subtraction.

    The full scene enters with weight 1 and each movable body alone (with
    the fixed bodies) with weight -1.  When fixed bodies exist, the
    environment alone enters with weight ``n - 1`` so that its own grid
    artifacts, repeated in every isolated variant, cancel; without fixed
    bodies that term is a vacuum integral and is dropped.
    """
    movable = scene.movable
    out = [(1.0, scene)]
    if len(movable) < 2:
        return out
    out += [(-1.0, v) for v in isolated_variants(scene)]
    if scene.environment:
        out.append((len(movable) - 1.0, scene.only([])))
    return out


def subtracted_contour_integral(scene: Scene, dx, w, polarization, contour: StressContour, *, domains=None, **kw):
    """Full-scene integrand minus the same integrand for each isolated body.

    Fixed environment bodies are present in every variant and the
    environment-only integrand is added back ``n - 1`` times (see
    :func:`subtraction_variants`).  With a single movable body the result
    is identically zero.
    """
    if len(scene.movable) < 2:
        return np.zeros(scene.dimension)
    variants = subtraction_variants(scene)
    if domains is None:
        domains = [rasterize_for(v, dx, polarization) for _, v in variants]
    F = np.zeros(scene.dimension)
    for (wt, _), dom in zip(variants, domains):
        F = F + wt * contour_integral(dom, w, polarization, contour, **kw)
    return F


# ---------------------------------------------------------------------------
# stress maps


_COMPONENTS = {"xx": (0, 0), "xy": (0, 1), "yx": (0, 1), "yy": (1, 1)}


def valid_sample_mask(domain: DiscretizedDomain, clearance: int = 2):
    """Nodes whose ``clearance``-cell neighbourhood is all vacuum."""
    bad = domain.node_material != 0
    out = bad.copy()
    for ax in range(domain.dimension):
        acc = out.copy()
        for s in range(1, clearance + 1):
            acc |= np.roll(out, s, axis=ax) | np.roll(out, -s, axis=ax)
        out = acc
    return ~out


def _node_stress(domain, w, polarization, nodes, chunk=256):
    """Stress tensors at the given nodes from node-centred stencils."""
    spec = _make_spec(domain, w, polarization)
    d = domain.dimension
    shape = np.array(domain.shape)
    nodes = np.asarray(nodes).reshape(-1, d)
    fn = _Functionals(spec)
    psi = fn._wrap(nodes)[0][:, None]
    comps = [None, None]
    for ax in range(d):
        lo = nodes.copy()
        lo[:, ax] -= 1
        parts = [fn.edges(s, ax) for s in (lo, nodes)]
        comps[ax] = (np.stack([x[0] for x in parts], 1), np.stack([x[1] for x in parts], 1))
    # every pair of stencil nodes differs by one of these offsets
    offsets = []
    for a in range(d):
        for s in (-2, -1, 1, 2):
            o = np.zeros(d, dtype=int)
            o[a] = s
            offsets.append(o)
    if d == 2:
        for sx in (-1, 1):
            for sy in (-1, 1):
                offsets.append(np.array([sx, sy]))
    offsets = [np.zeros(d, dtype=int)] + offsets
    stencil = set()
    for n in nodes:
        for o in [np.zeros(d, dtype=int)] + [np.eye(d, dtype=int)[a] * s for a in range(d) for s in (-1, 1)]:
            stencil.add(tuple(np.mod(n + o, shape)))
    cols = np.array(sorted(stencil))
    col_flat = np.ravel_multi_index(tuple(cols.T), tuple(shape))
    unknown = domain.unknown_index.ravel()[col_flat]
    if np.any(unknown < 0):
        raise ContourError("stress samples touch perfect-metal nodes")
    solver = DirectSolver(spec)
    # offsets lie in [-2, 2]^d; encode them in base 5
    code = np.full(5**d, -1, dtype=np.int64)
    for k, o in enumerate(offsets):
        code[int(np.dot(o + 2, 5 ** np.arange(d)))] = k
    vals = np.zeros((len(cols), len(offsets)))
    rows_flat = np.array([
        np.ravel_multi_index(tuple(np.mod(cols + o, shape).T), tuple(shape)) for o in offsets
    ])  # (n_off, n_cols)
    rows_unknown = domain.unknown_index.ravel()[rows_flat]
    N = spec.N
    for start in range(0, len(cols), chunk):
        sl = slice(start, start + chunk)
        rhs = np.zeros((N, len(unknown[sl])))
        rhs[unknown[sl], np.arange(len(unknown[sl]))] = 1.0
        sol = solver.solve(rhs).real
        ru = rows_unknown[:, sl]
        got = np.where(ru >= 0, sol[np.maximum(ru, 0), np.arange(ru.shape[1])[None, :]], 0.0)
        vals[sl] = got.T
    vals /= domain.dx**d
    col_pos = np.full(int(np.prod(shape)), -1, dtype=np.int64)
    col_pos[col_flat] = np.arange(len(col_flat))
    unr = np.array(np.unravel_index(np.arange(int(np.prod(shape))), tuple(shape))).T

    def G(u, v):
        u = np.asarray(u)
        v = np.asarray(v)
        du = unr[u] - unr[v]
        du = (du + shape // 2) % shape - shape // 2
        if np.any(np.abs(du) > 2):
            raise RuntimeError("stencil offset outside the precomputed set")
        k = code[((du + 2) * 5 ** np.arange(d)).sum(axis=-1)]
        if np.any(k < 0):
            raise RuntimeError("stencil offset outside the precomputed set")
        return vals[col_pos[v], k]

    EE, HH = _sample_correlations(spec, G, psi, comps)
    return _stress_from(EE, HH)


def stress_map(scene: Scene, dx, w, polarization, component="xx", clearance: int = 2):
    """Interaction stress ``Delta <T_ij>`` on the grid nodes.

    Computed as ``T(full) - sum_i T(body i alone) + (n - 1) T(no movable
    body)``, every variant keeping the fixed bodies.  The last term removes
    the background (vacuum, or the empty environment) that each isolated
    variant repeats; it makes single-body and empty scenes map to zero.
    Nodes closer than ``clearance`` cells to any material are NaN.

    Returns
    -------
    ndarray
        Array of shape ``(n_x, n_y)`` (or ``(n_x,)`` in 1D).  For TE the
        samples sit at the cell centers.
    """
    if component not in _COMPONENTS:
        raise ValueError("component must be one of xx, xy, yy")
    i, j = _COMPONENTS[component]
    full = rasterize_for(scene, dx, polarization)
    mask = valid_sample_mask(full, clearance)
    nodes = np.argwhere(mask)
    out = np.full(full.shape, np.nan)
    if len(nodes) == 0:
        return out
    variants = [(1.0, full)]
    movable = scene.movable
    if len(movable) >= 1:
        for s in isolated_variants(scene):
            variants.append((-1.0, rasterize_for(s, dx, polarization)))
        variants.append((len(movable) - 1.0, rasterize_for(scene.only([]), dx, polarization)))
    else:
        variants.append((-1.0, full))
    acc = np.zeros(len(nodes))
    for weight, dom in variants:
        if weight == 0:
            continue
        T = _node_stress(dom, w, polarization, nodes)
        acc += weight * T[:, i, j]
    out[tuple(nodes.T)] = acc
    return out


def write_raster(path, values, dx, w, component):
    """Plain-text raster: a header line ``nx ny dx w component`` followed by
    ``ny`` rows of ``nx`` values (row ``r`` is grid row ``y = r``)."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    nx, ny = values.shape
    with open(path, "w") as fh:
        fh.write(f"# nx ny dx w component\n{nx} {ny} {dx!r} {w!r} {component}\n")
        for r in range(ny):
            fh.write(" ".join(repr(float(v)) for v in values[:, r]) + "\n")


def read_raster(path):
    """Inverse of :func:`write_raster`; returns ``(values, meta)``."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    nx, ny, dx, w, comp = lines[0].split()
    rows = [np.array([float(v) for v in ln.split()]) for ln in lines[1 : 1 + int(ny)]]
    values = np.stack(rows, axis=1)
    return values, {"nx": int(nx), "ny": int(ny), "dx": float(dx), "w": float(w), "component": comp}
