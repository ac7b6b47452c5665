"""Scene description and rasterization onto the finite-difference grid.

Coordinates are in units of the scene's reference length.  A scene of
dimension ``d`` lives in a periodic cell ``[origin, origin + cell)``; grid
nodes sit at ``origin + i*dx`` and the edge between nodes ``i`` and
``i + 1`` along an axis sits at ``origin + (i + 1/2)*dx``.

Dielectric bodies are sampled with half-open intervals ``[lo, hi)`` so a
body of width ``s`` covers exactly ``s/dx`` nodes.  Perfect metal is
sampled with closed intervals, so a metal surface on a node plane is
resolved exactly: the out-of-plane E of TM vanishes on it, and the
tangential in-plane E of TE vanishes on the edges lying in it.

The TE problem lives on the dual (Yee) lattice: a *staggered* domain has
its nodes at the cell centers, ``origin + (i + 1/2)*dx``, and its edges on
the primal faces, which is where the in-plane E components sit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .materials import VACUUM, Material, PerfectMetal

__all__ = [
    "Rectangle",
    "Disk",
    "Slab",
    "HalfPlaneSlab",
    "Body",
    "Scene",
    "DiscretizedDomain",
    "GeometryError",
    "rasterize",
    "shift_body",
    "body_gap",
]

_TOL = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned box given by its center and full widths."""

    center: tuple
    widths: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "widths", tuple(float(c) for c in self.widths))
        if len(self.center) != len(self.widths):
            raise GeometryError("Rectangle center and widths differ in dimension")
        if any(wd <= 0 for wd in self.widths):
            raise GeometryError("Rectangle widths must be positive")

    def contains(self, points, cell, closed=False):
        inside = np.ones(np.shape(points[0]), dtype=bool)
        for x, c, wd in zip(points, self.center, self.widths):
            hi = (x <= c + wd / 2 + _TOL) if closed else (x < c + wd / 2 - _TOL)
            inside &= (x >= c - wd / 2 - _TOL) & hi
        return inside

    def bounds(self, axis):
        return self.center[axis] - self.widths[axis] / 2, self.center[axis] + self.widths[axis] / 2

    def min_feature(self):
        return min(self.widths)

    def translated(self, axis, distance):
        c = list(self.center)
        c[axis] += distance
        return replace(self, center=tuple(c))


@dataclass(frozen=True)
class Disk:
    """Disk of radius ``radius`` (the cross-section of a z-invariant cylinder)."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 2:
            raise GeometryError("Disk is a 2D shape")
        if self.radius <= 0:
            raise GeometryError("Disk radius must be positive")

    def contains(self, points, cell, closed=False):
        r2 = (points[0] - self.center[0]) ** 2 + (points[1] - self.center[1]) ** 2
        if closed:
            return r2 <= (self.radius + _TOL) ** 2
        return r2 < (self.radius - _TOL) ** 2

    def bounds(self, axis):
        return self.center[axis] - self.radius, self.center[axis] + self.radius

    def min_feature(self):
        return 2 * self.radius

    def translated(self, axis, distance):
        c = list(self.center)
        c[axis] += distance
        return replace(self, center=tuple(c))


@dataclass(frozen=True)
class Slab:
    """Layer normal to ``axis`` that spans the cell in every other direction.

    The layer occupies ``[position - thickness/2, position + thickness/2)``
    (closed at both ends when sampled as perfect metal)
    along ``axis`` and wraps periodically, so it may touch or cross the cell
    boundary.  A zero thickness describes an infinitely thin perfect-metal
    sheet; it must sit on a node plane and covers exactly that plane.
    """

    axis: int
    position: float
    thickness: float

    def __post_init__(self):
        object.__setattr__(self, "position", float(self.position))
        object.__setattr__(self, "thickness", float(self.thickness))
        if self.thickness < 0:
            raise GeometryError("Slab thickness must be >= 0")

    def _offset(self, x, cell):
        # signed distance from the slab center, folded into [-L/2, L/2)
        L = cell[self.axis]
        return np.mod(x - self.position + L / 2, L) - L / 2

    def contains(self, points, cell, closed=False):
        d = self._offset(points[self.axis], cell)
        if self.thickness == 0:
            return np.abs(d) <= _TOL
        t = self.thickness
        hi = (d <= t / 2 + _TOL) if closed else (d < t / 2 - _TOL)
        return (d >= -t / 2 - _TOL) & hi

    def bounds(self, axis):
        if axis != self.axis:
            return None
        return self.position - self.thickness / 2, self.position + self.thickness / 2

    def min_feature(self):
        return self.thickness

    def translated(self, axis, distance):
        if axis != self.axis:
            # sliding a slab along itself changes nothing
            return self
        return replace(self, position=self.position + distance)


HalfPlaneSlab = Slab


@dataclass(frozen=True)
class Body:
    """A shape filled with one material.

    ``fixed`` marks environment bodies (for example the side walls of a
    piston).  They are never the force target and stay present in every
    isolated-body variant used for subtraction.
    """

    shape: object
    material: Material
    id: str
    fixed: bool = False


def _interval_gap(a, b):
    return max(b[0] - a[1], a[0] - b[1], 0.0)


@dataclass(frozen=True)
class Scene:
    """Bodies in a periodic cell.

    Parameters
    ----------
    bodies : sequence of Body
        Later bodies win where shapes overlap (when overlap is allowed).
    cell : tuple of float
        Cell extents ``(L_x,)`` or ``(L_x, L_y)``.
    target : str or None
        Id of the body whose force is computed.
    a : float
        Reference length; all coordinates are already in its units.
    params : mapping
        Named geometric parameters (gap ``a``, side ``s``, wall distance
        ``h``, period ``Lambda``) kept for reporting.
    origin : tuple of float, optional
        Lower corner of the cell; defaults to ``-cell/2``.
    margin : float, optional
        Minimum vacuum distance between the bodies and their periodic
        images; defaults to twice the largest body-body gap.
    bloch_axis : int, optional
        Cell axis treated as the period of a periodic structure.
    allow_overlap : bool
        Permit bodies with different ids to overlap.
    """

    bodies: tuple
    cell: tuple
    target: str | None = None
    a: float = 1.0
    params: Mapping[str, float] = field(default_factory=dict)
    origin: tuple | None = None
    margin: float | None = None
    bloch_axis: int | None = None
    allow_overlap: bool = False

    def __post_init__(self):
        object.__setattr__(self, "bodies", tuple(self.bodies))
        object.__setattr__(self, "cell", tuple(float(c) for c in self.cell))
        if self.origin is None:
            object.__setattr__(self, "origin", tuple(-c / 2 for c in self.cell))
        else:
            object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        object.__setattr__(self, "params", dict(self.params))
        self._validate()

    @property
    def dimension(self):
        return len(self.cell)

    def body(self, body_id):
        for b in self.bodies:
            if b.id == body_id:
                return b
        raise KeyError(f"no body with id {body_id!r}")

    @property
    def movable(self):
        return tuple(b for b in self.bodies if not b.fixed)

    @property
    def environment(self):
        return tuple(b for b in self.bodies if b.fixed)

    def with_target(self, body_id):
        """The same scene with another target body."""
        return replace(self, target=body_id, margin=self.effective_margin())

    def only(self, body_ids):
        """Copy of the scene keeping the listed bodies plus all fixed ones."""
        keep = tuple(b for b in self.bodies if b.fixed or b.id in body_ids)
        target = self.target if any(b.id == self.target for b in keep) else None
        return replace(self, bodies=keep, target=target, margin=self.effective_margin())

    def _validate(self):
        d = self.dimension
        if d not in (1, 2):
            raise GeometryError("only 1D and 2D cells are supported")
        if any(c <= 0 for c in self.cell):
            raise GeometryError("cell extents must be positive")
        ids = [b.id for b in self.bodies]
        if len(set(ids)) != len(ids):
            raise GeometryError("body ids must be unique")
        if self.target is not None:
            tb = self.body(self.target)
            if tb.fixed:
                raise GeometryError("the target cannot be a fixed environment body")
        if self.bloch_axis is not None and not 0 <= self.bloch_axis < d:
            raise GeometryError("bloch_axis out of range")
        for b in self.bodies:
            s = b.shape
            if isinstance(s, Slab):
                if s.axis >= d:
                    raise GeometryError(f"slab axis {s.axis} invalid in {d}D")
                if s.thickness == 0 and not isinstance(b.material, PerfectMetal):
                    raise GeometryError("zero-thickness slabs must be perfect metal")
                continue
            if d == 1:
                raise GeometryError("1D scenes accept only slabs")
            if isinstance(s, Rectangle) and len(s.center) != d:
                raise GeometryError("rectangle dimension does not match the cell")
            for ax in range(d):
                lo, hi = s.bounds(ax)
                clo, chi = self.origin[ax], self.origin[ax] + self.cell[ax]
                if not (lo > clo + _TOL and hi < chi - _TOL):
                    raise GeometryError(f"body {b.id!r} is not strictly inside the cell")
        self._check_margin()

    def largest_gap(self):
        """Largest bounding-box separation between two movable bodies."""
        gaps = []
        for b1, b2 in itertools.combinations(self.movable, 2):
            dist2 = 0.0
            for ax in range(self.dimension):
                i1, i2 = b1.shape.bounds(ax), b2.shape.bounds(ax)
                if i1 is None or i2 is None:
                    continue
                dist2 += _interval_gap(i1, i2) ** 2
            gaps.append(math.sqrt(dist2))
        return max(gaps) if gaps else 0.0

    def effective_margin(self):
        return 2.0 * self.largest_gap() if self.margin is None else float(self.margin)

    def wrap_gap(self, axis):
        """Vacuum distance between the bodies and their periodic images.

        Returns ``inf`` when a fixed perfect-metal slab normal to ``axis``
        screens the wrap-around path, or when no body is bounded along it.
        """
        intervals = []
        for b in self.bodies:
            s = b.shape
            if b.fixed and isinstance(s, Slab) and s.axis == axis and isinstance(b.material, PerfectMetal):
                return math.inf
            iv = s.bounds(axis)
            if iv is not None:
                intervals.append(iv)
        if not intervals:
            return math.inf
        lo = min(i[0] for i in intervals)
        hi = max(i[1] for i in intervals)
        return self.cell[axis] - (hi - lo)

    def _check_margin(self):
        m = self.effective_margin()
        for ax in range(self.dimension):
            if self.wrap_gap(ax) < m - _TOL:
                raise GeometryError(
                    f"wrap-around margin along axis {ax} is {self.wrap_gap(ax):.6g}, below the required {m:.6g}"
                )


def body_gap(scene: Scene, id1: str, id2: str, axis: int) -> float:
    """Gap between two bodies along ``axis`` (direct, not through the wrap)."""
    i1 = scene.body(id1).shape.bounds(axis)
    i2 = scene.body(id2).shape.bounds(axis)
    return _interval_gap(i1, i2)


def shift_body(scene: Scene, body_id: str, axis: int, distance: float) -> Scene:
    """Return a copy of ``scene`` with one body translated along ``axis``.

    The margin used for validation is the one of the original scene, so a
    shift cannot silently relax the wrap-around requirement.
    """
    scene.body(body_id)  # raises if absent
    if distance == 0:
        return scene
    bodies = tuple(
        replace(b, shape=b.shape.translated(axis, distance)) if b.id == body_id else b for b in scene.bodies
    )
    try:
        return replace(scene, bodies=bodies, margin=scene.effective_margin())
    except GeometryError as exc:
        raise GeometryError(f"shifting {body_id!r} by {distance} violates the cell margins: {exc}") from None


@dataclass(frozen=True, eq=False)
class DiscretizedDomain:
    """A scene sampled on a uniform periodic grid.

    Attributes
    ----------
    dx : float
        Grid spacing.
    shape : tuple of int
        Number of nodes per axis.
    origin : tuple of float
        Coordinate of node ``(0, ..., 0)``.
    materials : tuple of Material
        Material table; index 0 is vacuum.
    node_material : ndarray of int
        Material index at every node.
    edge_material : tuple of ndarray
        Material index at the edges along each axis; entry ``i`` of axis
        ``k`` is the edge between node ``i`` and ``i + e_k``.
    metal : ndarray of bool
        Perfect-metal mask at nodes; these nodes carry no unknowns.
    body_map : ndarray of int
        Index into ``body_ids`` of the body covering each node, or -1.
    staggered : bool
        True for the dual lattice (nodes at cell centers) used by TE.
    """

    dx: float
    shape: tuple
    origin: tuple
    materials: tuple
    node_material: np.ndarray
    edge_material: tuple
    metal: np.ndarray
    body_map: np.ndarray
    body_ids: tuple
    boundary: tuple
    staggered: bool = False

    @property
    def dimension(self):
        return len(self.shape)

    @property
    def cell(self):
        return tuple(n * self.dx for n in self.shape)

    @property
    def unknown_index(self):
        idx = self.__dict__.get("_unknown_index")
        if idx is None:
            idx = np.full(self.shape, -1, dtype=np.int64)
            idx[~self.metal] = np.arange(int((~self.metal).sum()))
            idx.setflags(write=False)
            self.__dict__["_unknown_index"] = idx
        return idx

    @property
    def N(self):
        return int((~self.metal).sum())

    def node_coords(self, axis):
        return self.origin[axis] + self.dx * np.arange(self.shape[axis])

    def index_of(self, coords):
        """Nearest node index of a point; raises if it is not on the grid."""
        idx = []
        for ax, x in enumerate(coords):
            f = (x - self.origin[ax]) / self.dx
            i = int(round(f))
            if abs(f - i) > 1e-6:
                raise GeometryError(f"coordinate {x} is not on a grid node")
            idx.append(i % self.shape[ax])
        return tuple(idx)

    def is_vacuum_node(self, index):
        return self.node_material[index] == 0


def _grid(origin, dx, shape, offsets):
    axes = [origin[k] + dx * (np.arange(shape[k]) + offsets[k]) for k in range(len(shape))]
    return np.meshgrid(*axes, indexing="ij")


def rasterize(scene: Scene, dx: float, allow_overlap: bool | None = None, staggered: bool = False) -> DiscretizedDomain:
    """Sample a scene on the grid of spacing ``dx``.

    With ``staggered=True`` the nodes sit at the cell centers of the
    ordinary grid (the lattice of the TE problem).

    Raises
    ------
    GeometryError
        If ``dx`` does not divide the cell, a body is thinner than four
        grid spacings ("under-resolved body"), a zero-thickness sheet is off
        the node planes, or two bodies overlap without permission.
    """
    dx = float(dx)
    if dx <= 0:
        raise GeometryError("dx must be positive")
    shape = []
    for L in scene.cell:
        n = int(round(L / dx))
        if n < 1 or abs(n * dx - L) > 1e-9 * max(L, 1.0):
            raise GeometryError(f"dx={dx} does not divide the cell extent {L}")
        shape.append(n)
    shape = tuple(shape)
    d = len(shape)
    if allow_overlap is None:
        allow_overlap = scene.allow_overlap

    materials = [VACUUM]
    body_mat = []
    for b in scene.bodies:
        if b.material not in materials:
            materials.append(b.material)
        body_mat.append(materials.index(b.material))
        feat = b.shape.min_feature()
        if feat > 0 and feat < 4 * dx - 1e-9:
            raise GeometryError(f"under-resolved body {b.id!r}: feature {feat} < 4*dx = {4 * dx}")

    cell = scene.cell
    origin = tuple(o + (dx / 2 if staggered else 0.0) for o in scene.origin)
    node_pts = _grid(origin, dx, shape, [0.0] * d)
    node_material = np.zeros(shape, dtype=np.int16)
    body_map = np.full(shape, -1, dtype=np.int16)
    owner = np.full(shape, -1, dtype=np.int16)
    edge_material = []
    for k in range(d):
        edge_material.append(np.zeros(shape, dtype=np.int16))
    edge_pts = [_grid(origin, dx, shape, [0.5 if j == k else 0.0 for j in range(d)]) for k in range(d)]

    for bi, b in enumerate(scene.bodies):
        s = b.shape
        if isinstance(s, Slab) and s.thickness == 0:
            f = (s.position - scene.origin[s.axis]) / dx
            if abs(f - round(f)) > 1e-6:
                raise GeometryError(f"zero-thickness sheet {b.id!r} is not on a node plane")
        # overlap is judged on interiors so metal bodies may touch
        interior = s.contains(node_pts, cell)
        if not allow_overlap and np.any(interior & (owner >= 0)):
            other = scene.bodies[int(owner[interior & (owner >= 0)].flat[0])].id
            raise GeometryError(f"bodies {other!r} and {b.id!r} overlap")
        owner[interior] = bi
        closed = isinstance(b.material, PerfectMetal)
        mask = s.contains(node_pts, cell, closed=closed)
        node_material[mask] = body_mat[bi]
        body_map[mask] = bi
        for k in range(d):
            edge_material[k][s.contains(edge_pts[k], cell, closed=closed)] = body_mat[bi]

    metal_idx = [i for i, m in enumerate(materials) if isinstance(m, PerfectMetal)]
    metal = np.isin(node_material, metal_idx)
    for arr in [node_material, body_map, metal, *edge_material]:
        arr.setflags(write=False)
    return DiscretizedDomain(
        dx=dx,
        shape=shape,
        origin=origin,
        materials=tuple(materials),
        node_material=node_material,
        edge_material=tuple(edge_material),
        metal=metal,
        body_map=body_map,
        body_ids=tuple(b.id for b in scene.bodies),
        boundary=("periodic",) * d,
        staggered=staggered,
    )
