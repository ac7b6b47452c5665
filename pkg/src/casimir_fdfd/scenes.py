"""Ready-made scenes for the benchmark geometries."""

from __future__ import annotations

from .geometry import Body, Disk, Rectangle, Scene, Slab
from .materials import PERFECT_METAL, Material

__all__ = ["parallel_plates_1d", "piston", "two_squares", "cylinder_plate", "slab_pair_1d"]


def parallel_plates_1d(a=1.0, L=5.0, target="left") -> Scene:
    """Two perfect-metal sheets a distance ``a`` apart in a ring of length ``L``.

    The sheets sit at ``-a/2`` and ``+a/2``.  The target (left sheet by
    default) is attracted toward ``+x``.
    """
    bodies = (
        Body(Slab(0, -a / 2, 0.0), PERFECT_METAL, "left"),
        Body(Slab(0, a / 2, 0.0), PERFECT_METAL, "right"),
    )
    return Scene(bodies, (L,), target=target, a=a, params={"a": a, "L": L})


def slab_pair_1d(material: Material, s=1.0, a=1.0, L=None, margin=None) -> Scene:
    """Two slabs of thickness ``s`` and gap ``a`` along x (1D cross-section)."""
    if L is None:
        L = 2 * s + a + 4 * a if margin is None else 2 * s + a + 2 * margin
    bodies = (
        Body(Slab(0, -(a + s) / 2, s), material, "left"),
        Body(Slab(0, (a + s) / 2, s), material, "right"),
    )
    return Scene(bodies, (L,), target="left", a=a, params={"a": a, "s": s, "L": L}, margin=margin)


def piston(h=1.0, s=1.0, a=1.0, material: Material = PERFECT_METAL, wall_thickness=None, side_margin=None,
           wall_material: Material = PERFECT_METAL) -> Scene:
    """Two ``s x s`` squares a gap ``a`` apart, between two walls at distance ``h``.

    The squares are centered on the x axis at ``x = -(a+s)/2`` ("A", the
    target) and ``x = +(a+s)/2`` ("B").  The walls are slabs normal to y at
    distance ``h`` above and below the squares, filling the cell up to its
    y boundary.  ``side_margin`` is the vacuum left of A and right of B
    (default ``2a``), so the wrap-around gap is twice that.
    """
    t = a / 4 if wall_thickness is None else wall_thickness
    side = 2 * a if side_margin is None else side_margin
    Lx = 2 * s + a + 2 * side
    Ly = s + 2 * h + 2 * t
    yw = s / 2 + h + t / 2
    bodies = (
        Body(Rectangle((-(a + s) / 2, 0.0), (s, s)), material, "A"),
        Body(Rectangle(((a + s) / 2, 0.0), (s, s)), material, "B"),
        Body(Slab(1, yw, t), wall_material, "wall_top", fixed=True),
        Body(Slab(1, -yw, t), wall_material, "wall_bottom", fixed=True),
    )
    return Scene(bodies, (Lx, Ly), target="A", a=a, params={"a": a, "s": s, "h": h}, margin=2 * side)


def two_squares(s=1.0, a=1.0, offset=0.0, side_margin=None, material: Material = PERFECT_METAL) -> Scene:
    """Two free squares with gap ``a``; B may be displaced by ``offset`` in y."""
    side = 2 * a if side_margin is None else side_margin
    Lx = 2 * s + a + 2 * side
    Ly = s + abs(offset) + 2 * side
    bodies = (
        Body(Rectangle((-(a + s) / 2, -offset / 2), (s, s)), material, "A"),
        Body(Rectangle(((a + s) / 2, offset / 2), (s, s)), material, "B"),
    )
    return Scene(bodies, (Lx, Ly), target="A", a=a, params={"a": a, "s": s, "offset": offset})


def cylinder_plate(R=1.0, a=1.0, plate_thickness=None, Lx=None, Ly=None) -> Scene:
    """Disk of radius ``R`` a distance ``a`` from a perfect-metal plate.

    The plate is a slab normal to x spanning y; the disk (target) sits to
    its left.
    """
    t = max(a, R) / 2 if plate_thickness is None else plate_thickness
    if Lx is None:
        Lx = 2 * R + a + t + 4 * max(a, R)
    if Ly is None:
        Ly = 2 * R + 4 * max(a, R)
    xc = -Lx / 2 + 2 * max(a, R) + R
    xp = xc + R + a + t / 2
    bodies = (
        Body(Disk((xc, 0.0), R), PERFECT_METAL, "cylinder"),
        Body(Slab(0, xp, t), PERFECT_METAL, "plate"),
    )
    return Scene(bodies, (Lx, Ly), target="cylinder", a=a, params={"a": a, "R": R})
