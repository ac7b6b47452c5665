import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from casimir_fdfd.geometry import (
    Body,
    Disk,
    GeometryError,
    Rectangle,
    Scene,
    Slab,
    body_gap,
    rasterize,
    shift_body,
)
from casimir_fdfd.materials import PERFECT_METAL, ConstantDielectric

DIEL = ConstantDielectric(4.0)


def _block(side, material, cell=4.0):
    return Scene((Body(Rectangle((0.0, 0.0), (side, side)), material, "A"),), (cell, cell), target="A", margin=0.5)


def test_dielectric_block_covers_side_over_dx_nodes():
    dom = rasterize(_block(1.0, DIEL), 0.25)
    assert dom.shape == (16, 16)
    assert (dom.node_material > 0).sum() == 16
    rows = np.nonzero((dom.node_material > 0).any(axis=1))[0]
    assert len(rows) == 4


def test_metal_block_includes_both_surfaces():
    # closed sampling puts metal nodes on both faces: (s/dx + 1)^2 nodes
    dom = rasterize(_block(1.0, PERFECT_METAL), 0.25)
    assert dom.metal.sum() == 25
    assert dom.N == 16 * 16 - 25


def test_unknown_count_between_sheets():
    scene = Scene(
        (Body(Slab(0, -0.5, 0.0), PERFECT_METAL, "left"), Body(Slab(0, 0.5, 0.0), PERFECT_METAL, "right")),
        (5.0,),
        target="left",
    )
    dom = rasterize(scene, 0.05)
    x = dom.node_coords(0)
    inside = (~dom.metal) & (x > -0.5) & (x < 0.5)
    assert inside.sum() == 19  # a/dx - 1 interior nodes
    assert dom.metal.sum() == 2


def _brute_force(scene, dx, staggered=False):
    """Per-node loop oracle for the node material index."""
    shape = tuple(int(round(L / dx)) for L in scene.cell)
    off = dx / 2 if staggered else 0.0
    out = np.zeros(shape, dtype=int)
    mats = [None]
    for b in scene.bodies:
        if b.material not in mats:
            mats.append(b.material)
    for idx in np.ndindex(*shape):
        p = [scene.origin[k] + off + idx[k] * dx for k in range(len(shape))]
        for b in scene.bodies:
            s = b.shape
            closed = b.material is PERFECT_METAL
            inside = True
            if isinstance(s, Rectangle):
                for k in range(2):
                    lo = s.center[k] - s.widths[k] / 2
                    hi = s.center[k] + s.widths[k] / 2
                    ok = lo - 1e-9 <= p[k] <= hi + 1e-9 if closed else lo - 1e-9 <= p[k] < hi - 1e-9
                    inside &= ok
            elif isinstance(s, Disk):
                r = math.hypot(p[0] - s.center[0], p[1] - s.center[1])
                inside = r <= s.radius + 1e-9 if closed else r < s.radius - 1e-9
            if inside:
                out[idx] = mats.index(b.material)
    return out


@settings(max_examples=30, deadline=None)
@given(
    st.integers(4, 10), st.integers(4, 10), st.integers(-6, 6), st.integers(-6, 6),
    st.booleans(), st.booleans(), st.booleans(),
)
def test_rasterization_matches_brute_force(wx, wy, cx, cy, metal, disk, staggered):
    dx = 0.125
    mat = PERFECT_METAL if metal else DIEL
    if disk:
        shape = Disk((cx * dx / 2, cy * dx / 2), max(wx, wy) * dx / 2)
    else:
        shape = Rectangle((cx * dx / 2, cy * dx / 2), (wx * dx, wy * dx))
    scene = Scene((Body(shape, mat, "A"),), (4.0, 4.0), target="A", margin=1.0)
    dom = rasterize(scene, dx, staggered=staggered)
    assert np.array_equal(dom.node_material, _brute_force(scene, dx, staggered))


def test_staggered_origin_is_offset_by_half_cell():
    sc = _block(1.0, DIEL)
    a = rasterize(sc, 0.25)
    b = rasterize(sc, 0.25, staggered=True)
    assert np.allclose(np.array(b.origin) - np.array(a.origin), 0.125)
    assert b.staggered and not a.staggered


def test_edges_follow_shape():
    dom = rasterize(_block(1.0, DIEL), 0.25)
    # x-edges sit at x = origin + (i + 1/2) dx: four of them cross the block along x
    assert (dom.edge_material[0] > 0).sum() == 16


@pytest.mark.parametrize("dx", [0.3, 0.7])
def test_dx_must_divide_cell(dx):
    with pytest.raises(GeometryError, match="does not divide"):
        rasterize(_block(1.0, DIEL), dx)


def test_under_resolved_body():
    with pytest.raises(GeometryError, match="under-resolved"):
        rasterize(_block(1.0, DIEL), 0.5)


def test_overlap_rejected_and_allowed():
    bodies = (
        Body(Rectangle((0.0, 0.0), (1.0, 1.0)), DIEL, "A"),
        Body(Rectangle((0.5, 0.0), (1.0, 1.0)), PERFECT_METAL, "B"),
    )
    sc = Scene(bodies, (6.0, 6.0), target="A", margin=1.0)
    with pytest.raises(GeometryError, match="overlap"):
        rasterize(sc, 0.25)
    dom = rasterize(sc, 0.25, allow_overlap=True)
    # the later body wins
    assert dom.metal.sum() == 25


def test_touching_metal_bodies_allowed():
    bodies = (
        Body(Rectangle((-0.5, 0.0), (1.0, 1.0)), PERFECT_METAL, "A"),
        Body(Rectangle((0.5, 0.0), (1.0, 1.0)), PERFECT_METAL, "B"),
    )
    dom = rasterize(Scene(bodies, (6.0, 6.0), target="A", margin=1.0), 0.25)
    assert dom.metal.sum() == 9 * 5


def test_sheet_off_node_plane():
    sc = Scene((Body(Slab(0, 0.1, 0.0), PERFECT_METAL, "s"),), (2.0,), target="s")
    with pytest.raises(GeometryError, match="node plane"):
        rasterize(sc, 0.25)


def test_scene_validation():
    with pytest.raises(GeometryError, match="unique"):
        Scene((Body(Slab(0, 0, 0.5), DIEL, "x"), Body(Slab(0, 1, 0.5), DIEL, "x")), (4.0,))
    with pytest.raises(GeometryError, match="strictly inside"):
        Scene((Body(Rectangle((1.9, 0.0), (0.5, 0.5)), DIEL, "A"),), (4.0, 4.0))
    with pytest.raises(GeometryError, match="fixed"):
        Scene((Body(Slab(0, 0, 0.5), DIEL, "w", fixed=True),), (4.0,), target="w")
    with pytest.raises(GeometryError, match="2D shape"):
        Scene((Body(Disk((0.0,), 0.5), DIEL, "d"),), (4.0,))


def test_wrap_margin_enforced():
    bodies = (
        Body(Rectangle((-1.0, 0.0), (1.0, 1.0)), DIEL, "A"),
        Body(Rectangle((1.0, 0.0), (1.0, 1.0)), DIEL, "B"),
    )
    # gap 1 needs a wrap-around margin of 2; cell 4 leaves only 1
    with pytest.raises(GeometryError, match="margin"):
        Scene(bodies, (4.0, 4.0), target="A")
    Scene(bodies, (5.0, 4.0), target="A")


def test_shift_body_and_gap():
    bodies = (
        Body(Rectangle((-1.0, 0.0), (1.0, 1.0)), DIEL, "A"),
        Body(Rectangle((1.0, 0.0), (1.0, 1.0)), DIEL, "B"),
    )
    sc = Scene(bodies, (8.0, 4.0), target="A")
    assert body_gap(sc, "A", "B", 0) == pytest.approx(1.0)
    moved = shift_body(sc, "B", 0, 0.25)
    assert body_gap(moved, "A", "B", 0) == pytest.approx(1.25)
    assert sc.body("B").shape.center == (1.0, 0.0)  # original untouched
    assert shift_body(sc, "B", 0, 0.0) is sc
    with pytest.raises(GeometryError, match="violates"):
        shift_body(sc, "B", 0, 2.5)
    with pytest.raises(KeyError):
        shift_body(sc, "C", 0, 0.1)


def test_index_of():
    dom = rasterize(_block(1.0, DIEL), 0.25)
    assert dom.index_of((-2.0, 0.0)) == (0, 8)
    with pytest.raises(GeometryError):
        dom.index_of((0.1, 0.0))
