import numpy as np
import pytest

from capembed.fixtures import box_mesh, surface_selection, uv_sphere
from capembed.points import (
    Selection,
    SelectionError,
    TouchpointSet,
    build_point_geometry,
    polygon_centroid,
    polygon_normal,
)

from oracles import mesh_volume_divergence, point_in_mesh_bruteforce


def _flat_patch(z=0.0, size=2.0):
    # two triangles forming a size x size square in the z plane
    a = np.array(
        [
            [[0, 0, z], [size, 0, z], [size, size, z]],
            [[0, 0, z], [size, size, z], [0, size, z]],
        ],
        dtype=np.float64,
    )
    return a


def test_centroid_and_normal_of_flat_patch():
    patch = _flat_patch(z=3.0, size=2.0)
    assert polygon_centroid(patch) == pytest.approx([1.0, 1.0, 3.0])
    n = polygon_normal(patch)
    assert n == pytest.approx([0.0, 0.0, 1.0])


def test_mode_wiring_count_invariants():
    t = [Selection("t1", centroid=np.zeros(3))]
    w = [Selection("w1", centroid=np.ones(3), normal=np.array([0, 0, 1.0]))]
    TouchpointSet(t, w, "single-wire")
    with pytest.raises(SelectionError):
        TouchpointSet(t, w, "double-wire")
    with pytest.raises(SelectionError):
        TouchpointSet(t, w + w, "single-wire")
    with pytest.raises(SelectionError):
        TouchpointSet(t, [Selection("t1", centroid=np.ones(3))], "single-wire")  # dup id


def test_centroid_far_from_surface_rejected():
    mesh = box_mesh((30, 30, 30))
    t = [Selection("t1", centroid=np.array([15.0, 15.0, 50.0]))]  # 20 mm above the top
    w = [Selection("w1", centroid=np.array([15.0, 15.0, 30.0]), normal=np.array([0, 0, 1.0]))]
    pts = TouchpointSet(t, w, "single-wire")
    with pytest.raises(SelectionError, match="farther"):
        build_point_geometry(mesh, pts)


def test_half_ball_fragment_volume():
    # sphere centered on the top face of a large cube: exact half ball remains
    mesh = box_mesh((60, 60, 30))
    t = [Selection("t1", centroid=np.array([30.0, 30.0, 30.0]))]
    w = [Selection("w1", centroid=np.array([30.0, 30.0, 0.0]), normal=np.array([0, 0, -1.0]))]
    pts = TouchpointSet(t, w, "single-wire")
    geom = build_point_geometry(mesh, pts, sphere_diameter=12.0)
    frag = geom.touch_solids[0]
    vol = abs(mesh_volume_divergence(frag))
    expect = 0.5 * (4.0 / 3.0) * np.pi * 6.0**3
    assert abs(vol - expect) / expect < 0.02


def test_fragment_points_inside_model():
    mesh = uv_sphere(20.0, n_theta=32, n_phi=48)
    p = np.array([0.0, 0.0, 20.0])
    t = [Selection("t1", centroid=p)]
    w = [Selection("w1", centroid=np.array([20.0, 0.0, 0.0]), normal=np.array([1.0, 0, 0]))]
    geom = build_point_geometry(mesh, TouchpointSet(t, w, "single-wire"))
    frag = geom.touch_solids[0]
    # random interior samples of the fragment must pass the brute-force test
    rng = np.random.default_rng(7)
    lo, hi = frag.bounding_box
    samples = rng.uniform(lo, hi, size=(400, 3))
    inside_frag = point_in_mesh_bruteforce(frag, samples, seed=11)
    inside_model = point_in_mesh_bruteforce(mesh, samples[inside_frag], seed=12)
    assert inside_frag.sum() > 20
    assert inside_model.all()


def test_wiring_cylinder_axis_follows_face_normal():
    mesh = box_mesh((40, 40, 40))
    patch = _flat_patch(z=40.0, size=2.0) + np.array([19.0, 19.0, 0.0])
    w = Selection("w1", polygon=patch)
    t = [Selection("t1", centroid=np.array([20.0, 20.0, 0.0]))]
    geom = build_point_geometry(mesh, TouchpointSet(t, [w], "single-wire"), cyl_length=10.0)
    cyl = geom.wiring_solids[0]
    lo, hi = cyl.bounding_box
    # axis +z: cylinder spans centroid +- length/2 and protrudes above the face
    assert hi[2] == pytest.approx(45.0, abs=1e-9)
    assert lo[2] == pytest.approx(35.0, abs=1e-9)


def test_sphere_outside_volume_rejected():
    mesh = box_mesh((30, 30, 30))
    # on-surface centroid but sphere fully outside is impossible; emulate by a
    # selection hovering at the surface-proximity limit beyond a corner
    t = [Selection("t1", centroid=np.array([14.0, 14.0, 30.2]))]
    w = [Selection("w1", centroid=np.array([15.0, 15.0, 0.0]), normal=np.array([0, 0, -1.0]))]
    geom = build_point_geometry(mesh, TouchpointSet(t, w, "single-wire"), sphere_diameter=12.0)
    assert geom.touch_solids  # near-surface sphere clips to a nonempty fragment


def test_overlapping_touch_solids_warn():
    mesh = box_mesh((60, 60, 30))
    t = [
        Selection("a", centroid=np.array([30.0, 30.0, 30.0])),
        Selection("b", centroid=np.array([36.0, 30.0, 30.0])),  # 6 mm apart < 12 mm
    ]
    w = [Selection("w1", centroid=np.array([30.0, 30.0, 0.0]), normal=np.array([0, 0, -1.0]))]
    with pytest.warns(UserWarning, match="overlap"):
        geom = build_point_geometry(mesh, TouchpointSet(t, w, "single-wire"))
    assert geom.warnings


def test_ordered_points_sequence():
    t = [Selection(f"t{i}", centroid=np.array([float(i), 0, 0])) for i in range(3)]
    w = [
        Selection("w1", centroid=np.array([9.0, 0, 0]), normal=np.array([0, 0, 1.0])),
        Selection("w2", centroid=np.array([8.0, 0, 0]), normal=np.array([0, 0, 1.0])),
    ]
    two = TouchpointSet(t, w, "double-wire")
    assert [s.id for s in two.ordered_points()] == ["w1", "t0", "t1", "t2", "w2"]
    one = TouchpointSet(t, w[:1], "single-wire")
    assert [s.id for s in one.ordered_points()] == ["w1", "t0", "t1", "t2"]


def test_surface_selection_helper_builds_patch():
    mesh = uv_sphere(15.0, n_theta=24, n_phi=32)
    sel = surface_selection(mesh, np.array([0, 0, 15.0]), "top", patch_radius=4.0)
    assert sel.polygon is not None and len(sel.polygon) > 2
    assert np.linalg.norm(sel.centroid - [0, 0, 15.0]) < 1.5
