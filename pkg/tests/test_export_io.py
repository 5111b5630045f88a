import json

import numpy as np
import pytest

from capembed.export_io import (
    conduit_shell,
    feasibility_to_dict,
    read_selection,
    routes_to_dict,
    selection_from_dict,
    selection_to_dict,
    trace_solid,
    write_selection,
)
from capembed.fixtures import box_mesh, surface_selection
from capembed.points import Selection, SelectionError, TouchpointSet
from capembed.routing import ConduitSegment, ConduitNetwork
from capembed.serpentine import distance_to_capsules, fill_serpentine


def _bunny_style_set(mode="double-wire"):
    mesh = box_mesh((60, 60, 30))
    pts = [
        surface_selection(mesh, np.array([10.0, 10.0, 30.0]), f"t{i}", patch_radius=6.0)
        for i in range(5)
    ]
    # shift each patch so ids and geometry differ
    pts = [
        surface_selection(mesh, np.array([10.0 + 10 * i, 10.0, 30.0]), f"t{i}", patch_radius=6.0)
        for i in range(5)
    ]
    wiring = [
        surface_selection(mesh, np.array([5.0, 50.0, 30.0]), "w0", patch_radius=5.0),
        surface_selection(mesh, np.array([55.0, 50.0, 30.0]), "w1", patch_radius=5.0),
    ]
    return TouchpointSet(pts, wiring if mode == "double-wire" else wiring[:1], mode)


def test_selection_roundtrip_identity(tmp_path):
    sel = _bunny_style_set()
    path = tmp_path / "sel.json"
    write_selection(sel, path)
    back = read_selection(path)
    assert back.mode == sel.mode
    assert [s.id for s in back.touchpoints] == [s.id for s in sel.touchpoints]
    for a, b in zip(back.touchpoints + back.wiring_points, sel.touchpoints + sel.wiring_points):
        assert np.allclose(a.centroid, b.centroid)
        assert np.allclose(a.polygon, b.polygon)
    # writing the round-tripped set again produces identical bytes
    path2 = tmp_path / "sel2.json"
    write_selection(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_bunny_case_five_touch_two_wiring_valid():
    sel = _bunny_style_set("double-wire")
    doc = selection_to_dict(sel)
    assert len(doc["touchpoints"]) == 5
    assert len(doc["wiring_points"]) == 2
    selection_from_dict(doc)  # validates


def test_single_wire_with_two_wiring_rejected():
    sel = _bunny_style_set("double-wire")
    doc = selection_to_dict(sel)
    doc["mode"] = "single-wire"
    with pytest.raises(SelectionError):
        selection_from_dict(doc)


def test_duplicate_ids_rejected():
    doc = selection_to_dict(_bunny_style_set())
    doc["touchpoints"][1]["id"] = doc["touchpoints"][0]["id"]
    with pytest.raises(SelectionError):
        selection_from_dict(doc)


def _demo_segment():
    line = np.array([[0.0, 0.0, 0.0], [30.0, 0.0, 0.0]])
    return ConduitSegment("a", "b", line, 5.0, "low", np.arange(2))


def test_trace_solid_stays_inside_capsule():
    seg = _demo_segment()
    path = fill_serpentine(seg)
    solid = trace_solid(path)
    # sample the solid's surface at ~0.2 mm: barycentric lattice per triangle
    tp = solid.triangle_points
    samples = [solid.vertices]
    for u in np.linspace(0.0, 1.0, 5):
        for v in np.linspace(0.0, 1.0 - u, 4):
            w = 1.0 - u - v
            samples.append(u * tp[:, 0] + v * tp[:, 1] + w * tp[:, 2])
    pts = np.vstack(samples)
    d = distance_to_capsules(pts, seg.centerline, seg.diameter / 2.0)
    # the polyline hugs the wall, so the swept solid may stand proud by up to
    # half its cross-section diagonal
    slack = np.hypot(path.thickness_xy, 0.24) / 2.0
    assert d.max() <= slack + 1e-9


def test_conduit_shell_bounds():
    seg = _demo_segment()
    shell = conduit_shell(seg)
    lo, hi = shell.bounding_box
    assert lo == pytest.approx([-2.5, -2.5, -2.5], abs=1e-6)
    assert hi == pytest.approx([32.5, 2.5, 2.5], abs=1e-6)


def test_routes_roundtrip_dict():
    seg = _demo_segment()
    net = ConduitNetwork([seg], ["a", "b"])
    doc = routes_to_dict(net)
    assert doc["segments"][0]["conductivity"] == "low"
    assert json.dumps(doc)  # serializable


def test_feasibility_dict_marks_violations():
    from capembed.wire_opt import GridSearchSpec, optimize_single_wire

    res = optimize_single_wire(GridSearchSpec(n=3, r_max=1e6))
    doc = feasibility_to_dict(res)
    flat = [c for row in doc["cells"] for c in row]
    assert "violation" in flat
    assert any(isinstance(c, float) for c in flat)
    assert doc["chosen"]["r1"] == res.r1


def test_export_refuses_empty_trace_set(tmp_path):
    import types

    from capembed.export_io import export_bundle

    state = types.SimpleNamespace(fills={})
    with pytest.raises(ValueError, match="no serpentine traces"):
        export_bundle(state, tmp_path)
