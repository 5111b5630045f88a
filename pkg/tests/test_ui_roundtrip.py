"""Cross-language selection round-trip against the UI's committed export."""

import json
from pathlib import Path

import numpy as np
import pytest

from capembed.export_io import selection_from_dict
from capembed.mesh import TriangleMesh
from capembed.points import polygon_centroid, polygon_normal

FIXTURES = Path(__file__).parent.parent / "frontend" / "fixtures"


@pytest.fixture(scope="module")
def mesh():
    doc = json.loads((FIXTURES / "roundtrip_mesh.json").read_text())
    return TriangleMesh(np.asarray(doc["vertices"]), np.asarray(doc["triangles"]))


@pytest.fixture(scope="module")
def ui_doc():
    return json.loads((FIXTURES / "expected_selection.json").read_text())


def test_ui_export_imports_cleanly(ui_doc, mesh):
    points = selection_from_dict(ui_doc)
    assert points.mode == "double-wire"
    assert points.n_touch == 5
    assert len(points.wiring_points) == 2
    points.check_on_surface(mesh)


def test_centroids_match_backend_recomputation(ui_doc, mesh):
    # the UI ships the lassoed triangles; the backend recomputes the centroid
    # from the same coordinates and must land on the same point (< 1e-6 mm)
    tri_lookup = {tuple(np.round(t.ravel(), 9)): i for i, t in enumerate(mesh.triangle_points)}
    for entry in ui_doc["touchpoints"] + ui_doc["wiring_points"]:
        polygon = np.asarray(entry["polygon"], dtype=np.float64)
        ours = polygon_centroid(polygon)
        theirs = np.asarray(entry["centroid"], dtype=np.float64)
        assert np.linalg.norm(ours - theirs) < 1e-6
        # every shipped triangle is literally a mesh triangle
        for t in polygon:
            assert tuple(np.round(t.ravel(), 9)) in tri_lookup


def test_wiring_normals_match(ui_doc):
    for entry in ui_doc["wiring_points"]:
        polygon = np.asarray(entry["polygon"], dtype=np.float64)
        ours = polygon_normal(polygon)
        theirs = np.asarray(entry["normal"], dtype=np.float64)
        assert np.linalg.norm(ours - theirs) < 1e-9


def test_triangle_sets_identical_after_reimport(ui_doc):
    points = selection_from_dict(ui_doc)
    for sel, entry in zip(points.touchpoints, ui_doc["touchpoints"]):
        assert sel.polygon.shape[0] == len(entry["polygon"])
        assert np.allclose(sel.polygon, np.asarray(entry["polygon"]))
