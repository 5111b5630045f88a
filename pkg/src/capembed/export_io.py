"""Serialization: selection documents, fabrication bundle, manifests.

All structured documents are JSON (shared wire format with the design UI).
Fabrication geometry is written as binary STL in mm; the four parts overlap
rather than being booleaned, since multi-material slicers resolve part
priority themselves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh, write_stl
from .points import Selection, TouchpointSet, SelectionError
from .routing import ConduitNetwork, ConduitSegment
from .serpentine import SerpentinePath

__all__ = [
    "read_selection",
    "write_selection",
    "selection_to_dict",
    "selection_from_dict",
    "export_bundle",
    "routes_to_dict",
    "trace_solid",
    "conduit_shell",
    "feasibility_to_dict",
]

BODY_INFILL = "5-20% (gyroid)"
CONDUCTIVE_INFILL = "100% (rectilinear)"


# ---------------------------------------------------------------------------
# Selection documents


def _sel_to_dict(sel: Selection) -> dict:
    d = {"id": sel.id, "centroid": sel.centroid.tolist()}
    if sel.polygon is not None:
        d["polygon"] = sel.polygon.tolist()
    if sel.normal is not None:
        d["normal"] = sel.normal.tolist()
    return d


def _sel_from_dict(d: dict) -> Selection:
    return Selection(
        id=str(d["id"]),
        polygon=np.asarray(d["polygon"], dtype=np.float64) if "polygon" in d else None,
        centroid=np.asarray(d["centroid"], dtype=np.float64) if "centroid" in d else None,
        normal=np.asarray(d["normal"], dtype=np.float64) if "normal" in d else None,
    )


def selection_to_dict(points: TouchpointSet) -> dict:
    return {
        "mode": points.mode,
        "touchpoints": [_sel_to_dict(s) for s in points.touchpoints],
        "wiring_points": [_sel_to_dict(s) for s in points.wiring_points],
    }


def selection_from_dict(doc: dict) -> TouchpointSet:
    try:
        mode = doc["mode"]
        touch = [_sel_from_dict(d) for d in doc["touchpoints"]]
        wiring = [_sel_from_dict(d) for d in doc["wiring_points"]]
    except (KeyError, TypeError) as exc:
        raise SelectionError(f"malformed selection document: {exc}") from exc
    return TouchpointSet(touchpoints=touch, wiring_points=wiring, mode=mode)


def write_selection(points: TouchpointSet, path) -> None:
    Path(path).write_text(json.dumps(selection_to_dict(points), indent=2, sort_keys=True))


def read_selection(path) -> TouchpointSet:
    return selection_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Geometry solidification


def trace_solid(path: SerpentinePath, layer_height: float = 0.24) -> TriangleMesh:
    """Sweep the trace polyline into per-edge boxes (thickness_xy wide,
    layer-height tall). Boxes overlap at joints; slicers accept the soup."""
    pts = path.polyline
    w = path.thickness_xy / 2.0
    h = layer_height / 2.0
    verts = []
    tris = []
    base = 0
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        ln = np.linalg.norm(d)
        if ln < 1e-9:
            continue
        d = d / ln
        ref = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        u = np.cross(d, ref)
        u /= np.linalg.norm(u)
        v = np.cross(d, u)
        corners = []
        for end in (a, b):
            for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                corners.append(end + su * w * u + sv * h * v)
        verts.extend(corners)
        quads = [
            (0, 1, 2, 3), (7, 6, 5, 4),  # end caps
            (0, 4, 5, 1), (1, 5, 6, 2), (2, 6, 7, 3), (3, 7, 4, 0),
        ]
        for q in quads:
            tris.append([base + q[0], base + q[1], base + q[2]])
            tris.append([base + q[0], base + q[2], base + q[3]])
        base += 8
    return TriangleMesh(np.array(verts), np.array(tris))


def conduit_shell(segment: ConduitSegment, sides: int = 24) -> TriangleMesh:
    """Capsule surface around a conduit centerline (per-leg tube + end caps)."""
    from .points import cylinder_mesh

    parts = []
    pts = segment.centerline
    r = segment.diameter / 2.0
    for a, b in zip(pts[:-1], pts[1:]):
        axis = b - a
        ln = np.linalg.norm(axis)
        if ln < 1e-9:
            continue
        parts.append(cylinder_mesh((a + b) / 2.0, axis / ln, segment.diameter, ln, segments=sides))
    for center in (pts[0], pts[-1]):
        parts.append(_ico_sphere(center, r))
    return merge_meshes(parts)


def _ico_sphere(center: np.ndarray, radius: float, subdiv: int = 1) -> TriangleMesh:
    t = (1 + 5**0.5) / 2
    v = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    for _ in range(subdiv):
        nv = list(v)
        nf = []
        cache = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                cache[key] = len(nv)
                nv.append((nv[i] + nv[j]) / 2.0)
            return cache[key]

        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        v = np.array(nv)
        f = np.array(nf)
    v = v / np.linalg.norm(v, axis=1, keepdims=True) * radius + center
    return TriangleMesh(v, f)


def merge_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    verts = []
    tris = []
    off = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + off)
        off += len(m.vertices)
    return TriangleMesh(np.vstack(verts), np.vstack(tris))


# ---------------------------------------------------------------------------
# Bundle export


def routes_to_dict(net: ConduitNetwork) -> dict:
    return {
        "point_order": net.point_order,
        "segments": [
            {
                "from": s.from_id,
                "to": s.to_id,
                "diameter": s.diameter,
                "conductivity": s.conductivity,
                "centerline": np.asarray(s.centerline).tolist(),
            }
            for s in net.segments
        ],
        "warnings": net.warnings,
    }


def feasibility_to_dict(result) -> dict:
    """Grid table for heatmap rendering: score or "violation" per cell."""
    grid = []
    for i, r1 in enumerate(result.r1_values):
        row = []
        for j, r in enumerate(result.r_values):
            s = result.feasibility[i, j]
            row.append("violation" if np.isnan(s) else float(s))
        grid.append(row)
    return {
        "r1_values": result.r1_values.tolist(),
        "r_values": result.r_values.tolist(),
        "cells": grid,
        "chosen": {"r1": result.r1, "r": result.r, "min_separation": result.min_separation},
    }


def export_bundle(state, out_dir) -> dict:
    """Write body/traces/points/conduits STLs plus the manifest document.

    `state` is a pipeline result carrying the mesh, point geometry, conduit
    network, serpentine fills, circuit spec, and delay profile.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not state.fills:
        raise ValueError("refusing to export: no serpentine traces were generated")

    write_stl(out / "body.stl", state.mesh)
    write_stl(out / "traces.stl", merge_meshes([trace_solid(f, state.config.layer_height) for f in state.fills.values()]))
    write_stl(
        out / "points.stl",
        merge_meshes(state.point_geometry.touch_solids + state.point_geometry.wiring_solids),
    )
    write_stl(out / "conduits.stl", merge_meshes([conduit_shell(s) for s in state.network.segments]))

    manifest = build_manifest(state)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return {
        "files": ["body.stl", "traces.stl", "points.stl", "conduits.stl", "manifest.json"],
        "dir": str(out),
    }


def build_manifest(state) -> dict:
    from .circuit import ThresholdMarker

    spec = state.circuit
    t_thres = [
        t.value if isinstance(t, ThresholdMarker) else float(t) for t in state.profile.t_thres
    ]
    fills = {
        f"{a}->{b}": {
            "length_xy_mm": state.fills[(a, b)].length_xy,
            "length_z_mm": state.fills[(a, b)].length_z,
            "resistance_ohm": state.fill_resistances[(a, b)],
            "ray_margin_mm": state.fills[(a, b)].ray_margin,
            "layer_margin_mm": state.fills[(a, b)].layer_margin,
        }
        for (a, b) in state.fills
    }
    # paths are workspace bookkeeping, not design parameters; dropping them
    # keeps bundles byte-identical wherever they are produced
    params = {
        k: v
        for k, v in state.config.to_dict().items()
        if k not in ("mesh_path", "selection_path", "out_dir")
    }
    return {
        "input": {"mesh_sha256": state.mesh_sha256, "triangles": int(len(state.mesh.triangles))},
        "parameters": params,
        "mode": spec.mode,
        "circuit": {
            "v_in": spec.v_in,
            "v_thres": spec.v_thres,
            "c": spec.c,
            "r_recv": spec.r_recv,
            "r": spec.r.tolist(),
        },
        "delay_profile": {"method": state.profile.source, "t_thres_s": t_thres},
        "conduits": fills,
        "external_resistor_ohm": state.external_r1,
        "infill": {"body": BODY_INFILL, "traces": CONDUCTIVE_INFILL, "points": CONDUCTIVE_INFILL, "conduits": CONDUCTIVE_INFILL},
        "point_order": state.network.point_order,
    }

