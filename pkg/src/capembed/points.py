"""Touchpoint/wiring selections and their printable geometry.

Touch solids are spheres volumetrically clipped against the model (extracted
as watertight fragments via marching cubes on a signed field). Wiring points
become cylinders that deliberately protrude beyond the surface so a clip can
grip them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .mesh import TriangleMesh
from .voxel import surface_distance

__all__ = [
    "Selection",
    "TouchpointSet",
    "PointGeometry",
    "SelectionError",
    "build_point_geometry",
    "cylinder_mesh",
]

SURFACE_EPS = 0.5  # mm; centroids must lie this close to the surface


class SelectionError(ValueError):
    pass


@dataclass
class Selection:
    """One selected region: a polygon patch (triangle soup) and/or a centroid."""

    id: str
    polygon: np.ndarray | None = None  # (k, 3, 3) triangle corners, mm
    centroid: np.ndarray | None = None  # (3,)
    normal: np.ndarray | None = None  # wiring points only

    def __post_init__(self):
        if self.polygon is not None:
            self.polygon = np.asarray(self.polygon, dtype=np.float64).reshape(-1, 3, 3)
        if self.centroid is not None:
            self.centroid = np.asarray(self.centroid, dtype=np.float64).reshape(3)
        if self.normal is not None:
            self.normal = np.asarray(self.normal, dtype=np.float64).reshape(3)
        if self.polygon is None and self.centroid is None:
            raise SelectionError(f"selection {self.id!r} has neither polygon nor centroid")
        if self.centroid is None:
            self.centroid = polygon_centroid(self.polygon)
        if self.normal is None and self.polygon is not None:
            self.normal = polygon_normal(self.polygon)


def polygon_centroid(polygon: np.ndarray) -> np.ndarray:
    """Area-weighted centroid of a triangle patch."""
    c = polygon.mean(axis=1)
    cross = np.cross(polygon[:, 1] - polygon[:, 0], polygon[:, 2] - polygon[:, 0])
    a = 0.5 * np.linalg.norm(cross, axis=1)
    total = a.sum()
    if total <= 0:
        return c.mean(axis=0)
    return (c * a[:, None]).sum(axis=0) / total


def polygon_normal(polygon: np.ndarray) -> np.ndarray:
    """Area-weighted average normal of a triangle patch, normalized."""
    cross = np.cross(polygon[:, 1] - polygon[:, 0], polygon[:, 2] - polygon[:, 0])
    n = cross.sum(axis=0)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise SelectionError("degenerate selection polygon (zero aggregate normal)")
    return n / norm


@dataclass
class TouchpointSet:
    """Ordered touchpoints plus wiring connection point(s)."""

    touchpoints: list[Selection]
    wiring_points: list[Selection]
    mode: str  # "single-wire" | "double-wire"

    def __post_init__(self):
        if self.mode not in ("single-wire", "double-wire"):
            raise SelectionError(f"unknown mode {self.mode!r}")
        need = 1 if self.mode == "single-wire" else 2
        if len(self.wiring_points) != need:
            raise SelectionError(
                f"{self.mode} requires exactly {need} wiring point(s), got {len(self.wiring_points)}"
            )
        ids = [s.id for s in self.touchpoints] + [s.id for s in self.wiring_points]
        if len(set(ids)) != len(ids):
            raise SelectionError("selection ids are not unique")
        if not self.touchpoints:
            raise SelectionError("at least one touchpoint is required")

    @property
    def n_touch(self) -> int:
        return len(self.touchpoints)

    def ordered_points(self) -> list[Selection]:
        """Serial connection order: wiring first (and last, double-wire)."""
        if self.mode == "double-wire":
            return [self.wiring_points[0], *self.touchpoints, self.wiring_points[1]]
        return [self.wiring_points[0], *self.touchpoints]

    def check_on_surface(self, mesh: TriangleMesh, eps: float = SURFACE_EPS) -> None:
        pts = np.array([s.centroid for s in self.touchpoints + self.wiring_points])
        d = surface_distance(mesh, pts)
        bad = np.nonzero(d > eps)[0]
        if len(bad):
            names = [(self.touchpoints + self.wiring_points)[i].id for i in bad]
            raise SelectionError(
                f"centroids farther than {eps} mm from the surface: {names} (distances {d[bad].round(3)})"
            )


@dataclass
class PointGeometry:
    touch_solids: list[TriangleMesh]
    wiring_solids: list[TriangleMesh]
    warnings: list[str] = field(default_factory=list)


def build_point_geometry(
    mesh: TriangleMesh,
    points: TouchpointSet,
    sphere_diameter: float = 12.0,
    cyl_diameter: float = 4.0,
    cyl_length: float = 10.0,
    pitch: float | None = None,
) -> PointGeometry:
    """Clip touch spheres against the model and build protruding wiring cylinders."""
    points.check_on_surface(mesh)
    notes: list[str] = []
    radius = sphere_diameter / 2.0
    solids = []
    for sel in points.touchpoints:
        frag = _clipped_sphere(mesh, sel.centroid, radius, pitch or sphere_diameter / 40.0)
        if frag is None:
            raise SelectionError(f"touchpoint {sel.id!r}: sphere lies entirely outside the model volume")
        solids.append(frag)

    for i in range(len(points.touchpoints)):
        for j in range(i + 1, len(points.touchpoints)):
            a, b = points.touchpoints[i], points.touchpoints[j]
            if np.linalg.norm(a.centroid - b.centroid) < sphere_diameter:
                msg = f"touch solids may overlap: ({a.id}, {b.id})"
                warnings.warn(msg)
                notes.append(msg)

    cyls = []
    for sel in points.wiring_points:
        if sel.normal is None:
            raise SelectionError(f"wiring point {sel.id!r} needs a polygon or explicit normal")
        cyls.append(cylinder_mesh(sel.centroid, sel.normal, cyl_diameter, cyl_length))
    return PointGeometry(touch_solids=solids, wiring_solids=cyls, warnings=notes)


def _clipped_sphere(mesh: TriangleMesh, center: np.ndarray, radius: float, pitch: float) -> TriangleMesh | None:
    """Marching-cubes extraction of sphere INTERSECT model volume."""
    from skimage.measure import marching_cubes

    from .voxel import occupancy_field

    pad = 2 * pitch
    lo = center - radius - pad
    n = int(np.ceil((2 * radius + 2 * pad) / pitch)) + 1
    axes = [lo[k] + pitch * np.arange(n) for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)

    # lattice points are the voxel centers of a grid shifted by half a pitch
    inside = occupancy_field(mesh, lo - 0.5 * pitch, pitch, (n, n, n)).reshape(-1)
    # the field only needs accuracy near its zero crossing
    dist = surface_distance(mesh, pts, cap=3 * pitch)
    model_sdf = np.where(inside, -dist, dist)
    sphere_sdf = np.linalg.norm(pts - center, axis=1) - radius
    f = np.maximum(model_sdf, sphere_sdf).reshape(n, n, n)

    if not (f < 0).any():
        return None
    try:
        verts, faces, _, _ = marching_cubes(f, level=0.0, spacing=(pitch, pitch, pitch))
    except (ValueError, RuntimeError):
        return None
    verts = verts + lo
    return TriangleMesh(verts, faces)


def cylinder_mesh(center: np.ndarray, axis: np.ndarray, diameter: float, length: float, segments: int = 32) -> TriangleMesh:
    """Closed cylinder centered at `center`, axis along `axis` (unit normal)."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    ref = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    r = diameter / 2.0
    ang = 2 * np.pi * np.arange(segments) / segments
    ring = np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * v
    bot = center - 0.5 * length * axis + r * ring
    top = center + 0.5 * length * axis + r * ring
    verts = np.vstack([bot, top, center - 0.5 * length * axis, center + 0.5 * length * axis])
    cb, ct = 2 * segments, 2 * segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris.append([i, j, segments + i])
        tris.append([j, segments + j, segments + i])
        tris.append([cb, j, i])
        tris.append([ct, segments + i, segments + j])
    return TriangleMesh(verts, np.array(tris))
