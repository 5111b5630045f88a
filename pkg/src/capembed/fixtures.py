"""Procedural watertight meshes for tests, demos, and benchmarks."""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh
from .points import Selection, TouchpointSet

__all__ = ["box_mesh", "paneled_box", "uv_sphere", "torus_mesh", "bunny_scale_fixture", "surface_selection"]


def box_mesh(size=(10.0, 10.0, 10.0), origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    sx, sy, sz = size
    ox, oy, oz = origin
    v = np.array(
        [
            [0, 0, 0], [sx, 0, 0], [sx, sy, 0], [0, sy, 0],
            [0, 0, sz], [sx, 0, sz], [sx, sy, sz], [0, sy, sz],
        ],
        dtype=np.float64,
    ) + np.array([ox, oy, oz])
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom (z = 0, outward -z)
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],  # y = 0
            [2, 3, 7], [2, 7, 6],  # y = sy
            [1, 2, 6], [1, 6, 5],  # x = sx
            [3, 0, 4], [3, 4, 7],  # x = 0
        ]
    )
    return TriangleMesh(v, f)


def paneled_box(size=(10.0, 10.0, 10.0), cell: float = 4.0, origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with each face triangulated on a ~`cell` mm grid, so
    surface selections stay local."""
    sx, sy, sz = size
    o = np.asarray(origin, dtype=np.float64)
    verts: list = []
    tris: list = []

    def face(corner, du, dv, nu, nv):
        base = len(verts)
        for i in range(nu + 1):
            for j in range(nv + 1):
                verts.append(corner + du * (i / nu) + dv * (j / nv))
        for i in range(nu):
            for j in range(nv):
                a = base + i * (nv + 1) + j
                b = a + (nv + 1)
                tris.append([a, b, b + 1])
                tris.append([a, b + 1, a + 1])

    nx = max(1, int(round(sx / cell)))
    ny = max(1, int(round(sy / cell)))
    nz = max(1, int(round(sz / cell)))
    ex, ey, ez = np.array([sx, 0, 0]), np.array([0, sy, 0]), np.array([0, 0, sz])
    face(o, ey, ex, ny, nx)                      # bottom (z=0), outward -z
    face(o + ez, ex, ey, nx, ny)                 # top
    face(o, ex, ez, nx, nz)                      # y = 0
    face(o + ey, ez, ex, nz, nx)                 # y = sy
    face(o + ex, ey, ez, ny, nz)                 # x = sx
    face(o, ez, ey, nz, ny)                      # x = 0
    v = np.asarray(verts)
    t = np.asarray(tris)
    uniq, inverse = np.unique(v, axis=0, return_inverse=True)  # weld shared face edges
    return TriangleMesh(uniq, inverse[t])


def uv_sphere(radius=10.0, center=(0.0, 0.0, 0.0), n_theta=48, n_phi=96) -> TriangleMesh:
    cx, cy, cz = center
    verts = [[cx, cy, cz + radius]]
    for i in range(1, n_theta):
        th = np.pi * i / n_theta
        for j in range(n_phi):
            ph = 2 * np.pi * j / n_phi
            verts.append(
                [
                    cx + radius * np.sin(th) * np.cos(ph),
                    cy + radius * np.sin(th) * np.sin(ph),
                    cz + radius * np.cos(th),
                ]
            )
    verts.append([cx, cy, cz - radius])
    south = len(verts) - 1
    tris = []
    for j in range(n_phi):
        tris.append([0, 1 + j, 1 + (j + 1) % n_phi])
    for i in range(n_theta - 2):
        row, nxt = 1 + i * n_phi, 1 + (i + 1) * n_phi
        for j in range(n_phi):
            j2 = (j + 1) % n_phi
            tris.append([row + j, nxt + j, nxt + j2])
            tris.append([row + j, nxt + j2, row + j2])
    row = 1 + (n_theta - 2) * n_phi
    for j in range(n_phi):
        tris.append([south, row + (j + 1) % n_phi, row + j])
    return TriangleMesh(np.array(verts), np.array(tris))


def torus_mesh(major=30.0, minor=10.0, n_major=96, n_minor=48, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    cx, cy, cz = center
    verts = np.empty((n_major * n_minor, 3))
    for i in range(n_major):
        u = 2 * np.pi * i / n_major
        for j in range(n_minor):
            v = 2 * np.pi * j / n_minor
            w = major + minor * np.cos(v)
            verts[i * n_minor + j] = [cx + w * np.cos(u), cy + w * np.sin(u), cz + minor * np.sin(v)]
    tris = []
    for i in range(n_major):
        i2 = (i + 1) % n_major
        for j in range(n_minor):
            j2 = (j + 1) % n_minor
            a = i * n_minor + j
            b = i2 * n_minor + j
            c = i2 * n_minor + j2
            d = i * n_minor + j2
            tris.append([a, b, c])
            tris.append([a, c, d])
    return TriangleMesh(verts, np.array(tris))


def surface_selection(mesh: TriangleMesh, point: np.ndarray, sel_id: str, patch_radius: float = 4.0) -> Selection:
    """Selection made of the mesh triangles whose centroids fall near `point`."""
    cent = mesh.triangle_points.mean(axis=1)
    near = np.linalg.norm(cent - np.asarray(point), axis=1) <= patch_radius
    if not near.any():
        near = np.zeros(len(cent), dtype=bool)
        near[np.argmin(np.linalg.norm(cent - np.asarray(point), axis=1))] = True
    return Selection(id=sel_id, polygon=mesh.triangle_points[near])


def bunny_scale_fixture(n_major=360, n_minor=360):
    """Bunny-class benchmark: ~260k-triangle torus with 5 touchpoints + 2 wiring.

    Torus(42, 8) at a 0.5 % voxel size lands near 425k occupied voxels.
    """
    mesh = torus_mesh(major=42.0, minor=8.0, n_major=n_major, n_minor=n_minor)
    angles = [0.0, 1.1, 2.2, 3.3, 4.4]
    sels = []
    for i, u in enumerate(angles):
        p = np.array([(42.0 + 8.0) * np.cos(u), (42.0 + 8.0) * np.sin(u), 0.0])
        sels.append(surface_selection(mesh, p, f"touch{i + 1}", patch_radius=3.0))
    w = []
    for i, u in enumerate((5.2, 5.8)):
        p = np.array([(42.0 + 8.0) * np.cos(u), (42.0 + 8.0) * np.sin(u), 0.0])
        w.append(surface_selection(mesh, p, f"wire{i + 1}", patch_radius=3.0))
    double = TouchpointSet(touchpoints=sels, wiring_points=w, mode="double-wire")
    single = TouchpointSet(touchpoints=sels, wiring_points=[w[0]], mode="single-wire")
    return mesh, single, double
