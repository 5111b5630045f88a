"""Triangle-mesh ingestion and validation.

Meshes are indexed triangle surfaces in millimeters. The pipeline only
accepts closed (edge-manifold, watertight) meshes without self-intersection;
`validate_mesh` is the gate that enforces this.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TriangleMesh",
    "ValidationReport",
    "MeshError",
    "read_stl",
    "write_stl",
    "validate_mesh",
    "self_intersections",
]


class MeshError(ValueError):
    """Unreadable or structurally unusable mesh input."""


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle surface, units mm."""

    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int32

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (V, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"triangles must be (T, 3), got {t.shape}")
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def triangle_points(self) -> np.ndarray:
        """(T, 3, 3) corner coordinates."""
        return self.vertices[self.triangles]

    def triangle_normals_areas(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.triangle_points
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        norm = np.linalg.norm(cross, axis=1)
        areas = 0.5 * norm
        with np.errstate(invalid="ignore", divide="ignore"):
            normals = np.where(norm[:, None] > 0, cross / norm[:, None], 0.0)
        return normals, areas

    def volume(self) -> float:
        """Signed volume via the divergence theorem (positive for outward winding)."""
        p = self.triangle_points
        return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)


# ---------------------------------------------------------------------------
# STL input/output (binary and ASCII, little-endian 50-byte records)


def read_stl(path) -> TriangleMesh:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 15:
        raise MeshError(f"{path}: too short to be an STL file")
    if _looks_ascii(data):
        tris = _parse_ascii(data)
    else:
        tris = _parse_binary(data, path)
    if len(tris) < 4:
        raise MeshError(f"{path}: fewer than 4 triangles ({len(tris)})")
    return _index_soup(np.asarray(tris, dtype=np.float64))


def write_stl(path, mesh: TriangleMesh, header: bytes = b"capembed") -> None:
    tris = mesh.triangle_points.astype("<f4")
    normals, _ = mesh.triangle_normals_areas()
    n = len(tris)
    rec = np.zeros(n, dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    rec["n"] = normals.astype("<f4")
    rec["v"] = tris
    with open(path, "wb") as fh:
        fh.write(header.ljust(80, b"\0")[:80])
        fh.write(struct.pack("<I", n))
        fh.write(rec.tobytes())


def _looks_ascii(data: bytes) -> bool:
    if not data.lstrip().startswith(b"solid"):
        return False
    # binary files sometimes start with "solid" in the comment header; a real
    # ASCII file must contain facet/endsolid keywords
    head = data[:4096]
    return b"facet" in head or b"endsolid" in head


def _parse_ascii(data: bytes) -> list:
    import re

    text = data.decode("ascii", errors="replace")
    vertex_re = re.compile(r"vertex\s+([^\s]+)\s+([^\s]+)\s+([^\s]+)", re.IGNORECASE)
    coords = vertex_re.findall(text)
    if len(coords) % 3 != 0:
        raise MeshError("ASCII STL: vertex count not a multiple of 3")
    try:
        flat = np.array(coords, dtype=np.float64)
    except ValueError as exc:
        raise MeshError(f"ASCII STL: unparsable vertex coordinate ({exc})") from exc
    return flat.reshape(-1, 3, 3)


def _parse_binary(data: bytes, path) -> np.ndarray:
    if len(data) < 84:
        raise MeshError(f"{path}: binary STL truncated header")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise MeshError(f"{path}: binary STL truncated ({len(data)} < {expected} bytes)")
    rec = np.frombuffer(data, dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")], count=count, offset=84)
    return rec["v"].astype(np.float64)


def _index_soup(tris: np.ndarray) -> TriangleMesh:
    """Weld exactly coincident vertices of a triangle soup into an indexed mesh."""
    flat = tris.reshape(-1, 3)
    uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
    return TriangleMesh(uniq, inverse.reshape(-1, 3))


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    watertight: bool
    boundary_edges: list = field(default_factory=list)  # edges with count != 2
    degenerate_triangles: list = field(default_factory=list)
    self_intersecting_pairs: list = field(default_factory=list)
    self_intersection_exhaustive: bool = True

    @property
    def ok(self) -> bool:
        return self.watertight and not self.self_intersecting_pairs and not self.degenerate_triangles


def validate_mesh(
    mesh: TriangleMesh,
    check_self_intersection: bool = True,
    pair_budget: int = 1_000_000,
) -> ValidationReport:
    """Check watertightness, degeneracy, and (optionally) self-intersection.

    Watertightness is always exact: every undirected edge must be shared by
    exactly two triangles. Self-intersection is tested over spatially
    accelerated candidate pairs; above `pair_budget` pairs a deterministic
    sample is tested and the report is marked non-exhaustive.
    """
    if len(mesh.triangles) < 4:
        raise MeshError("mesh has fewer than 4 triangles")

    tri = mesh.triangles
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    bad = uniq[counts != 2]
    watertight = len(bad) == 0

    _, areas = mesh.triangle_normals_areas()
    scale = float(np.max(mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0))) or 1.0
    degen = np.nonzero(areas < 1e-12 * scale * scale)[0]

    report = ValidationReport(
        watertight=watertight,
        boundary_edges=[tuple(int(i) for i in e) for e in bad],
        degenerate_triangles=[int(i) for i in degen],
    )
    if check_self_intersection:
        pairs, exhaustive = _candidate_pairs(mesh, pair_budget)
        report.self_intersection_exhaustive = exhaustive
        report.self_intersecting_pairs = _intersecting_pairs(mesh, pairs)
    return report


def self_intersections(mesh: TriangleMesh, exhaustive: bool = False) -> list:
    """All intersecting, non-adjacent triangle pairs.

    With ``exhaustive=True`` every pair is tested (the brute-force oracle);
    otherwise pairs are pruned by an AABB grid.
    """
    if exhaustive:
        n = len(mesh.triangles)
        pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.int64)
    else:
        pairs, _ = _candidate_pairs(mesh, pair_budget=1 << 62)
    return _intersecting_pairs(mesh, pairs)


def _candidate_pairs(mesh: TriangleMesh, pair_budget: int) -> tuple[np.ndarray, bool]:
    """Triangle pairs with overlapping AABBs, via uniform-grid hashing."""
    p = mesh.triangle_points
    lo = p.min(axis=1)
    hi = p.max(axis=1)
    n = len(p)
    extent = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    # cell size ~ median triangle extent keeps bucket occupancy small
    sizes = (hi - lo).max(axis=1)
    cell = max(float(np.median(sizes)) * 2.0, float(extent.max()) / 256.0, 1e-9)
    origin = mesh.vertices.min(axis=0)
    ilo = np.floor((lo - origin) / cell).astype(np.int64)
    ihi = np.floor((hi - origin) / cell).astype(np.int64)

    buckets: dict[tuple, list] = {}
    for t in range(n):
        for ix in range(ilo[t, 0], ihi[t, 0] + 1):
            for iy in range(ilo[t, 1], ihi[t, 1] + 1):
                for iz in range(ilo[t, 2], ihi[t, 2] + 1):
                    buckets.setdefault((ix, iy, iz), []).append(t)

    seen = set()
    for members in buckets.values():
        m = len(members)
        for a in range(m):
            ta = members[a]
            for b in range(a + 1, m):
                tb = members[b]
                pair = (ta, tb) if ta < tb else (tb, ta)
                seen.add(pair)
    if not seen:
        return np.empty((0, 2), dtype=np.int64), True
    pairs = np.array(sorted(seen), dtype=np.int64)
    # prune to actual AABB overlap
    a, b = pairs[:, 0], pairs[:, 1]
    overlap = np.all(lo[a] <= hi[b], axis=1) & np.all(lo[b] <= hi[a], axis=1)
    pairs = pairs[overlap]
    if len(pairs) > pair_budget:
        rng = np.random.default_rng(0)
        pairs = pairs[rng.choice(len(pairs), pair_budget, replace=False)]
        return pairs, False
    return pairs, True


def _intersecting_pairs(mesh: TriangleMesh, pairs: np.ndarray) -> list:
    tri = mesh.triangles
    pts = mesh.triangle_points
    out = []
    for i, j in pairs:
        if set(tri[i]) & set(tri[j]):
            continue  # adjacent triangles legitimately touch
        if _tri_tri_intersect(pts[i], pts[j]):
            out.append((int(i), int(j)))
    return out


def _tri_tri_intersect(t1: np.ndarray, t2: np.ndarray, eps: float = 1e-12) -> bool:
    """Moller interval test; coplanar pairs fall back to a 2D overlap test."""
    n2 = np.cross(t2[1] - t2[0], t2[2] - t2[0])
    d2 = -np.dot(n2, t2[0])
    dv1 = t1 @ n2 + d2
    if np.all(dv1 > eps) or np.all(dv1 < -eps):
        return False
    n1 = np.cross(t1[1] - t1[0], t1[2] - t1[0])
    d1 = -np.dot(n1, t1[0])
    dv2 = t2 @ n1 + d1
    if np.all(dv2 > eps) or np.all(dv2 < -eps):
        return False

    scale = max(np.abs(dv1).max(), np.abs(dv2).max(), 1.0)
    if np.all(np.abs(dv1) < eps * scale) and np.all(np.abs(dv2) < eps * scale):
        return _coplanar_overlap(t1, t2, n1)

    direction = np.cross(n1, n2)
    axis = int(np.argmax(np.abs(direction)))
    i1 = _interval(t1[:, axis], dv1)
    i2 = _interval(t2[:, axis], dv2)
    if i1 is None or i2 is None:
        return False
    return max(i1[0], i2[0]) <= min(i1[1], i2[1]) + eps


def _interval(proj: np.ndarray, dv: np.ndarray):
    """Projection interval of a triangle onto the intersection line."""
    pos = dv > 0
    neg = dv < 0
    if pos.all() or neg.all():
        return None
    # pick the vertex on its own side and the two (or one) on the other
    ts = []
    for a in range(3):
        for b in range(a + 1, 3):
            if (dv[a] > 0) != (dv[b] > 0) or dv[a] == 0 or dv[b] == 0:
                denom = dv[a] - dv[b]
                if abs(denom) < 1e-300:
                    ts.extend([proj[a], proj[b]])
                else:
                    ts.append(proj[a] + (proj[b] - proj[a]) * dv[a] / denom)
    if not ts:
        return None
    return min(ts), max(ts)


def _coplanar_overlap(t1: np.ndarray, t2: np.ndarray, n: np.ndarray) -> bool:
    axis = int(np.argmax(np.abs(n)))
    keep = [k for k in range(3) if k != axis]
    a = t1[:, keep]
    b = t2[:, keep]
    for p, q in ((a, b), (b, a)):
        for i in range(3):
            if _segment_hits_triangle_2d(p[i], p[(i + 1) % 3], q):
                return True
    return _point_in_tri_2d(a[0], b) or _point_in_tri_2d(b[0], a)


def _segment_hits_triangle_2d(p0, p1, tri) -> bool:
    for i in range(3):
        q0, q1 = tri[i], tri[(i + 1) % 3]
        if _segments_cross(p0, p1, q0, q1):
            return True
    return False


def _segments_cross(p0, p1, q0, q1) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    o1, o2 = orient(p0, p1, q0), orient(p0, p1, q1)
    o3, o4 = orient(q0, q1, p0), orient(q0, q1, p1)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def _point_in_tri_2d(p, tri) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    s1 = orient(tri[0], tri[1], p)
    s2 = orient(tri[1], tri[2], p)
    s3 = orient(tri[2], tri[0], p)
    return (s1 >= 0 and s2 >= 0 and s3 >= 0) or (s1 <= 0 and s2 <= 0 and s3 <= 0)
