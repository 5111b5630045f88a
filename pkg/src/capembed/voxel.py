"""Voxelization, exact surface distance, and shell trimming.

Occupancy is decided by a single-ray parity test at voxel centers (rays cast
along +z per xy column, deterministic jitter on exact edge/vertex hits).
Surface distance is exact point-to-triangle distance, not a grid dilation:
the 3 mm clearance guards against parasitic capacitance and must not suffer
grid quantization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .mesh import TriangleMesh

__all__ = [
    "VoxelGrid",
    "voxelize",
    "trim_shell",
    "surface_distance",
    "occupancy_field",
    "ResourceError",
    "InteriorError",
]

VOXEL_COUNT_CAP = 50_000_000


class ResourceError(RuntimeError):
    pass


class InteriorError(ValueError):
    """Trimming removed every voxel (thin-walled model)."""


@dataclass
class VoxelGrid:
    """Uniform grid; centers at origin + (index + 0.5) * voxel_size."""

    origin: np.ndarray  # (3,)
    voxel_size: float
    occupancy: np.ndarray  # (nx, ny, nz) bool
    surface_distance: np.ndarray  # (nx, ny, nz) float64, 0.0 where unoccupied

    @property
    def shape(self) -> tuple:
        return self.occupancy.shape

    def occupied_indices(self) -> np.ndarray:
        return np.argwhere(self.occupancy)

    def occupied_centers(self) -> np.ndarray:
        idx = self.occupied_indices()
        return self.origin + (idx + 0.5) * self.voxel_size

    def occupied_distances(self) -> np.ndarray:
        idx = self.occupied_indices()
        return self.surface_distance[idx[:, 0], idx[:, 1], idx[:, 2]]

    @property
    def occupied_count(self) -> int:
        return int(self.occupancy.sum())


def default_voxel_size(mesh: TriangleMesh) -> float:
    lo, hi = mesh.bounding_box
    return 0.005 * float((hi - lo).max())


def voxelize(mesh: TriangleMesh, voxel_size: float | None = None, count_cap: int = VOXEL_COUNT_CAP) -> VoxelGrid:
    """Voxelize a watertight mesh; default size is 0.5 % of the longest bbox side."""
    if voxel_size is None:
        voxel_size = default_voxel_size(mesh)
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    lo, hi = mesh.bounding_box
    dims = np.maximum(np.ceil((hi - lo) / voxel_size).astype(np.int64), 1)
    if int(np.prod(dims)) > count_cap:
        raise ResourceError(
            f"voxel grid {tuple(dims)} exceeds the {count_cap:,} voxel cap; "
            f"increase voxel_size (currently {voxel_size:g} mm)"
        )
    occ = _parity_occupancy(mesh.triangle_points, lo, voxel_size, dims)
    dist = np.zeros(tuple(dims), dtype=np.float64)
    grid = VoxelGrid(origin=lo.copy(), voxel_size=float(voxel_size), occupancy=occ, surface_distance=dist)
    idx = grid.occupied_indices()
    if len(idx):
        centers = grid.origin + (idx + 0.5) * grid.voxel_size
        dist[idx[:, 0], idx[:, 1], idx[:, 2]] = surface_distance(mesh, centers)
    return grid


def trim_shell(grid: VoxelGrid, clearance: float) -> VoxelGrid:
    """Keep only voxels at least `clearance` mm from the surface (default use: 3 mm)."""
    if clearance < 0:
        raise ValueError("clearance must be >= 0")
    occ = grid.occupancy & (grid.surface_distance >= clearance)
    if not occ.any():
        raise InteriorError(
            f"insufficient interior volume: no voxel center is {clearance:g} mm clear of the surface"
        )
    dist = np.where(occ, grid.surface_distance, 0.0)
    return VoxelGrid(grid.origin.copy(), grid.voxel_size, occ, dist)


# ---------------------------------------------------------------------------
# Parity occupancy


def occupancy_field(mesh: TriangleMesh, origin: np.ndarray, size: float, dims) -> np.ndarray:
    """Parity occupancy for voxel centers of an arbitrary (local) grid.

    Triangles are prefiltered to those whose xy footprint can cross a grid
    column, so small local grids stay cheap on large meshes.
    """
    origin = np.asarray(origin, dtype=np.float64)
    dims = np.asarray(dims, dtype=np.int64)
    tp = mesh.triangle_points
    xy = tp[..., :2]
    tlo = xy.min(axis=1)
    thi = xy.max(axis=1)
    x1 = origin[0] + dims[0] * size
    y1 = origin[1] + dims[1] * size
    keep = (thi[:, 0] >= origin[0]) & (tlo[:, 0] <= x1) & (thi[:, 1] >= origin[1]) & (tlo[:, 1] <= y1)
    return _parity_occupancy(tp[keep], origin, size, dims)


def _parity_occupancy(pts: np.ndarray, lo: np.ndarray, size: float, dims: np.ndarray) -> np.ndarray:
    nx, ny, nz = (int(d) for d in dims)
    if len(pts) == 0:
        return np.zeros((nx, ny, nz), dtype=bool)
    hits_col, hits_z, suspect_cols = _column_crossings(pts, lo, size, nx, ny)

    occ = np.zeros((nx, ny, nz), dtype=bool)
    zc0 = lo[2] + 0.5 * size  # center z of layer 0

    # crossing at z flips parity for every voxel center above it:
    # first affected layer k = ceil((z - zc0) / size) clipped to [0, nz]
    k = np.ceil((hits_z - zc0) / size).astype(np.int64)
    exact = np.abs(hits_z - (zc0 + k * size)) < 1e-12 * max(size, 1.0)
    suspect_cols |= set(hits_col[exact].tolist())  # crossing exactly at a center
    np.clip(k, 0, nz, out=k)

    flat = hits_col * (nz + 1) + k
    counts = np.bincount(flat, minlength=nx * ny * (nz + 1)).reshape(nx * ny, nz + 1)
    parity = np.cumsum(counts[:, :nz], axis=1) % 2
    # watertight meshes close every column: total crossings must be even
    odd_total = np.nonzero(counts.sum(axis=1) % 2)[0]
    suspect_cols |= set(odd_total.tolist())
    occ = parity.astype(bool).reshape(nx, ny, nz)

    for col in sorted(suspect_cols):
        ix, iy = divmod(col, ny)
        occ[ix, iy, :] = _column_parity_jittered(pts, lo, size, nz, ix, iy)
    return occ


def _column_crossings(pts, lo, size, nx, ny):
    """(column id, crossing z) for rays through every (ix, iy) column center."""
    v0, v1, v2 = pts[:, 0], pts[:, 1], pts[:, 2]
    txy = pts[..., :2]
    tlo = txy.min(axis=1)
    thi = txy.max(axis=1)
    # column index ranges covered by each triangle's xy bbox
    ix0 = np.clip(np.floor((tlo[:, 0] - lo[0]) / size - 0.5).astype(np.int64), 0, nx - 1)
    ix1 = np.clip(np.ceil((thi[:, 0] - lo[0]) / size - 0.5).astype(np.int64), 0, nx - 1)
    iy0 = np.clip(np.floor((tlo[:, 1] - lo[1]) / size - 0.5).astype(np.int64), 0, ny - 1)
    iy1 = np.clip(np.ceil((thi[:, 1] - lo[1]) / size - 0.5).astype(np.int64), 0, ny - 1)
    ncols = (ix1 - ix0 + 1) * (iy1 - iy0 + 1)

    # expand (triangle, column) candidates
    total = int(ncols.sum())
    tri_id = np.repeat(np.arange(len(pts)), ncols)
    offs = np.arange(total) - np.repeat(np.cumsum(ncols) - ncols, ncols)
    wy = (iy1 - iy0 + 1)[tri_id]
    cx = ix0[tri_id] + offs // wy
    cy = iy0[tri_id] + offs % wy

    px = lo[0] + (cx + 0.5) * size
    py = lo[1] + (cy + 0.5) * size

    a0 = v0[tri_id]
    e1 = (v1 - v0)[tri_id]
    e2 = (v2 - v0)[tri_id]
    # solve a0 + u*e1 + w*e2 = (px, py, z) in the xy plane
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    dx = px - a0[:, 0]
    dy = py - a0[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (dx * e2[:, 1] - dy * e2[:, 0]) / det
        w = (e1[:, 0] * dy - e1[:, 1] * dx) / det

    tol = 1e-10
    vertical = np.abs(det) < 1e-14 * np.maximum(np.abs(e1).max(axis=1) * np.abs(e2).max(axis=1), 1e-300)
    u = np.where(vertical, -1.0, u)
    w = np.where(vertical, -1.0, w)
    inside = (~vertical) & (u > tol) & (w > tol) & (u + w < 1 - tol)
    border = (~vertical) & ~inside & (u > -tol) & (w > -tol) & (u + w < 1 + tol)

    col_id = cx * np.int64(ny) + cy

    # vertical triangles whose xy footprint touches the column center need a jittered ray
    near_vertical = vertical & (
        (px >= tlo[tri_id, 0] - tol) & (px <= thi[tri_id, 0] + tol)
        & (py >= tlo[tri_id, 1] - tol) & (py <= thi[tri_id, 1] + tol)
    )
    suspect = set(col_id[border | near_vertical].tolist())

    hz = a0[inside, 2] + u[inside] * e1[inside, 2] + w[inside] * e2[inside, 2]
    return col_id[inside], hz, suspect


def _column_parity_jittered(pts, lo, size, nz, ix, iy) -> np.ndarray:
    """Re-cast one column with deterministic jitter until no degenerate hit."""
    base_x = lo[0] + (ix + 0.5) * size
    base_y = lo[1] + (iy + 0.5) * size
    v0, v1, v2 = pts[:, 0], pts[:, 1], pts[:, 2]
    e1 = v1 - v0
    e2 = v2 - v0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    ok = np.abs(det) > 1e-300
    golden = 0.6180339887498949
    for attempt in range(1, 64):
        px = base_x + size * 1e-7 * attempt
        py = base_y + size * 1e-7 * attempt * golden
        dx = px - v0[:, 0]
        dy = py - v0[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(ok, (dx * e2[:, 1] - dy * e2[:, 0]) / det, -1.0)
            w = np.where(ok, (e1[:, 0] * dy - e1[:, 1] * dx) / det, -1.0)
        tol = 1e-12
        inside = (u > tol) & (w > tol) & (u + w < 1 - tol)
        border = (~inside) & (u > -tol) & (w > -tol) & (u + w < 1 + tol)
        if border.any():
            continue
        hz = np.sort(v0[inside, 2] + u[inside] * e1[inside, 2] + w[inside] * e2[inside, 2])
        if len(hz) % 2:
            continue
        zc = lo[2] + (np.arange(nz) + 0.5) * size
        # a crossing exactly at a center means the center sits on the surface;
        # count only crossings strictly below (sign is immaterial there)
        below = np.searchsorted(hz, zc)
        return (below % 2).astype(bool)
    raise RuntimeError(f"parity ray through column ({ix}, {iy}) kept hitting edges after 64 jitters")


# ---------------------------------------------------------------------------
# Exact surface distance


def surface_distance(mesh: TriangleMesh, points: np.ndarray, k: int = 8, k2: int = 48,
                     cap: float | None = None) -> np.ndarray:
    """Exact min distance from each point to the mesh surface.

    The first k nearest triangle centroids are evaluated exactly; candidates
    k..k2 are pruned by the centroid lower bound (d >= centroid distance -
    circumradius) before evaluation. The candidate set is provably sufficient
    once the k2-th centroid is farther than the best exact distance plus the
    largest circumradius; the residue (deep points of fine meshes) falls back
    to a per-point ball query. With `cap`, values above it saturate to
    exactly `cap` (still a sound lower bound), which skips most deep work.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    tp = mesh.triangle_points
    centroids = tp.mean(axis=1)
    radius = np.linalg.norm(tp - centroids[:, None, :], axis=2).max(axis=1)
    rmax = float(radius.max())
    n_tri = len(centroids)
    tree = cKDTree(centroids)
    if n_tri <= 64:
        k = k2 = n_tri
    else:
        k = min(k, n_tri)
        k2 = min(k2, n_tri)

    out = np.empty(len(pts))
    chunk = 131072
    for s in range(0, len(pts), chunk):
        block = pts[s : s + chunk]
        cd, ci = tree.query(block, k=k2)
        if k2 == 1:
            cd, ci = cd[:, None], ci[:, None]
        best = _min_tri_distance(block, tp, ci[:, :k])
        if k2 > k:
            # centroid bound: only candidates that can still beat `best`
            pi, jj = np.nonzero(cd[:, k:] - rmax < best[:, None])
            if len(pi):
                ti = ci[pi, k + jj]
                d = _point_triangle_distance(block[pi][:, None, :], tp[ti][:, None, :, :])[:, 0]
                np.minimum.at(best, pi, d)
        if k2 < n_tri:
            proven = cd[:, -1] + 1e-12 >= best + rmax
            if cap is not None:
                proven |= np.minimum(best, cd[:, -1] - rmax) >= cap
            residue = np.nonzero(~proven)[0]
            if len(residue):
                radii = best[residue] if cap is None else np.minimum(best[residue], cap)
                best[residue] = np.minimum(
                    best[residue],
                    _exact_ball_pass(tree, tp, block[residue], radii + rmax + 1e-9),
                )
        out[s : s + chunk] = best if cap is None else np.minimum(best, cap)
    return out


def _exact_ball_pass(tree, tp, pts, radii) -> np.ndarray:
    """Exact min distance over all triangles whose centroid falls inside each
    point's own ball (any closer triangle must); pairs evaluated in chunks."""
    import itertools

    best = np.full(len(pts), np.inf)
    lists = tree.query_ball_point(pts, radii, return_sorted=False)
    lens = np.fromiter((len(x) for x in lists), dtype=np.int64, count=len(lists))
    total = int(lens.sum())
    if total == 0:
        return best
    tri_idx = np.fromiter(itertools.chain.from_iterable(lists), dtype=np.int64, count=total)
    pt_idx = np.repeat(np.arange(len(pts)), lens)
    chunk = 1_000_000
    for s in range(0, total, chunk):
        ti = tri_idx[s : s + chunk]
        pi = pt_idx[s : s + chunk]
        d = _point_triangle_distance(pts[pi][:, None, :], tp[ti][:, None, :, :])[:, 0]
        np.minimum.at(best, pi, d)
    return best


def _min_tri_distance(points: np.ndarray, tp: np.ndarray, cand) -> np.ndarray:
    """Min over candidate triangles of exact point-triangle distance."""
    out = np.full(len(points), np.inf)
    if isinstance(cand, np.ndarray) and cand.ndim == 2 and cand.dtype != object:
        p = points[:, None, :]
        tri = tp[cand]  # (n, k, 3, 3)
        d = _point_triangle_distance(p, tri)
        return d.min(axis=1)
    for i, ids in enumerate(cand):
        tri = tp[np.asarray(ids, dtype=np.int64)]
        d = _point_triangle_distance(points[i][None, None, :], tri[None, :, :, :])
        out[i] = d.min()
    return out


def _point_triangle_distance(p: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Ericson closest-point-on-triangle, vectorized over (..., k) candidates."""
    a, b, c = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    ab = b - a
    ac = c - a
    ap = p - a

    d1 = np.einsum("...i,...i->...", ab, ap)
    d2 = np.einsum("...i,...i->...", ac, ap)
    bp = p - b
    d3 = np.einsum("...i,...i->...", ab, bp)
    d4 = np.einsum("...i,...i->...", ac, bp)
    cp = p - c
    d5 = np.einsum("...i,...i->...", ab, cp)
    d6 = np.einsum("...i,...i->...", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    denom_vw = (va + vb + vc)
    with np.errstate(divide="ignore", invalid="ignore"):
        v_face = np.where(denom_vw != 0, vb / denom_vw, 0.0)
        w_face = np.where(denom_vw != 0, vc / denom_vw, 0.0)

    # region tests, applied in priority order via np.select
    in_a = (d1 <= 0) & (d2 <= 0)
    in_b = (d3 >= 0) & (d4 <= d3)
    in_c = (d6 >= 0) & (d5 <= d6)
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where((d1 - d3) != 0, d1 / (d1 - d3), 0.0)
        w_ac = np.where((d2 - d6) != 0, d2 / (d2 - d6), 0.0)
        u_bc = np.where(((d4 - d3) + (d5 - d6)) != 0, (d4 - d3) / ((d4 - d3) + (d5 - d6)), 0.0)
    on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    on_bc = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)

    closest = a + v_face[..., None] * ab + w_face[..., None] * ac
    closest = np.where(on_bc[..., None], b + u_bc[..., None] * (c - b), closest)
    closest = np.where(on_ac[..., None], a + w_ac[..., None] * ac, closest)
    closest = np.where(on_ab[..., None], a + v_ab[..., None] * ab, closest)
    closest = np.where(in_c[..., None], c, closest)
    closest = np.where(in_b[..., None], b, closest)
    closest = np.where(in_a[..., None], a, closest)
    return np.linalg.norm(p - closest, axis=-1)
