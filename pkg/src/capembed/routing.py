"""Interior routing: k-NN graph over trimmed voxels, Dijkstra with penalties.

Conduits connect the ordered points in series. After each leg, the used edges
and every edge within one conduit diameter of the leg receive a large weight
penalty (default 300 mm) so later legs avoid them.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .points import TouchpointSet
from .voxel import VoxelGrid

__all__ = [
    "PathGraph",
    "ConduitSegment",
    "ConduitNetwork",
    "RoutingError",
    "build_graph",
    "shortest_path",
    "route_serial",
]

DEFAULT_PENALTY = 300.0  # mm, per sec 6.1 step (4)
DEFAULT_K = 10
DEFAULT_DIAMETER = 5.0


class RoutingError(RuntimeError):
    pass


@dataclass
class PathGraph:
    """Undirected weighted graph in CSR form over voxel centers."""

    vertices: np.ndarray  # (V, 3) mm
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray  # mutable: penalties accumulate here
    k: int
    voxel_size: float
    surface_distance: np.ndarray  # per-vertex, inherited from the trimmed grid

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.indptr[v], self.indptr[v + 1]
        return self.indices[s:e], self.weights[s:e]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def edge_lengths(self) -> np.ndarray:
        """Geometric edge lengths (immutable base weights)."""
        src = np.repeat(np.arange(self.n_vertices), np.diff(self.indptr))
        return np.linalg.norm(self.vertices[src] - self.vertices[self.indices], axis=1)

    def components(self) -> np.ndarray:
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import connected_components

        m = csr_matrix((np.ones_like(self.weights), self.indices, self.indptr), shape=(self.n_vertices,) * 2)
        _, labels = connected_components(m, directed=False)
        return labels

    def add_penalty(self, vertex_ids: np.ndarray, penalty: float) -> None:
        """Penalize every edge with either endpoint in `vertex_ids`."""
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[vertex_ids] = True
        src = np.repeat(np.arange(self.n_vertices), np.diff(self.indptr))
        hit = mask[src] | mask[self.indices]
        self.weights[hit] += penalty


def build_graph(grid: VoxelGrid, k: int = DEFAULT_K) -> PathGraph:
    """Symmetrized k-nearest-neighbor graph over occupied voxel centers."""
    if k < 1:
        raise ValueError("k must be >= 1")
    centers = grid.occupied_centers()
    dists = grid.occupied_distances()
    n = len(centers)
    if n == 0:
        raise RoutingError("empty grid: nothing to route through")
    if n == 1:
        warnings.warn("graph has a single vertex; it is trivially isolated")
        return PathGraph(centers, np.array([0, 0]), np.array([], dtype=np.int64),
                         np.array([]), k, grid.voxel_size, dists)

    kq = min(k + 1, n)
    tree = cKDTree(centers)
    dd, ii = tree.query(centers, k=kq)
    src = np.repeat(np.arange(n), kq - 1)
    dst = ii[:, 1:].ravel()
    w = dd[:, 1:].ravel()

    # union-symmetrize: keep each undirected edge once, then mirror
    a = np.minimum(src, dst)
    b = np.maximum(src, dst)
    order = np.lexsort((b, a))
    a, b, w = a[order], b[order], w[order]
    keep = np.ones(len(a), dtype=bool)
    keep[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
    a, b, w = a[keep], b[keep], w[keep]

    u = np.concatenate([a, b])
    v = np.concatenate([b, a])
    ww = np.concatenate([w, w])
    order = np.lexsort((v, u))
    u, v, ww = u[order], v[order], ww[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, u + 1, 1)
    np.cumsum(indptr, out=indptr)
    return PathGraph(centers, indptr, v.astype(np.int64), ww.astype(np.float64), k, grid.voxel_size, dists)


def shortest_path(graph: PathGraph, src: int, dst: int, astar: bool = False) -> tuple[np.ndarray, float]:
    """Dijkstra (or A* with Euclidean heuristic) with smaller-index tie-breaking.

    Returns (vertex index path, total weight).
    """
    n = graph.n_vertices
    if not (0 <= src < n and 0 <= dst < n):
        raise ValueError("src/dst out of range")
    if src == dst:
        return np.array([src]), 0.0

    if astar:
        hfun = np.linalg.norm(graph.vertices - graph.vertices[dst], axis=1)
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    dist[src] = 0.0
    done = np.zeros(n, dtype=bool)
    heap = [(hfun[src] if astar else 0.0, src)]
    indptr, indices, weights = graph.indptr, graph.indices, graph.weights
    while heap:
        _, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        if v == dst:
            break
        dv = dist[v]
        s, e = indptr[v], indptr[v + 1]
        for w_idx in range(s, e):
            u = indices[w_idx]
            if done[u]:
                continue
            nd = dv + weights[w_idx]
            if nd < dist[u] or (nd == dist[u] and (pred[u] == -1 or v < pred[u])):
                dist[u] = nd
                pred[u] = v
                heapq.heappush(heap, ((nd + hfun[u]) if astar else nd, u))
    if not np.isfinite(dist[dst]):
        raise RoutingError(f"no path between vertices {src} and {dst}")
    path = [dst]
    while path[-1] != src:
        path.append(int(pred[path[-1]]))
    return np.array(path[::-1], dtype=np.int64), float(dist[dst])


@dataclass
class ConduitSegment:
    from_id: str
    to_id: str
    centerline: np.ndarray  # (k, 3) mm: exact centroid, routed vertices, exact centroid
    diameter: float
    conductivity: str  # "high" | "low"
    vertex_ids: np.ndarray  # routed graph vertices (stub endpoints excluded)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.centerline, axis=0), axis=1).sum())


@dataclass
class ConduitNetwork:
    segments: list[ConduitSegment]
    point_order: list[str]
    warnings: list[str] = field(default_factory=list)

    def low_segments(self) -> list[ConduitSegment]:
        return [s for s in self.segments if s.conductivity == "low"]


def route_serial(
    graph: PathGraph,
    points: TouchpointSet,
    penalty: float = DEFAULT_PENALTY,
    diameter: float = DEFAULT_DIAMETER,
    min_lengths: dict | float | None = None,
    max_retries: int = 8,
    seed: int = 0,
    astar: bool = False,
) -> ConduitNetwork:
    """Connect all points in series by penalized shortest paths.

    Legs shorter than their minimum length trigger the fallback: first seeded
    permutations of the touchpoint order, then penalized re-runs on the
    accumulated weights, until satisfied or `max_retries` attempts are spent.
    """
    base_weights = graph.weights.copy()
    rng = np.random.default_rng(seed)
    ordered = points.ordered_points()
    notes: list[str] = []

    tree = cKDTree(graph.vertices)
    snap_d, snap_i = tree.query(np.array([s.centroid for s in ordered]))
    for sel, d in zip(ordered, snap_d):
        if d > 2 * graph.voxel_size:
            msg = f"point {sel.id!r} snaps {d:.2f} mm to the nearest interior vertex (> 2 voxels)"
            warnings.warn(msg)
            notes.append(msg)

    labels = graph.components()
    snap_labels = labels[snap_i]
    if len(set(snap_labels.tolist())) > 1:
        groups = {}
        for sel, lab in zip(ordered, snap_labels):
            groups.setdefault(int(lab), []).append(sel.id)
        raise RoutingError(f"unroutable interior: points span disconnected components {groups}")

    touch_idx = list(range(len(points.touchpoints)))
    best_shortfall = None
    for attempt in range(max_retries + 1):
        if attempt == 0:
            perm = touch_idx
            graph.weights[:] = base_weights
        elif attempt <= max(1, max_retries // 2):
            perm = list(rng.permutation(touch_idx))
            graph.weights[:] = base_weights
        else:
            perm = touch_idx  # penalized re-run: keep accumulated weights from last attempt
        net = _route_once(graph, points, perm, penalty, diameter, astar, notes)
        short = _short_legs(net, min_lengths)
        if not short:
            return net
        lengths = {s.from_id + "->" + s.to_id: round(s.length, 2) for s in net.segments}
        best_shortfall = (short, lengths)
    short, lengths = best_shortfall
    raise RoutingError(
        f"retries exhausted: legs below minimum length {short}; achieved lengths {lengths}"
    )


def simplify_polyline(pts: np.ndarray, tol: float) -> np.ndarray:
    """Douglas-Peucker indices (endpoints kept, vertices are a subset)."""
    pts = np.asarray(pts, dtype=np.float64)
    n = len(pts)
    if n <= 2:
        return np.arange(n)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        seg = pts[b] - pts[a]
        ln2 = float(seg @ seg)
        mids = pts[a + 1 : b]
        if ln2 == 0:
            d = np.linalg.norm(mids - pts[a], axis=1)
        else:
            t = np.clip((mids - pts[a]) @ seg / ln2, 0.0, 1.0)
            d = np.linalg.norm(mids - (pts[a] + t[:, None] * seg), axis=1)
        i = int(np.argmax(d))
        if d[i] > tol:
            keep[a + 1 + i] = True
            stack.append((a, a + 1 + i))
            stack.append((a + 1 + i, b))
    return np.nonzero(keep)[0]


def _route_once(graph, points, perm, penalty, diameter, astar, notes) -> ConduitNetwork:
    ordered = points.ordered_points()
    if points.mode == "double-wire":
        mids = [points.touchpoints[i] for i in perm]
        ordered = [ordered[0], *mids, ordered[-1]]
    else:
        mids = [points.touchpoints[i] for i in perm]
        ordered = [ordered[0], *mids]

    tree = cKDTree(graph.vertices)
    _, snaps = tree.query(np.array([s.centroid for s in ordered]))

    segs = []
    for i in range(len(ordered) - 1):
        a, b = ordered[i], ordered[i + 1]
        va, vb = int(snaps[i]), int(snaps[i + 1])
        vpath, _ = shortest_path(graph, va, vb, astar=astar)
        # thin the voxel staircase to long straight legs; kept vertices are a
        # subset of the routed ones, so clearance guarantees carry over
        kept = simplify_polyline(graph.vertices[vpath], tol=0.5 * graph.voxel_size)
        vkept = vpath[kept]
        poly = np.vstack([a.centroid[None, :], graph.vertices[vkept], b.centroid[None, :]])
        # high conductivity for conduits that originate at a wiring point
        wiring_ids = {w.id for w in points.wiring_points}
        cond = "high" if (a.id in wiring_ids or b.id in wiring_ids) else "low"
        segs.append(ConduitSegment(a.id, b.id, poly, diameter, cond, vkept))
        near = tree.query_ball_point(graph.vertices[vpath], r=diameter)
        ids = np.unique(np.concatenate([np.asarray(x, dtype=np.int64) for x in near])) if len(near) else []
        graph.add_penalty(np.asarray(ids, dtype=np.int64), penalty)
    return ConduitNetwork(segments=segs, point_order=[s.id for s in ordered], warnings=list(notes))


def _short_legs(net: ConduitNetwork, min_lengths) -> list:
    if min_lengths is None:
        return []
    out = []
    for seg in net.segments:
        if seg.conductivity != "low":
            continue
        if isinstance(min_lengths, dict):
            lim = min_lengths.get((seg.from_id, seg.to_id), min_lengths.get("*", 0.0))
        else:
            lim = float(min_lengths)
        if seg.length < lim:
            out.append((seg.from_id, seg.to_id, round(seg.length, 2), lim))
    return out


def overlap_report(net: ConduitNetwork) -> dict:
    """Soft non-overlap check: per segment pair, the fraction of routed-vertex
    pairs closer than one conduit diameter (0.0 everywhere with the default
    penalty on the shipped fixtures)."""
    out = {}
    segs = net.segments
    for i in range(len(segs)):
        pi = segs[i].centerline[1:-1]
        if not len(pi):
            continue
        ti = cKDTree(pi)
        for j in range(i + 1, len(segs)):
            if {segs[i].from_id, segs[i].to_id} & {segs[j].from_id, segs[j].to_id}:
                continue  # consecutive legs legitimately meet at the shared point
            pj = segs[j].centerline[1:-1]
            if not len(pj):
                continue
            d = min(segs[i].diameter, segs[j].diameter)
            close = sum(len(x) for x in ti.query_ball_point(pj, r=d))
            out[(i, j)] = close / (len(pi) * len(pj))
    return out
