"""Serpentine space-filling traces inside conduit capsules.

A conduit is modeled as a sphere-swept polyline (union of per-segment
capsules). For each polyline segment a local frame is built: layers stack
along the segment's "up" axis, and runs are chords perpendicular to the local
tangent. Chords sit on a half-offset station grid confined to the segment's
centerline extent; layers sit on a centered grid. Both grids only move
outward as margins grow, which makes total trace length non-increasing in the
margin scale.

Resistance follows the measured resistivity of printed traces: in-plane and
vertical millimeters are priced separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ResistivityModel",
    "SerpentinePath",
    "UnfillableError",
    "TuningError",
    "fill_serpentine",
    "estimate_resistance",
    "max_achievable_resistance",
    "straight_fallback_resistance",
    "tune_to_target",
    "distance_to_capsules",
]

DEFAULT_RAY_MARGIN = 1.2
DEFAULT_LAYER_MARGIN = 1.2
DEFAULT_THICKNESS_XY = 0.8
DEFAULT_THICKNESS_Z = 1.2
MIN_RUN = 3.0  # mm; runs shorter than this are turn-dominated and dropped


class UnfillableError(ValueError):
    pass


class TuningError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResistivityModel:
    """Ohm-per-mm of printed trace; slopes from the filament measurements."""

    rho_xy: float = 256.0
    rho_z: float = 1013.0
    intercept_xy: float = 0.0
    intercept_z: float = 0.0

    def __post_init__(self):
        if self.rho_xy <= 0 or self.rho_z <= 0:
            raise ValueError("resistivities must be positive")

    @classmethod
    def fit(cls, horizontal: np.ndarray, vertical: np.ndarray) -> "ResistivityModel":
        """Least-squares (length, ohm) regression with intercepts."""

        def line(data):
            d = np.asarray(data, dtype=np.float64)
            a = np.vstack([d[:, 0], np.ones(len(d))]).T
            (m, b), *_ = np.linalg.lstsq(a, d[:, 1], rcond=None)
            return float(m), float(b)

        mx, bx = line(horizontal)
        mz, bz = line(vertical)
        return cls(rho_xy=mx, rho_z=mz, intercept_xy=bx, intercept_z=bz)

    def predict_xy(self, length: float) -> float:
        return self.rho_xy * length + self.intercept_xy

    def predict_z(self, length: float) -> float:
        return self.rho_z * length + self.intercept_z


@dataclass
class SerpentinePath:
    polyline: np.ndarray  # (k, 3) mm
    length_xy: float
    length_z: float
    ray_margin: float
    layer_margin: float
    thickness_xy: float
    thickness_z: float
    notes: list[str] = field(default_factory=list)

    @property
    def total_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.polyline, axis=0), axis=1).sum())


def estimate_resistance(path: SerpentinePath, model: ResistivityModel | None = None) -> float:
    model = model or ResistivityModel()
    return model.rho_xy * path.length_xy + model.rho_z * path.length_z


# ---------------------------------------------------------------------------
# Frames and capsules


def _segment_frame(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(tangent, layer axis 'up', chord axis). Layers follow global z unless the
    segment is near-vertical, in which case x serves as the local up."""
    t = b - a
    t = t / np.linalg.norm(t)
    up = np.array([0.0, 0.0, 1.0])
    if abs(t @ up) > 0.99:
        up = np.array([1.0, 0.0, 0.0])
    n = up - (up @ t) * t
    n = n / np.linalg.norm(n)
    c = np.cross(n, t)
    return t, n, c


def distance_to_capsules(points: np.ndarray, centerline: np.ndarray, radius: float) -> np.ndarray:
    """Distance from each point to the sphere-swept polyline surface offset
    (negative inside). Used by containment checks."""
    pts = np.atleast_2d(points)
    a = centerline[:-1]
    b = centerline[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    best = np.full(len(pts), np.inf)
    for i in range(len(a)):
        if denom[i] == 0:
            d = np.linalg.norm(pts - a[i], axis=1)
        else:
            t = np.clip((pts - a[i]) @ ab[i] / denom[i], 0.0, 1.0)
            d = np.linalg.norm(pts - (a[i] + t[:, None] * ab[i]), axis=1)
        best = np.minimum(best, d)
    return best - radius


# ---------------------------------------------------------------------------
# Fill


def fill_serpentine(
    conduit,
    ray_margin: float = DEFAULT_RAY_MARGIN,
    layer_margin: float = DEFAULT_LAYER_MARGIN,
    thickness_xy: float = DEFAULT_THICKNESS_XY,
    thickness_z: float = DEFAULT_THICKNESS_Z,
    min_run: float = MIN_RUN,
) -> SerpentinePath:
    """Fill one conduit with a connected serpentine from its start to its end.

    `conduit` provides `.centerline` (k, 3) and `.diameter`.
    """
    centerline = np.asarray(conduit.centerline, dtype=np.float64)
    diameter = float(conduit.diameter)
    if diameter < ray_margin + thickness_xy:
        raise UnfillableError(
            f"conduit diameter {diameter:g} mm cannot host a serpentine; "
            f"needs at least {ray_margin + thickness_xy:g} mm (ray margin + trace width)"
        )
    radius = diameter / 2.0

    pieces: list[np.ndarray] = []  # polyline chunks
    lxy = 0.0
    lz = 0.0
    notes: list[str] = []
    prev_exit = None
    prev_frame = None
    any_runs = False
    for i in range(len(centerline) - 1):
        a, b = centerline[i], centerline[i + 1]
        if np.linalg.norm(b - a) < 1e-9:
            continue
        seg = _fill_segment(a, b, radius, ray_margin, layer_margin, min_run, notes)
        if seg is None:
            continue
        poly, sxy, sz, frame = seg
        any_runs = True
        if prev_exit is not None:
            cxy, cz, conn = _joint_connector(prev_exit, poly[0], a, prev_frame, frame)
            pieces.append(conn)
            lxy += cxy
            lz += cz
        pieces.append(poly)
        lxy += sxy
        lz += sz
        prev_exit = poly[-1]
        prev_frame = frame
    if not any_runs:
        raise UnfillableError(
            f"no serpentine runs fit in this conduit (diameter {diameter:g} mm, "
            f"margins {ray_margin:g}/{layer_margin:g} mm, min run {min_run:g} mm)"
        )
    polyline = np.vstack(pieces)
    keep = np.ones(len(polyline), dtype=bool)
    keep[1:] = np.linalg.norm(np.diff(polyline, axis=0), axis=1) > 1e-12
    polyline = polyline[keep]
    return SerpentinePath(
        polyline=polyline,
        length_xy=lxy,
        length_z=lz,
        ray_margin=ray_margin,
        layer_margin=layer_margin,
        thickness_xy=thickness_xy,
        thickness_z=thickness_z,
        notes=notes,
    )


def _fill_segment(a, b, radius, m_ray, m_layer, min_run, notes):
    """Serpentine for one capsule. Returns (polyline, len_xy, len_z, (t, n, c)) or None."""
    t, n, c = _segment_frame(a, b)
    length = float(np.linalg.norm(b - a))

    # layer offsets: centered grid, |h| < radius
    kmax = int(np.floor((radius - 1e-9) / m_layer))
    offsets = [k * m_layer for k in range(-kmax, kmax + 1)]

    # station positions: half-offset grid about the segment midpoint, inside [0, L]
    half = length / 2.0
    stations: list[float] = []
    k = 0
    while half - (0.5 + k) * m_ray >= -1e-9:
        stations.append(half - (0.5 + k) * m_ray)
        stations.append(half + (0.5 + k) * m_ray)
        k += 1
    stations = sorted(s for s in stations if -1e-9 <= s <= length + 1e-9)

    layers = []
    for h in offsets:
        w = radius * radius - h * h
        if w <= 0:
            continue
        w = float(np.sqrt(w))
        chord = 2.0 * w
        if chord < min_run:
            notes.append(f"layer at offset {h:+.2f} mm skipped: chord {chord:.2f} mm below min run")
            continue
        if not stations:
            notes.append(f"layer at offset {h:+.2f} mm skipped: no stations fit")
            continue
        layers.append((h, w))
    if not layers:
        return None

    pts: list[np.ndarray] = []
    lxy = 0.0
    lz = 0.0

    def P(s, y, h):
        return a + s * t + y * c + h * n

    side = 1.0
    prev_w = None
    prev_h = None
    for li, (h, w) in enumerate(layers):
        order = stations if li % 2 == 0 else stations[::-1]
        if li > 0:
            # staircase: shrink in-plane if the next layer is narrower, then rise
            land_w = min(prev_w, w)
            if prev_w > land_w:
                pts.append(P(order[0], side * land_w, prev_h))
                lxy += prev_w - land_w
            pts.append(P(order[0], side * land_w, h))
            lz += abs(h - prev_h)
            start_y = side * land_w
        else:
            start_y = side * w
            pts.append(P(order[0], start_y, h))
        # first chord: from the landing y to the far side
        pts.append(P(order[0], -side * w, h))
        lxy += abs(start_y - (-side * w))
        side = -side
        for s_prev, s in zip(order, order[1:]):
            pts.append(P(s, side * w, h))  # turn
            lxy += abs(s - s_prev)
            pts.append(P(s, -side * w, h))  # chord
            lxy += 2 * w
            side = -side
        prev_w, prev_h = w, h

    # if the chain ends on the start side, bring it to the far end through the
    # interior (in-plane run at the top layer, then a drop to the axis point)
    end_gap_far = length - float((pts[-1] - a) @ t)
    end_gap_near = float((pts[-1] - a) @ t)
    if end_gap_far > end_gap_near + 1e-9 and len(layers) > 1:
        htop = layers[-1][0]
        pts.append(P(length, 0.0, htop))
        run = np.linalg.norm(pts[-1] - pts[-2])
        lxy += float(run)
        pts.append(P(length, 0.0, 0.0))
        lz += abs(htop)

    poly = np.vstack(pts)
    return poly, lxy, lz, (t, n, c)


def _joint_connector(exit_pt, entry_pt, joint, prev_frame, next_frame):
    """Route through the shared joint vertex with axis-pure moves: in-plane to
    above/below the joint, drop to the joint (previous segment's frame), rise
    and run in-plane to the entry (next segment's frame). Every hop stays in
    one of the two capsules, so the connector is contained in their union."""
    n_prev = prev_frame[1]
    n_next = next_frame[1]
    h_exit = float((exit_pt - joint) @ n_prev)
    mid1 = joint + h_exit * n_prev
    h_entry = float((entry_pt - joint) @ n_next)
    mid2 = joint + h_entry * n_next
    pts = [mid1, joint, mid2, entry_pt]
    lxy = float(np.linalg.norm(exit_pt - mid1)) + float(np.linalg.norm(entry_pt - mid2))
    lz = abs(h_exit) + abs(h_entry)
    return lxy, lz, np.vstack(pts)


# ---------------------------------------------------------------------------
# Resistance targets


def max_achievable_resistance(conduit, model: ResistivityModel | None = None, **fill_kwargs) -> float:
    """Resistance of the densest fill (minimum margins)."""
    return estimate_resistance(fill_serpentine(conduit, **fill_kwargs), model)


def straight_fallback_resistance(conduit, model: ResistivityModel | None = None) -> float:
    """Resistance of a straight trace along the centerline (global-frame split)."""
    model = model or ResistivityModel()
    d = np.diff(np.asarray(conduit.centerline, dtype=np.float64), axis=0)
    dz = np.abs(d[:, 2]).sum()
    dxy = np.linalg.norm(d[:, :2], axis=1).sum()
    return model.rho_xy * float(dxy) + model.rho_z * float(dz)


def tune_to_target(
    conduit,
    target_r: float,
    tolerance: float = 0.05,
    model: ResistivityModel | None = None,
    thickness_xy: float = DEFAULT_THICKNESS_XY,
    thickness_z: float = DEFAULT_THICKNESS_Z,
) -> SerpentinePath:
    """Find margins whose fill lands within `tolerance` of `target_r`.

    Both margins only ever increase from the defaults (coarse layer-margin
    ladder, fine ray-margin sweep per rung). Station-count quantization makes
    resistance a descending staircase in either margin, so the sweep scans for
    the best cell rather than pure bisection.
    """
    model = model or ResistivityModel()
    dense = fill_serpentine(conduit, thickness_xy=thickness_xy, thickness_z=thickness_z)
    r_max = estimate_resistance(dense, model)
    if target_r > r_max * (1 + tolerance):
        raise TuningError(
            f"conduit too short for target resistance: max achievable {r_max:.0f} ohm "
            f"< target {target_r:.0f} ohm"
        )
    r_min = straight_fallback_resistance(conduit, model)
    if target_r < r_min * (1 - tolerance):
        raise TuningError(
            f"target below minimum achievable: even a straight trace measures "
            f"{r_min:.0f} ohm > target {target_r:.0f} ohm"
        )
    if abs(r_max - target_r) <= tolerance * target_r:
        return dense

    best = (abs(r_max - target_r), dense)
    layer_ladder = [1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0]
    diameter = float(conduit.diameter)
    for s_l in layer_ladder:
        m_l = DEFAULT_LAYER_MARGIN * s_l
        if m_l >= diameter:
            break
        def probe(s_r):
            path = fill_serpentine(
                conduit,
                ray_margin=DEFAULT_RAY_MARGIN * s_r,
                layer_margin=m_l,
                thickness_xy=thickness_xy,
                thickness_z=thickness_z,
            )
            return estimate_resistance(path, model), path

        rung_start_r = None
        prev = None  # (s_r, r) last point at or above the target band
        s_r = 1.0
        found = None
        # fine ray sweep: geometric steps move the station count by ~2 %
        while DEFAULT_RAY_MARGIN * s_r < _max_ray_margin(conduit):
            try:
                r, path = probe(s_r)
            except UnfillableError:
                break
            if rung_start_r is None:
                rung_start_r = r
            err = abs(r - target_r)
            if err < best[0]:
                best = (err, path)
            if err <= tolerance * target_r:
                return path
            if r < target_r * (1 - tolerance):
                # overshot the band; multi-leg conduits drop several stations
                # per step, so split the straddle finely before giving up
                if prev is not None:
                    lo_s, hi_s = prev[0], s_r
                    steps = max(4, int(np.ceil(np.log(hi_s / lo_s) / np.log(1.001))))
                    for k in range(1, min(steps, 64)):
                        s_mid = lo_s * (hi_s / lo_s) ** (k / steps)
                        try:
                            r_mid, path_mid = probe(s_mid)
                        except UnfillableError:
                            break
                        err = abs(r_mid - target_r)
                        if err < best[0]:
                            best = (err, path_mid)
                        if err <= tolerance * target_r:
                            found = path_mid
                            break
                break  # staircase only descends from here
            prev = (s_r, r)
            s_r *= 1.02
        if found is not None:
            return found
        if rung_start_r is not None and rung_start_r < target_r * (1 - tolerance):
            break  # coarser layer rungs start even lower
    if best[0] <= tolerance * target_r:
        return best[1]
    raise TuningError(
        f"could not reach {target_r:.0f} ohm within {tolerance:.0%}: closest achievable "
        f"{estimate_resistance(best[1], model):.0f} ohm"
    )


def _max_ray_margin(conduit) -> float:
    """Largest useful ray margin: one station must still fit in the longest leg."""
    d = np.diff(np.asarray(conduit.centerline, dtype=np.float64), axis=0)
    longest = float(np.linalg.norm(d, axis=1).max())
    return max(longest, DEFAULT_RAY_MARGIN * 2)
