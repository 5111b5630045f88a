/** Screen-space lasso picking over the rendered mesh.
 *
 * A triangle is selected when its projected centroid falls inside the lasso
 * polygon and it faces the camera. The backend stays authoritative for the
 * exported centroid; this module only decides membership.
 */

import { cross, polygonCentroid } from "./centroid";
import type { MeshDocument, Triangle, Vec3 } from "./types";

export interface Camera {
  /** column-major 4x4 view-projection matrix */
  viewProjection: number[];
  /** camera position in model space, for back-face rejection */
  eye: Vec3;
  width: number;
  height: number;
}

export interface ScreenPoint {
  x: number;
  y: number;
}

export function projectPoint(p: Vec3, cam: Camera): ScreenPoint | null {
  const m = cam.viewProjection;
  const x = m[0] * p[0] + m[4] * p[1] + m[8] * p[2] + m[12];
  const y = m[1] * p[0] + m[5] * p[1] + m[9] * p[2] + m[13];
  const w = m[3] * p[0] + m[7] * p[1] + m[11] * p[2] + m[15];
  if (w <= 0) return null; // behind the camera
  const ndcX = x / w;
  const ndcY = y / w;
  return {
    x: (ndcX + 1) * 0.5 * cam.width,
    y: (1 - ndcY) * 0.5 * cam.height,
  };
}

export function pointInPolygon(p: ScreenPoint, polygon: ScreenPoint[]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const xi = polygon[i].x, yi = polygon[i].y;
    const xj = polygon[j].x, yj = polygon[j].y;
    const hit = (yi > p.y) !== (yj > p.y) &&
      p.x < ((xj - xi) * (p.y - yi)) / (yj - yi) + xi;
    if (hit) inside = !inside;
  }
  return inside;
}

export interface LassoResult {
  triangleIds: number[];
  polygon: Triangle[];
  centroid: Vec3;
}

export function meshTriangle(mesh: MeshDocument, id: number): Triangle {
  const [a, b, c] = mesh.triangles[id];
  return [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]];
}

function facesCamera(t: Triangle, eye: Vec3): boolean {
  const n = cross(
    [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]],
    [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]],
  );
  const toEye: Vec3 = [eye[0] - t[0][0], eye[1] - t[0][1], eye[2] - t[0][2]];
  return n[0] * toEye[0] + n[1] * toEye[1] + n[2] * toEye[2] > 0;
}

/** Select the front-facing triangles whose projected centroids fall inside
 * the lasso. An empty hit set is a no-op (returns null). */
export function lassoSelect(
  mesh: MeshDocument,
  lasso: ScreenPoint[],
  cam: Camera,
): LassoResult | null {
  if (lasso.length < 3) return null;
  const ids: number[] = [];
  for (let i = 0; i < mesh.triangles.length; i++) {
    const tri = meshTriangle(mesh, i);
    if (!facesCamera(tri, cam.eye)) continue;
    const c: Vec3 = [
      (tri[0][0] + tri[1][0] + tri[2][0]) / 3,
      (tri[0][1] + tri[1][1] + tri[2][1]) / 3,
      (tri[0][2] + tri[1][2] + tri[2][2]) / 3,
    ];
    const s = projectPoint(c, cam);
    if (s && pointInPolygon(s, lasso)) ids.push(i);
  }
  if (ids.length === 0) return null;
  const polygon = ids.map((i) => meshTriangle(mesh, i));
  return { triangleIds: ids, polygon, centroid: polygonCentroid(polygon) };
}

/** Orthographic-style camera looking down an axis; enough for tests and the
 * initial view before the user orbits. */
export function axisCamera(axis: "x" | "y" | "z", extent: number, width: number, height: number): Camera {
  const s = 2 / (extent * 2);
  let vp: number[];
  let eye: Vec3;
  if (axis === "z") {
    vp = [s, 0, 0, 0, 0, s, 0, 0, 0, 0, -1e-3, 0, 0, 0, 0, 1];
    eye = [0, 0, extent * 10];
  } else if (axis === "y") {
    vp = [s, 0, 0, 0, 0, 0, -1e-3, 0, 0, s, 0, 0, 0, 0, 0, 1];
    eye = [0, extent * 10, 0];
  } else {
    vp = [0, 0, -1e-3, 0, s, 0, 0, 0, 0, s, 0, 0, 0, 0, 0, 1];
    eye = [extent * 10, 0, 0];
  }
  return { viewProjection: vp, eye, width, height };
}
