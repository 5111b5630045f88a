/** Area-weighted centroid/normal of a triangle patch.
 *
 * Must agree with the backend to < 1e-6 mm so an exported selection and its
 * re-import land on the same point.
 */

import type { Triangle, Vec3 } from "./types";

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function triangleArea(t: Triangle): number {
  return 0.5 * norm(cross(sub(t[1], t[0]), sub(t[2], t[0])));
}

export function polygonCentroid(polygon: Triangle[]): Vec3 {
  let total = 0;
  const acc: Vec3 = [0, 0, 0];
  const mean: Vec3 = [0, 0, 0];
  for (const t of polygon) {
    const a = triangleArea(t);
    const c: Vec3 = [
      (t[0][0] + t[1][0] + t[2][0]) / 3,
      (t[0][1] + t[1][1] + t[2][1]) / 3,
      (t[0][2] + t[1][2] + t[2][2]) / 3,
    ];
    total += a;
    for (let k = 0; k < 3; k++) {
      acc[k] += c[k] * a;
      mean[k] += c[k] / polygon.length;
    }
  }
  if (total <= 0) return mean;
  return [acc[0] / total, acc[1] / total, acc[2] / total];
}

export function polygonNormal(polygon: Triangle[]): Vec3 {
  const acc: Vec3 = [0, 0, 0];
  for (const t of polygon) {
    const c = cross(sub(t[1], t[0]), sub(t[2], t[0]));
    acc[0] += c[0];
    acc[1] += c[1];
    acc[2] += c[2];
  }
  const n = norm(acc);
  if (n === 0) throw new Error("degenerate selection polygon (zero aggregate normal)");
  return [acc[0] / n, acc[1] / n, acc[2] / n];
}
