/** Shared document shapes exchanged with the design server. */

export type Vec3 = [number, number, number];
export type Triangle = [Vec3, Vec3, Vec3];

export type WiringMode = "single-wire" | "double-wire";

export interface SelectionEntry {
  id: string;
  polygon: Triangle[];
  centroid: Vec3;
  normal?: Vec3;
}

export interface SelectionDocument {
  mode: WiringMode;
  touchpoints: SelectionEntry[];
  wiring_points: SelectionEntry[];
}

export interface MeshDocument {
  vertices: Vec3[];
  triangles: [number, number, number][];
}

export interface RouteSegment {
  from: string;
  to: string;
  diameter: number;
  conductivity: "high" | "low";
  centerline: Vec3[];
}

export interface RoutesDocument {
  point_order: string[];
  segments: RouteSegment[];
  warnings: string[];
}

export interface FeasibilityDocument {
  r1_values: number[];
  r_values: number[];
  cells: (number | "violation")[][];
  chosen: { r1: number; r: number; min_separation: number };
}

export interface ProfileDocument {
  method: string;
  t_thres_s: (number | string)[];
  baseline: string;
}

export interface SessionDocument {
  time_s: number[];
  delay_s: (number | null)[];
}

export interface RunStatus {
  run_id: string;
  state: "queued" | "running" | "done" | "failed";
  stage: string;
  error: string;
  position: number;
}
