/** Pure transforms from run artifacts to renderable primitives.
 *
 * No electrical math happens here: every number shown is fetched from the
 * backend documents.
 */

import type {
  FeasibilityDocument,
  ProfileDocument,
  RoutesDocument,
  SessionDocument,
  Vec3,
} from "./types";

export interface ConduitLine {
  from: string;
  to: string;
  points: Vec3[];
  color: string;
}

export const HIGH_COLOR = "#8b4513"; // wires
export const LOW_COLOR = "#e6b800"; // resistors

export function conduitLines(routes: RoutesDocument): ConduitLine[] {
  return routes.segments.map((s) => ({
    from: s.from,
    to: s.to,
    points: s.centerline,
    color: s.conductivity === "high" ? HIGH_COLOR : LOW_COLOR,
  }));
}

export interface HeatmapCell {
  r1: number;
  r: number;
  value: number | null; // null renders white (hard-constraint violation)
  chosen: boolean;
}

export function feasibilityHeatmap(doc: FeasibilityDocument): HeatmapCell[] {
  const cells: HeatmapCell[] = [];
  doc.r1_values.forEach((r1, i) => {
    doc.r_values.forEach((r, j) => {
      const raw = doc.cells[i][j];
      cells.push({
        r1,
        r,
        value: raw === "violation" ? null : (raw as number),
        chosen: r1 === doc.chosen.r1 && r === doc.chosen.r,
      });
    });
  });
  return cells;
}

export interface DelayBand {
  label: string; // touchpoint id or "no touch"
  delay: number | null; // null = baseline band
}

export interface DelayChart {
  /** per-sample series; baseline samples map to the zero band */
  samples: { t: number; delay: number | null }[];
  bands: DelayBand[];
}

export function delayChart(profile: ProfileDocument, session: SessionDocument): DelayChart {
  const bands: DelayBand[] = [{ label: "no touch", delay: null }];
  profile.t_thres_s.forEach((t, i) => {
    bands.push({ label: `touchpoint ${i + 1}`, delay: typeof t === "number" ? t : null });
  });
  const samples = session.time_s.map((t, i) => ({ t, delay: session.delay_s[i] }));
  return { samples, bands };
}
