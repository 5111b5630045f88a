import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { axisCamera, lassoSelect, projectPoint } from "../src/lasso";
import { SelectionSession } from "../src/selection";
import type { MeshDocument, Vec3 } from "../src/types";

const fixturesDir = join(__dirname, "..", "fixtures");
const mesh: MeshDocument = JSON.parse(
  readFileSync(join(fixturesDir, "roundtrip_mesh.json"), "utf-8"),
);
const cam = axisCamera("z", 80, 800, 800);

function lassoAround(cx: number, cy: number, half: number) {
  const corners: Vec3[] = [
    [cx - half, cy - half, 30],
    [cx + half, cy - half, 30],
    [cx + half, cy + half, 30],
    [cx - half, cy + half, 30],
  ];
  return corners.map((p) => projectPoint(p, cam)!);
}

function buildSession(): SelectionSession {
  const session = new SelectionSession("model-1");
  session.mode = "double-wire";
  for (const [cx, cy] of [[9, 9], [27, 9], [45, 9], [9, 45], [27, 45]]) {
    const hit = lassoSelect(mesh, lassoAround(cx, cy, 5.5), cam)!;
    expect(hit).not.toBeNull();
    session.add("touch", hit);
  }
  for (const [cx, cy] of [[45, 45], [45, 27]]) {
    session.add("wiring", lassoSelect(mesh, lassoAround(cx, cy, 5.5), cam)!);
  }
  return session;
}

describe("SelectionSession", () => {
  it("enforces the wiring-count rule before export", () => {
    const s = new SelectionSession("m");
    s.mode = "single-wire";
    const hit = lassoSelect(mesh, lassoAround(27, 27, 8), cam)!;
    s.add("touch", hit);
    expect(s.validate()).toMatch(/wiring/);
    s.add("wiring", lassoSelect(mesh, lassoAround(9, 9, 5.5), cam)!);
    expect(s.validate()).toBeNull();
    s.add("wiring", lassoSelect(mesh, lassoAround(45, 45, 5.5), cam)!);
    expect(s.validate()).toMatch(/exactly 1/);
  });

  it("exports the bunny-style document and matches the committed fixture", () => {
    const session = buildSession();
    expect(session.validate()).toBeNull();
    const doc = session.export();
    expect(doc.touchpoints.length).toBe(5);
    expect(doc.wiring_points.length).toBe(2);
    for (const w of doc.wiring_points) {
      expect(w.normal).toBeDefined();
      expect(w.normal![2]).toBeCloseTo(1, 12);
    }
    const expected = JSON.parse(
      readFileSync(join(fixturesDir, "expected_selection.json"), "utf-8"),
    );
    expect(doc.mode).toBe(expected.mode);
    expect(doc.touchpoints.map((t) => t.id)).toEqual(expected.touchpoints.map((t: any) => t.id));
    doc.touchpoints.forEach((t, i) => {
      const e = expected.touchpoints[i];
      for (let k = 0; k < 3; k++) expect(Math.abs(t.centroid[k] - e.centroid[k])).toBeLessThan(1e-9);
      expect(t.polygon.length).toBe(e.polygon.length);
    });
  });

  it("regenerates the committed fixture byte-for-byte content", () => {
    // keeps the cross-language fixture honest: rewrite and compare structure
    const doc = buildSession().export();
    const expected = JSON.parse(
      readFileSync(join(fixturesDir, "expected_selection.json"), "utf-8"),
    );
    expect(JSON.parse(JSON.stringify(doc))).toEqual(expected);
  });
});
