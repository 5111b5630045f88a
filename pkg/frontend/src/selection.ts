/** Selection session state and the exported document. */

import { polygonCentroid, polygonNormal } from "./centroid";
import type { LassoResult } from "./lasso";
import type { SelectionDocument, SelectionEntry, Triangle, WiringMode } from "./types";

export type Role = "touch" | "wiring";

export interface SessionSelection {
  role: Role;
  id: string;
  triangleIds: number[];
  polygon: Triangle[];
}

export class SelectionSession {
  readonly modelId: string;
  mode: WiringMode = "double-wire";
  selections: SessionSelection[] = [];
  private counter = 0;

  constructor(modelId: string) {
    this.modelId = modelId;
  }

  add(role: Role, hit: LassoResult): SessionSelection {
    this.counter += 1;
    const prefix = role === "touch" ? "touch" : "wire";
    const n = this.selections.filter((s) => s.role === role).length + 1;
    const sel: SessionSelection = {
      role,
      id: `${prefix}${n}`,
      triangleIds: hit.triangleIds,
      polygon: hit.polygon,
    };
    this.selections.push(sel);
    return sel;
  }

  remove(id: string): void {
    this.selections = this.selections.filter((s) => s.id !== id);
  }

  /** Wiring-count rule, enforced before submission. */
  validate(): string | null {
    const wiring = this.selections.filter((s) => s.role === "wiring").length;
    const touch = this.selections.filter((s) => s.role === "touch").length;
    const need = this.mode === "single-wire" ? 1 : 2;
    if (touch < 1) return "select at least one touchpoint";
    if (wiring !== need) return `${this.mode} needs exactly ${need} wiring point(s), have ${wiring}`;
    return null;
  }

  /** Document consumed by the backend's selection import. */
  export(): SelectionDocument {
    const err = this.validate();
    if (err) throw new Error(err);
    const entry = (s: SessionSelection): SelectionEntry => ({
      id: s.id,
      polygon: s.polygon,
      centroid: polygonCentroid(s.polygon),
      ...(s.role === "wiring" ? { normal: polygonNormal(s.polygon) } : {}),
    });
    return {
      mode: this.mode,
      touchpoints: this.selections.filter((s) => s.role === "touch").map(entry),
      wiring_points: this.selections.filter((s) => s.role === "wiring").map(entry),
    };
  }
}
