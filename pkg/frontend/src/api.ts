/** Thin client for the design server endpoints. */

import type {
  FeasibilityDocument,
  MeshDocument,
  ProfileDocument,
  RoutesDocument,
  RunStatus,
  SelectionDocument,
  SessionDocument,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + url, init);
    if (!res.ok) {
      let detail = `${res.status}`;
      try {
        const body = await res.json();
        detail = body.error ?? body.detail ?? detail;
      } catch {
        // keep the status code
      }
      throw new Error(`${url}: ${detail}`);
    }
    return res.json() as Promise<T>;
  }

  uploadModel(stl: ArrayBuffer): Promise<{ model_id: string; triangles: number }> {
    return this.json("/models", { method: "POST", body: stl });
  }

  fetchMesh(modelId: string): Promise<MeshDocument> {
    return this.json(`/models/${modelId}/mesh`);
  }

  submitSelection(modelId: string, doc: SelectionDocument): Promise<{ selection_id: string }> {
    return this.json(`/models/${modelId}/selection`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
  }

  startRun(modelId: string, selectionId: string, config: Record<string, unknown> = {}):
      Promise<{ run_id: string }> {
    return this.json("/runs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ model_id: modelId, selection_id: selectionId, config }),
    });
  }

  status(runId: string): Promise<RunStatus> {
    return this.json(`/runs/${runId}`);
  }

  /** Poll until the run reaches a terminal state. */
  async waitForRun(
    runId: string,
    opts: { intervalMs?: number; maxPolls?: number; sleep?: (ms: number) => Promise<void> } = {},
  ): Promise<RunStatus> {
    const interval = opts.intervalMs ?? 1000;
    const maxPolls = opts.maxPolls ?? 3600;
    const sleep = opts.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
    let last: RunStatus | null = null;
    for (let i = 0; i < maxPolls; i++) {
      last = await this.status(runId);
      if (last.state === "done" || last.state === "failed") return last;
      await sleep(interval);
    }
    throw new Error(`run ${runId} still ${last?.state ?? "unknown"} after ${maxPolls} polls`);
  }

  routes(runId: string): Promise<RoutesDocument> {
    return this.json(`/runs/${runId}/route`);
  }

  feasibility(runId: string): Promise<FeasibilityDocument> {
    return this.json(`/runs/${runId}/feasibility`);
  }

  profile(runId: string): Promise<ProfileDocument> {
    return this.json(`/runs/${runId}/profile`);
  }

  session(runId: string): Promise<SessionDocument> {
    return this.json(`/runs/${runId}/session`);
  }

  bundleUrl(runId: string): string {
    return `${this.base}/runs/${runId}/bundle`;
  }
}
