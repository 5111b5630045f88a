/** Application wiring: upload, lasso, submit, run, preview. */

import { ApiClient } from "./api";
import { lassoSelect, type ScreenPoint } from "./lasso";
import { conduitLines, delayChart, feasibilityHeatmap } from "./overlays";
import { SelectionSession, type Role } from "./selection";
import type { MeshDocument, WiringMode } from "./types";
import { Viewer } from "./viewer";

type UiState = {
  modelId: string | null;
  mesh: MeshDocument | null;
  session: SelectionSession | null;
  selectionId: string | null;
  runId: string | null;
};

export function boot(root: Document = document): void {
  const canvas = root.getElementById("viewport") as HTMLCanvasElement;
  const viewer = new Viewer(canvas);
  const api = new ApiClient("");
  const state: UiState = { modelId: null, mesh: null, session: null, selectionId: null, runId: null };
  const banner = root.getElementById("banner")!;
  const note = (msg: string, bad = false) => {
    banner.textContent = msg;
    banner.className = bad ? "bad" : "";
  };

  let lasso: ScreenPoint[] = [];
  let lassoing = false;
  let role: Role = "touch";

  (root.getElementById("role") as HTMLSelectElement).addEventListener("change", (e) => {
    role = (e.target as HTMLSelectElement).value as Role;
  });
  (root.getElementById("mode") as HTMLSelectElement).addEventListener("change", (e) => {
    if (state.session) state.session.mode = (e.target as HTMLSelectElement).value as WiringMode;
  });

  (root.getElementById("file") as HTMLInputElement).addEventListener("change", async (e) => {
    const f = (e.target as HTMLInputElement).files?.[0];
    if (!f) return;
    const info = await api.uploadModel(await f.arrayBuffer());
    state.modelId = info.model_id;
    state.mesh = await api.fetchMesh(info.model_id);
    state.session = new SelectionSession(info.model_id);
    viewer.loadMesh(state.mesh);
    note(`model ${info.model_id}: ${info.triangles} triangles`);
    animate();
  });

  canvas.addEventListener("mousedown", (ev) => {
    if (!ev.shiftKey) return;
    lassoing = true;
    lasso = [Viewer.screenPoint(ev, canvas)];
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (lassoing) lasso.push(Viewer.screenPoint(ev, canvas));
    else if (ev.buttons === 1) viewer.orbit(ev.movementX, ev.movementY);
  });
  canvas.addEventListener("mouseup", () => {
    if (!lassoing || !state.mesh || !state.session) return;
    lassoing = false;
    const hit = lassoSelect(state.mesh, lasso, viewer.lassoCamera());
    if (!hit) {
      note("lasso hit nothing; selection unchanged");
      return;
    }
    const sel = state.session.add(role, hit);
    viewer.highlightTriangles(state.mesh, hit.triangleIds, role === "touch" ? 0xff8c00 : 0x3366ff);
    note(`${sel.id}: ${hit.triangleIds.length} triangles`);
  });

  root.getElementById("submit")!.addEventListener("click", async () => {
    if (!state.session || !state.modelId) return;
    const err = state.session.validate();
    if (err) {
      note(err, true);
      return;
    }
    try {
      const res = await api.submitSelection(state.modelId, state.session.export());
      state.selectionId = res.selection_id;
      note(`selection ${res.selection_id} accepted`);
    } catch (e) {
      note(String(e), true);
    }
  });

  root.getElementById("run")!.addEventListener("click", async () => {
    if (!state.modelId || !state.selectionId) return;
    const run = await api.startRun(state.modelId, state.selectionId);
    state.runId = run.run_id;
    note(`run ${run.run_id} started`);
    const final = await api.waitForRun(run.run_id, {
      intervalMs: 1500,
      sleep: (ms) => new Promise((r) => setTimeout(r, ms)),
    });
    if (final.state === "failed") {
      note(`run failed at stage ${final.stage || "?"}: ${final.error}`, true);
      return;
    }
    const routes = await api.routes(run.run_id);
    viewer.drawConduits(conduitLines(routes));
    const profile = await api.profile(run.run_id);
    const session = await api.session(run.run_id);
    renderDelayChart(root, delayChart(profile, session));
    try {
      renderHeatmap(root, feasibilityHeatmap(await api.feasibility(run.run_id)));
    } catch {
      // double-wire runs have no feasibility grid
    }
    const dl = root.getElementById("download") as HTMLAnchorElement;
    dl.href = api.bundleUrl(run.run_id);
    dl.style.display = "inline";
    note(`run ${run.run_id} done: ${routes.segments.length} conduit segments`);
  });

  function animate(): void {
    viewer.render();
    requestAnimationFrame(animate);
  }
}

function renderDelayChart(root: Document, chart: ReturnType<typeof delayChart>): void {
  const el = root.getElementById("delays") as HTMLCanvasElement;
  const ctx = el.getContext("2d")!;
  ctx.clearRect(0, 0, el.width, el.height);
  const finite = chart.samples.filter((s) => s.delay !== null).map((s) => s.delay!) ;
  const max = finite.length ? Math.max(...finite) : 1;
  const tMax = chart.samples.length ? chart.samples[chart.samples.length - 1].t : 1;
  ctx.fillStyle = "#bbb";
  ctx.fillRect(0, el.height - 4, el.width, 4); // no-touch baseline band
  ctx.fillStyle = "#d2691e";
  for (const s of chart.samples) {
    const x = (s.t / tMax) * el.width;
    const y = s.delay === null ? el.height - 2 : el.height - (s.delay / max) * (el.height - 10);
    ctx.fillRect(x, y, 2, 2);
  }
}

function renderHeatmap(root: Document, cells: ReturnType<typeof feasibilityHeatmap>): void {
  const el = root.getElementById("heatmap") as HTMLCanvasElement;
  const ctx = el.getContext("2d")!;
  ctx.clearRect(0, 0, el.width, el.height);
  const r1s = [...new Set(cells.map((c) => c.r1))];
  const rs = [...new Set(cells.map((c) => c.r))];
  const max = Math.max(...cells.map((c) => c.value ?? 0), 1e-12);
  const w = el.width / r1s.length;
  const h = el.height / rs.length;
  for (const c of cells) {
    const i = r1s.indexOf(c.r1);
    const j = rs.indexOf(c.r);
    if (c.value === null) {
      ctx.fillStyle = "#ffffff"; // hard-constraint violation
    } else {
      const v = Math.round(255 * (1 - c.value / max));
      ctx.fillStyle = `rgb(${v},${v},255)`;
    }
    ctx.fillRect(i * w, el.height - (j + 1) * h, Math.ceil(w), Math.ceil(h));
    if (c.chosen) {
      ctx.strokeStyle = "#ff0000";
      ctx.strokeRect(i * w, el.height - (j + 1) * h, w, h);
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("viewport")) {
  boot();
}
