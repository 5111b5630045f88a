"""Local HTTP endpoints backing the design UI.

In-process job registry; one pipeline run in flight per model (later requests
queue). All payloads are JSON except STL upload (raw bytes) and the bundle
download (zip).
"""

from __future__ import annotations

import io
import tempfile
import threading
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response

from . import export_io
from .circuit import ThresholdMarker
from .mesh import MeshError, TriangleMesh, read_stl
from .pipeline import PipelineConfig, run_pipeline
from .points import SelectionError

__all__ = ["create_app"]


@dataclass
class _Run:
    run_id: str
    model_id: str
    selection_id: str
    config: PipelineConfig
    state: str = "queued"  # queued | running | done | failed
    stage: str = ""
    error: str = ""
    position: int = 0
    result: object = None
    out_dir: str = ""


@dataclass
class _Store:
    models: dict = field(default_factory=dict)  # id -> (TriangleMesh, raw path)
    selections: dict = field(default_factory=dict)
    runs: dict = field(default_factory=dict)
    queues: dict = field(default_factory=dict)  # model_id -> list of run ids
    locks: dict = field(default_factory=dict)  # model_id -> threading.Lock
    root: Path = field(default_factory=lambda: Path(tempfile.mkdtemp(prefix="capembed-")))


def create_app(workdir: str | None = None) -> FastAPI:
    app = FastAPI(title="capembed design server")
    store = _Store()
    if workdir:
        store.root = Path(workdir)
        store.root.mkdir(parents=True, exist_ok=True)
    app.state.store = store

    @app.post("/models")
    async def upload_model(request: Request):
        data = await request.body()
        model_id = uuid.uuid4().hex[:12]
        path = store.root / f"{model_id}.stl"
        path.write_bytes(data)
        try:
            mesh = read_stl(path)
        except MeshError as exc:
            path.unlink(missing_ok=True)
            raise HTTPException(status_code=422, detail=str(exc))
        store.models[model_id] = (mesh, path)
        store.locks[model_id] = threading.Lock()
        store.queues[model_id] = []
        return {"model_id": model_id, "triangles": int(len(mesh.triangles)),
                "vertices": int(len(mesh.vertices))}

    def _mesh(model_id: str) -> TriangleMesh:
        if model_id not in store.models:
            raise HTTPException(status_code=404, detail=f"unknown model {model_id}")
        return store.models[model_id][0]

    @app.get("/models/{model_id}/mesh")
    def fetch_mesh(model_id: str):
        mesh = _mesh(model_id)
        return {
            "vertices": mesh.vertices.tolist(),
            "triangles": mesh.triangles.tolist(),
        }

    @app.post("/models/{model_id}/selection")
    def submit_selection(model_id: str, doc: dict):
        mesh = _mesh(model_id)
        try:
            points = export_io.selection_from_dict(doc)
            points.check_on_surface(mesh)
        except SelectionError as exc:
            return JSONResponse(status_code=422, content={"error": str(exc)})
        sel_id = uuid.uuid4().hex[:12]
        store.selections[sel_id] = (model_id, points)
        return {
            "selection_id": sel_id,
            "mode": points.mode,
            "touchpoints": [s.id for s in points.touchpoints],
            "wiring_points": [s.id for s in points.wiring_points],
            "centroids": {s.id: s.centroid.tolist() for s in points.touchpoints + points.wiring_points},
        }

    @app.post("/runs")
    def start_run(body: dict):
        model_id = body.get("model_id")
        sel_id = body.get("selection_id")
        if sel_id not in store.selections:
            raise HTTPException(status_code=404, detail="unknown selection")
        mesh = _mesh(model_id)
        _, points = store.selections[sel_id]
        cfg = PipelineConfig.from_dict(body.get("config", {}) | {"mesh_path": "", "selection_path": ""})
        run_id = uuid.uuid4().hex[:12]
        out_dir = store.root / f"run-{run_id}"
        cfg.out_dir = str(out_dir)
        run = _Run(run_id=run_id, model_id=model_id, selection_id=sel_id, config=cfg, out_dir=str(out_dir))
        store.runs[run_id] = run
        store.queues[model_id].append(run_id)
        run.position = len(store.queues[model_id]) - 1

        def work():
            with store.locks[model_id]:
                run.state = "running"
                try:
                    res = run_pipeline(cfg, mesh=mesh, points=points, export=True)
                    run.result = res
                    run.state = "done"
                except Exception as exc:
                    run.state = "failed"
                    run.stage = getattr(exc, "stage", "")
                    run.error = str(exc)
                finally:
                    store.queues[model_id].remove(run_id)

        threading.Thread(target=work, daemon=True).start()
        return {"run_id": run_id, "state": run.state, "position": run.position}

    def _run(run_id: str, want_done: bool = False) -> _Run:
        if run_id not in store.runs:
            raise HTTPException(status_code=404, detail="unknown run")
        run = store.runs[run_id]
        if want_done and run.state != "done":
            raise HTTPException(status_code=409, detail=f"run is {run.state}")
        return run

    @app.get("/runs/{run_id}")
    def poll(run_id: str):
        run = _run(run_id)
        queue = store.queues.get(run.model_id, [])
        return {
            "run_id": run.run_id,
            "state": run.state,
            "stage": run.stage,
            "error": run.error,
            "position": queue.index(run_id) if run_id in queue else 0,
        }

    @app.get("/runs/{run_id}/route")
    def route(run_id: str):
        run = _run(run_id, want_done=True)
        return export_io.routes_to_dict(run.result.network)

    @app.get("/runs/{run_id}/feasibility")
    def feasibility(run_id: str):
        run = _run(run_id, want_done=True)
        if run.result.optimization is None:
            return JSONResponse(status_code=404, content={"error": "double-wire runs have no feasibility grid"})
        return export_io.feasibility_to_dict(run.result.optimization)

    @app.get("/runs/{run_id}/profile")
    def profile(run_id: str):
        run = _run(run_id, want_done=True)
        prof = run.result.profile
        return {
            "method": prof.source,
            "t_thres_s": [t.value if isinstance(t, ThresholdMarker) else float(t) for t in prof.t_thres],
            "baseline": "inf",
        }

    @app.get("/runs/{run_id}/session")
    def session(run_id: str):
        run = _run(run_id, want_done=True)
        times, delays = run.result.session
        return {
            "time_s": times.tolist(),
            "delay_s": [None if np.isinf(d) else float(d) for d in delays],
        }

    @app.get("/runs/{run_id}/bundle")
    def bundle(run_id: str):
        run = _run(run_id, want_done=True)
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w") as zf:
            for f in sorted(Path(run.out_dir).iterdir()):
                zf.write(f, f.name)
        return Response(content=buf.getvalue(), media_type="application/zip",
                        headers={"Content-Disposition": f"attachment; filename=bundle-{run_id}.zip"})

    return app
