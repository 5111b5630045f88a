"""End-to-end pipeline: validate -> voxelize -> trim -> graph -> route ->
embed traces (tuned for single-wire, max-fill for double-wire) -> simulate ->
export, with a four-row stage timing report (voxelize / dijkstra / circuit
embed / misc)."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import export_io
from .circuit import DOUBLE, CircuitSpec, DelayProfile, delay_profile, synthesize_session
from .mesh import MeshError, TriangleMesh, read_stl, validate_mesh
from .points import PointGeometry, TouchpointSet, build_point_geometry
from .routing import ConduitNetwork, build_graph, route_serial
from .serpentine import (
    ResistivityModel,
    SerpentinePath,
    estimate_resistance,
    fill_serpentine,
    tune_to_target,
)
from .voxel import trim_shell, voxelize
from .wire_opt import GridSearchSpec, optimize_single_wire

__all__ = ["PipelineConfig", "PipelineResult", "PipelineError", "run_pipeline"]


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception, hint: str = ""):
        self.stage = stage
        self.cause = cause
        self.hint = hint
        msg = f"stage {stage!r} failed: {cause}"
        if hint:
            msg += f" (hint: {hint})"
        super().__init__(msg)


@dataclass
class PipelineConfig:
    mesh_path: str = ""
    selection_path: str = ""
    out_dir: str = "out"
    voxel_size: float | None = None  # default: 0.5 % of the longest bbox side
    clearance: float = 3.0
    k_neighbors: int = 10
    penalty: float = 300.0
    conduit_diameter: float = 5.0
    sphere_diameter: float = 12.0
    cyl_diameter: float = 4.0
    cyl_length: float = 10.0
    ray_margin: float = 1.2
    layer_margin: float = 1.2
    min_leg_length: float = 0.0
    max_retries: int = 8
    r1_range: tuple = (200e3, 10e6)
    r1_step: float = 200e3
    r_step: float = 50e3
    safety: float = 0.9
    v_in: float = 5.0
    v_thres: float = 2.5
    c: float = 100e-12
    r_recv: float = 100e6
    layer_height: float = 0.24
    seed: int = 0
    use_astar: bool = False
    validate_self_intersection: bool = True
    tune_tolerance: float = 0.05

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["r1_range"] = list(self.r1_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if "r1_range" in d:
            d["r1_range"] = tuple(d["r1_range"])
        return cls(**d)


@dataclass
class PipelineResult:
    mesh: TriangleMesh
    mesh_sha256: str
    config: PipelineConfig
    points: TouchpointSet
    point_geometry: PointGeometry
    network: ConduitNetwork
    fills: dict  # (from_id, to_id) -> SerpentinePath
    fill_resistances: dict
    circuit: CircuitSpec
    profile: DelayProfile
    external_r1: float | None
    optimization: object  # OptimizationResult | None
    timings: dict = field(default_factory=dict)
    session: tuple | None = None

    def timing_rows(self) -> list[tuple[str, float]]:
        """Four-row breakdown in the completion-time table's shape."""
        return [
            ("voxelize", self.timings.get("voxelize", 0.0)),
            ("dijkstra", self.timings.get("dijkstra", 0.0)),
            ("circuit embed", self.timings.get("circuit_embed", 0.0)),
            ("misc", self.timings.get("misc", 0.0)),
        ]


def run_pipeline(
    config: PipelineConfig,
    mesh: TriangleMesh | None = None,
    points: TouchpointSet | None = None,
    export: bool = True,
) -> PipelineResult:
    timings = {"voxelize": 0.0, "dijkstra": 0.0, "circuit_embed": 0.0, "misc": 0.0}

    def staged(stage: str, bucket: str, fn, hint: str = ""):
        t0 = time.perf_counter()
        try:
            out = fn()
        except Exception as exc:  # surface the stage name and a remediation hint
            raise PipelineError(stage, exc, hint) from exc
        timings[bucket] += time.perf_counter() - t0
        return out

    model = ResistivityModel()

    if mesh is None:
        mesh = staged("load", "misc", lambda: read_stl(config.mesh_path), "check the STL path/format")
    mesh_sha = _mesh_hash(mesh)  # canonical: hash the parsed geometry, not the file encoding
    if points is None:
        points = staged(
            "selection", "misc", lambda: export_io.read_selection(config.selection_path),
            "selection document must carry touchpoints, wiring points and mode",
        )

    def _validate():
        rep = validate_mesh(mesh, check_self_intersection=config.validate_self_intersection)
        if not rep.watertight:
            raise MeshError(f"mesh is not watertight; offending edges: {rep.boundary_edges[:8]}")
        if rep.self_intersecting_pairs:
            raise MeshError(f"mesh self-intersects; first pairs: {rep.self_intersecting_pairs[:8]}")
        return rep

    staged("validate", "misc", _validate, "repair the mesh before running the pipeline")

    grid = staged("voxelize", "voxelize", lambda: voxelize(mesh, config.voxel_size),
                  "increase voxel_size for very large models")
    trimmed = staged("trim", "voxelize", lambda: trim_shell(grid, config.clearance),
                     "model walls may be too thin for the clearance")
    graph = staged("graph", "dijkstra", lambda: build_graph(trimmed, config.k_neighbors))
    net = staged(
        "route", "dijkstra",
        lambda: route_serial(
            graph, points,
            penalty=config.penalty, diameter=config.conduit_diameter,
            min_lengths=config.min_leg_length or None,
            max_retries=config.max_retries, seed=config.seed, astar=config.use_astar,
        ),
        "try fewer touchpoints, a larger model, or a smaller clearance",
    )

    geom = staged(
        "points", "misc",
        lambda: build_point_geometry(mesh, points, config.sphere_diameter, config.cyl_diameter, config.cyl_length),
    )

    # circuit embedding: max fill for double wire, optimized + tuned for single
    low = net.low_segments()
    fills: dict = {}
    resist: dict = {}
    optimization = None
    external_r1 = None

    def _embed():
        nonlocal optimization, external_r1
        if not low:
            raise ValueError(
                "a series circuit needs at least 2 touchpoints to host resistive conduits"
            )
        dense = {}
        for seg in low:
            dense[(seg.from_id, seg.to_id)] = fill_serpentine(
                seg, ray_margin=config.ray_margin, layer_margin=config.layer_margin
            )
        if points.mode == DOUBLE:
            for key, path in dense.items():
                fills[key] = path
                resist[key] = estimate_resistance(path, model)
            return
        r_max = min(estimate_resistance(p, model) for p in dense.values())
        gss = GridSearchSpec(
            n=points.n_touch, r_max=r_max,
            r1_range=config.r1_range, r1_step=config.r1_step, r_step=config.r_step,
            v_in=config.v_in, v_thres=config.v_thres, c=config.c, r_recv=config.r_recv,
            safety=config.safety,
        )
        optimization = optimize_single_wire(gss)
        external_r1 = optimization.r1
        for seg in low:
            key = (seg.from_id, seg.to_id)
            fills[key] = tune_to_target(seg, optimization.r, tolerance=config.tune_tolerance, model=model)
            resist[key] = estimate_resistance(fills[key], model)

    staged("embed", "circuit_embed", _embed, "conduits may be too short for the requested resistance")

    def _simulate():
        if points.mode == DOUBLE:
            # r_1 models the (negligible) high-conductivity lead to the first
            # touchpoint; the model needs it positive
            rs = [1.0] + [resist[(s.from_id, s.to_id)] for s in low]
        else:
            rs = [external_r1] + [resist[(s.from_id, s.to_id)] for s in low]
        spec = CircuitSpec(points.mode, np.array(rs), v_in=config.v_in, v_thres=config.v_thres,
                           c=config.c, r_recv=config.r_recv)
        prof = delay_profile(spec, "exact")
        script = []
        for p in range(1, spec.n + 1):
            script.append((None, 0.5))
            script.append((p, 1.0))
        session = synthesize_session(spec, script, noise=min(s for _, s in _seps(prof)) * 0.05
                                     if spec.n > 1 else 0.0, seed=config.seed)
        return spec, prof, session

    spec, prof, session = staged("simulate", "misc", _simulate)

    result = PipelineResult(
        mesh=mesh, mesh_sha256=mesh_sha, config=config, points=points, point_geometry=geom,
        network=net, fills=fills, fill_resistances=resist, circuit=spec, profile=prof,
        external_r1=external_r1, optimization=optimization, timings=timings, session=session,
    )
    if export:
        staged("export", "misc", lambda: export_io.export_bundle(result, config.out_dir),
               "check output directory permissions")
    return result


def _seps(prof: DelayProfile):
    t = prof.finite
    return [(p, abs(t[p] - t[p - 1])) for p in range(1, len(t))] or [(0, 0.0)]


def _mesh_hash(mesh: TriangleMesh) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(mesh.vertices.tobytes())
    h.update(mesh.triangles.tobytes())
    return h.hexdigest()


def format_timing_report(result: PipelineResult) -> str:
    rows = result.timing_rows()
    total = sum(t for _, t in rows)
    lines = [f"{name:<14s} {t:8.2f} s" for name, t in rows]
    lines.append(f"{'total':<14s} {total:8.2f} s")
    return "\n".join(lines)
