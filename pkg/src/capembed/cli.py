"""Command-line interface: each pipeline stage independently invocable."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import export_io
from .circuit import CircuitSpec, ThresholdMarker, delay_profile, synthesize_session
from .mesh import read_stl, validate_mesh
from .pipeline import PipelineConfig, format_timing_report, run_pipeline
from .robustness import PerturbationSpec, perturbation_accuracy
from .routing import build_graph, route_serial
from .serpentine import estimate_resistance, fill_serpentine, tune_to_target
from .voxel import trim_shell, voxelize
from .wire_opt import GridSearchSpec, min_conduit_length, optimize_single_wire


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0)


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig(
        mesh_path=getattr(args, "mesh", "") or "",
        selection_path=getattr(args, "selection", "") or "",
        out_dir=args.out,
        seed=args.seed,
    )
    for name in ("voxel_size", "clearance", "k_neighbors", "penalty", "conduit_diameter",
                 "safety", "min_leg_length"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def cmd_validate(args) -> int:
    mesh = read_stl(args.mesh)
    rep = validate_mesh(mesh)
    print(f"triangles: {len(mesh.triangles)}")
    print(f"watertight: {rep.watertight}")
    if rep.boundary_edges:
        print(f"boundary edges: {rep.boundary_edges[:10]}")
    print(f"degenerate triangles: {len(rep.degenerate_triangles)}")
    print(f"self-intersecting pairs: {len(rep.self_intersecting_pairs)}"
          + ("" if rep.self_intersection_exhaustive else " (sampled)"))
    return 0 if rep.ok else 1


def cmd_route(args) -> int:
    mesh = read_stl(args.mesh)
    points = export_io.read_selection(args.selection)
    grid = trim_shell(voxelize(mesh, args.voxel_size), args.clearance)
    graph = build_graph(grid, args.k_neighbors)
    net = route_serial(graph, points, penalty=args.penalty, diameter=args.conduit_diameter,
                       min_lengths=args.min_leg_length or None, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "routes.json").write_text(json.dumps(export_io.routes_to_dict(net), indent=2))
    for seg in net.segments:
        print(f"{seg.from_id} -> {seg.to_id}: {seg.length:.1f} mm ({seg.conductivity})")
    return 0


def cmd_synth(args) -> int:
    routes = json.loads(Path(args.routes).read_text())
    out = {"fills": []}
    for seg in routes["segments"]:
        if seg["conductivity"] != "low":
            continue
        conduit = _SegShim(np.asarray(seg["centerline"]), seg["diameter"])
        if args.target_r:
            path = tune_to_target(conduit, args.target_r)
        else:
            path = fill_serpentine(conduit)
        out["fills"].append({
            "from": seg["from"], "to": seg["to"],
            "length_xy_mm": path.length_xy, "length_z_mm": path.length_z,
            "resistance_ohm": estimate_resistance(path),
            "polyline": path.polyline.tolist(),
        })
        print(f"{seg['from']} -> {seg['to']}: {estimate_resistance(path):.0f} ohm "
              f"({path.length_xy:.1f} mm xy, {path.length_z:.1f} mm z)")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "fills.json").write_text(json.dumps(out))
    return 0


@dataclasses.dataclass
class _SegShim:
    centerline: np.ndarray
    diameter: float


def cmd_optimize(args) -> int:
    gss = GridSearchSpec(n=args.n, r_max=args.r_max, safety=args.safety)
    res = optimize_single_wire(gss)
    print(f"r1 = {res.r1 / 1e3:.0f} kohm, r = {res.r / 1e3:.0f} kohm, "
          f"min separation = {res.min_separation * 1e6:.2f} us, headroom = {res.headroom:.3f} V")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "feasibility.json").write_text(json.dumps(export_io.feasibility_to_dict(res)))
    return 0


def cmd_scalability(args) -> int:
    for n in range(2, args.max_n + 1):
        row = []
        for mode in ("double-wire", "single-wire"):
            r = min_conduit_length(n, mode, diameter=args.diameter)
            row.append(f"{mode}: r={r.r_required / 1e3:7.1f}k len={r.conduit_length:6.2f}mm")
        print(f"N={n:3d}  " + "   ".join(row))
    return 0


def cmd_simulate(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    c = manifest["circuit"]
    spec = CircuitSpec(manifest["mode"], np.asarray(c["r"]), v_in=c["v_in"],
                       v_thres=c["v_thres"], c=c["c"], r_recv=c["r_recv"])
    prof = delay_profile(spec, args.method)
    for p, t in enumerate(prof.t_thres, 1):
        label = t.value if isinstance(t, ThresholdMarker) else f"{t * 1e6:.3f} us"
        print(f"touchpoint {p}: {label}")
    times, delays = synthesize_session(spec, [(p, 1.0) for p in range(1, spec.n + 1)], seed=args.seed)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    np.savetxt(Path(args.out) / "session.tsv", np.column_stack([times, delays]),
               header="time_s\tdelay_s", delimiter="\t")
    return 0


def cmd_robustness(args) -> int:
    from .robustness import classification_log_text, classify_session, snr_from_sessions, snr_report_text

    manifest = json.loads(Path(args.manifest).read_text())
    c = manifest["circuit"]
    spec = CircuitSpec(manifest["mode"], np.asarray(c["r"]), v_in=c["v_in"],
                       v_thres=c["v_thres"], c=c["c"], r_recv=c["r_recv"])
    acc = perturbation_accuracy(spec, PerturbationSpec(seed=args.seed))
    print("sigma_pF\taccuracy")
    for s in sorted(acc):
        print(f"{s * 1e12:.0f}\t{acc[s]:.4f}")

    prof = delay_profile(spec, "exact")
    finite = prof.finite
    noise = args.snr_noise if args.snr_noise else (np.min(np.abs(np.diff(finite))) * 0.05 if len(finite) > 1 else 1e-7)
    _, snr = snr_from_sessions(spec, noise=noise, seed=args.seed)
    print()
    print(snr_report_text(snr))

    script = []
    for p in range(1, spec.n + 1):
        script.append((None, 1.0))
        script.append((p, 5.0))
    _, delays = synthesize_session(spec, script, noise=noise, seed=args.seed)
    log = classify_session(delays, prof, trim=3.5)
    print()
    print(classification_log_text(log))
    return 0


def cmd_export(args) -> int:
    cfg = _config_from_args(args)
    res = run_pipeline(cfg)
    print(f"bundle written to {cfg.out_dir}")
    print(format_timing_report(res))
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config_from_args(args)
    res = run_pipeline(cfg)
    print(format_timing_report(res))
    for (a, b), r in res.fill_resistances.items():
        print(f"conduit {a} -> {b}: {r:.0f} ohm")
    if res.external_r1 is not None:
        print(f"external r1: {res.external_r1 / 1e3:.0f} kohm")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app()
    uvicorn.run(app, host="127.0.0.1", port=args.port)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="capembed", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a mesh is closed and intersection-free")
    p.add_argument("mesh")
    _add_common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("route", help="voxelize, trim, and route conduits")
    p.add_argument("mesh")
    p.add_argument("selection")
    p.add_argument("--voxel-size", type=float, dest="voxel_size")
    p.add_argument("--clearance", type=float, default=3.0)
    p.add_argument("--k-neighbors", type=int, default=10, dest="k_neighbors")
    p.add_argument("--penalty", type=float, default=300.0)
    p.add_argument("--conduit-diameter", type=float, default=5.0, dest="conduit_diameter")
    p.add_argument("--min-leg-length", type=float, default=0.0, dest="min_leg_length")
    _add_common(p)
    p.set_defaults(fn=cmd_route)

    p = sub.add_parser("synth", help="fill routed conduits with serpentine traces")
    p.add_argument("routes", help="routes.json from the route stage")
    p.add_argument("--target-r", type=float, default=0.0, dest="target_r")
    _add_common(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("optimize", help="single-wire resistance grid search")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r-max", type=float, required=True, dest="r_max")
    p.add_argument("--safety", type=float, default=0.9)
    _add_common(p)
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("scalability", help="minimum conduit length vs touchpoint count")
    p.add_argument("--max-n", type=int, default=20, dest="max_n")
    p.add_argument("--diameter", type=float, default=5.0)
    _add_common(p)
    p.set_defaults(fn=cmd_scalability)

    p = sub.add_parser("simulate", help="delay profile + synthesized session from a manifest")
    p.add_argument("manifest")
    p.add_argument("--method", choices=("exact", "approx"), default="exact")
    _add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("robustness", help="perturbation accuracy, SNR, and a classification log")
    p.add_argument("manifest")
    p.add_argument("--snr-noise", type=float, default=0.0, dest="snr_noise",
                   help="delay noise RMS in seconds for the synthesized SNR sessions")
    _add_common(p)
    p.set_defaults(fn=cmd_robustness)

    for name, fn in (("export", cmd_export), ("pipeline", cmd_pipeline)):
        p = sub.add_parser(name, help="run the full pipeline" + (" and export" if name == "export" else ""))
        p.add_argument("mesh")
        p.add_argument("selection")
        p.add_argument("--voxel-size", type=float, dest="voxel_size")
        p.add_argument("--clearance", type=float, default=None)
        p.add_argument("--k-neighbors", type=int, default=None, dest="k_neighbors")
        p.add_argument("--penalty", type=float, default=None)
        p.add_argument("--conduit-diameter", type=float, default=None, dest="conduit_diameter")
        p.add_argument("--safety", type=float, default=None)
        p.add_argument("--min-leg-length", type=float, default=None, dest="min_leg_length")
        _add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("serve", help="local HTTP endpoints for the design UI")
    p.add_argument("--port", type=int, default=8732)
    _add_common(p)
    p.set_defaults(fn=cmd_serve)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
