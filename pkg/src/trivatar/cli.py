"""Command-line entry point.

Subcommands: deform, map, collisions, bake-textures, render, refine,
losses, serve, demo.  Usage errors exit 2 (argparse); data errors exit 1
with a diagnostic on stderr.  Report paths write a matplotlib figure next
to the delimited output.  All file writes are atomic.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from trivatar import config, demo, report, tensorio
from trivatar.deform import GraphParams, deformable_model, load_graph, load_params
from trivatar.field import (
    CapsuleSdf,
    DecodedSdf,
    MeshSdf,
    PlaneSdf,
    SphereSdf,
    load_mlp,
    load_triplane,
)
from trivatar.mesh import TriangleMesh, load_obj, save_obj
from trivatar.render import Camera, Scene, bake_motion_textures, render_image
from trivatar.skeleton import load_motion, load_skeleton, motion_window
from trivatar.utts import build_index, collision_ratio, map_points, sample_offset_points


def load_scene(path) -> Scene:
    """Build a Scene from its JSON description (paths relative to the file)."""
    with open(path) as fh:
        data = json.load(fh)
    base = os.path.dirname(os.fspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    mesh = load_obj(resolve(data["mesh"]))
    positions = None
    if "positions" in data:
        positions = tensorio.read_tensor(resolve(data["positions"]))

    cam = data["camera"]
    if "eye" in cam:
        camera = Camera.look_at(
            eye=cam["eye"],
            target=cam.get("target", [0, 0, 0]),
            up=cam.get("up", [0, 0, 1]),
            fov_deg=cam.get("fov_deg", 45.0),
            width=cam.get("width", 128),
            height=cam.get("height", 128),
        )
    else:
        camera = Camera(
            fx=cam["fx"],
            fy=cam["fy"],
            cx=cam["cx"],
            cy=cam["cy"],
            world_to_camera=np.asarray(cam["world_to_camera"], dtype=np.float64),
            width=cam["width"],
            height=cam["height"],
        )

    fld = build_field(data["field"], mesh, positions, resolve)
    profile = data.get("profile", "training")
    samples = data.get(
        "samples_per_ray",
        config.TRAINING_SAMPLES_PER_RAY
        if profile == "training"
        else config.INTERACTIVE_SAMPLES_PER_RAY,
    )
    return Scene(
        mesh=mesh,
        field=fld,
        camera=camera,
        positions=positions,
        sharpness=float(data.get("sharpness", 1e4)),
        d_max=float(data.get("d_max", config.D_MAX_SCHEDULE[0])),
        samples_per_ray=int(samples),
        flat_color=tuple(data.get("flat_color", (1.0, 1.0, 1.0))),
        background=tuple(data.get("background", (0.0, 0.0, 0.0))),
    )


def build_field(spec: dict, mesh=None, positions=None, resolve=lambda p: p):
    kind = spec["type"]
    if kind == "sphere":
        return SphereSdf(tuple(spec.get("center", (0, 0, 0))), float(spec["radius"]))
    if kind == "plane":
        return PlaneSdf(tuple(spec.get("normal", (0, 0, 1))), float(spec.get("offset", 0.0)))
    if kind == "capsule":
        return CapsuleSdf(tuple(spec["a"]), tuple(spec["b"]), float(spec["radius"]))
    if kind == "mesh":
        if mesh is None:
            raise ValueError("mesh field requires a mesh in the scene")
        return MeshSdf(build_index(mesh, positions))
    if kind == "decoded":
        triplane = load_triplane(resolve(spec["triplane"]))
        weights = load_mlp(resolve(spec["weights"]))
        code = spec.get("motion_code")
        if isinstance(code, str):
            code = tensorio.read_tensor(resolve(code))
        elif code is not None:
            code = np.asarray(code, dtype=np.float64)
        return DecodedSdf(
            triplane,
            weights,
            code,
            d_max=float(spec.get("d_max", config.D_MAX_SCHEDULE[0])),
            frequencies=int(spec.get("frequencies", 6)),
        )
    raise ValueError(f"unknown field type {kind!r}")


def save_png(path, image: np.ndarray) -> None:
    """Write an sRGB 8-bit PNG atomically; accepts HxW or HxWx3 in [0, 1]."""
    from PIL import Image

    arr = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    data = (arr * 255.0 + 0.5).astype(np.uint8)
    img = Image.fromarray(data)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    tensorio.atomic_write_bytes(path, buf.getvalue())


def load_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as img:
        return np.asarray(img).astype(np.float64) / 255.0


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    tensorio.atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# subcommands


def cmd_deform(args) -> int:
    mesh = load_obj(args.template)
    if args.skin_weights:
        mesh = TriangleMesh(mesh.vertices, mesh.faces, mesh.uv, np.load(args.skin_weights))
    graph = load_graph(args.graph)
    params = (
        load_params(args.params)
        if args.params
        else GraphParams.identity(graph.n_nodes, mesh.n_vertices)
    )
    skeleton = load_skeleton(args.skeleton)
    poses, fps = load_motion(args.motion)
    motion = motion_window(poses, args.frame, k=config.MOTION_WINDOW, fps=fps)
    posed = deformable_model(mesh, graph, params, skeleton, motion)
    save_obj(mesh.with_vertices(posed), args.out)
    print(f"wrote {args.out} ({mesh.n_vertices} vertices, frame {args.frame})")
    return 0


def _mesh_with_positions(args):
    mesh = load_obj(args.mesh)
    positions = tensorio.read_tensor(args.positions) if args.positions else None
    return mesh, positions


def cmd_map(args) -> int:
    mesh, positions = _mesh_with_positions(args)
    points = tensorio.read_tensor(args.points).reshape(-1, 3)
    index = build_index(mesh, positions)
    batch = map_points(index, points, args.dmax)
    tensorio.write_tensor(args.out, batch.utts_points())
    csv_path = args.csv or os.path.splitext(args.out)[0] + "_collisions.csv"
    stats = collision_ratio(index, points, args.dmax)
    _write_csv(
        csv_path,
        ["d_max", "face_frac", "edge_frac", "vertex_frac", "out_of_range_frac"],
        [[stats.d_max, stats.face_frac, stats.edge_frac, stats.vertex_frac, stats.out_of_range_frac]],
    )
    print(f"mapped {len(points)} points -> {args.out}; stats -> {csv_path}")
    return 0


def cmd_collisions(args) -> int:
    mesh, positions = _mesh_with_positions(args)
    index = build_index(mesh, positions)
    if args.points:
        points = tensorio.read_tensor(args.points).reshape(-1, 3)
    else:
        rng = np.random.default_rng(args.seed)
        h = args.offset
        points = sample_offset_points(index, args.samples, (-h, h), rng)
    d_values = [float(v) for v in args.dmax.split(",")]
    stats = [collision_ratio(index, points, d) for d in d_values]
    _write_csv(
        args.out,
        ["d_max", "face_frac", "edge_frac", "vertex_frac", "out_of_range_frac"],
        [
            [s.d_max, s.face_frac, s.edge_frac, s.vertex_frac, s.out_of_range_frac]
            for s in stats
        ],
    )
    figure = args.figure or os.path.splitext(args.out)[0] + ".png"
    report.collision_figure(stats, figure)
    for s in stats:
        print(
            f"d_max={s.d_max:.3f}: collision={s.collision_frac:.4f} "
            f"out_of_range={s.out_of_range_frac:.4f}"
        )
    print(f"wrote {args.out} and {figure}")
    return 0


def cmd_bake_textures(args) -> int:
    mesh = load_obj(args.mesh)
    frames = []
    for path in args.frames:
        frame_mesh = load_obj(path)
        if frame_mesh.n_vertices != mesh.n_vertices:
            raise ValueError(f"{path}: vertex count differs from the template")
        frames.append(frame_mesh.vertices)
    textures = bake_motion_textures(mesh, np.stack(frames), resolution=args.resolution)
    prefix = args.out_prefix
    tensorio.write_tensor(prefix + "_position.trit", textures.position)
    tensorio.write_tensor(prefix + "_velocity.trit", textures.velocity)
    tensorio.write_tensor(prefix + "_acceleration.trit", textures.acceleration)
    tensorio.write_tensor(prefix + "_uv.trit", textures.uv_id)
    tensorio.write_tensor(prefix + "_normal.trit", textures.normal)
    save_png(prefix + "_coverage.png", textures.mask.astype(float))
    report.motion_texture_figure(textures, prefix + "_preview.png")
    print(f"baked {args.resolution}x{args.resolution} motion textures -> {prefix}_*.trit")
    return 0


def cmd_render(args) -> int:
    scene = load_scene(args.scene)
    result = render_image(scene)
    save_png(args.out, result.color)
    stem = os.path.splitext(args.out)[0]
    tensorio.write_tensor(stem + "_opacity.trit", result.opacity)
    depth = np.where(np.isfinite(result.depth), result.depth, 0.0)
    tensorio.write_tensor(stem + "_depth.trit", depth)
    timings = ", ".join(f"{k}={v:.1f}" for k, v in result.timings_ms.items())
    print(f"rendered {args.out} ({scene.camera.width}x{scene.camera.height}; {timings})")
    return 0


def cmd_refine(args) -> int:
    from trivatar.refine import RefineConfig, emboss_mesh, optimize_template

    mesh = load_obj(args.mesh)
    with open(args.field) as fh:
        field_spec = json.load(fh)
    base = os.path.dirname(os.fspath(args.field))
    fld = build_field(
        field_spec["field"] if "field" in field_spec else field_spec,
        mesh,
        None,
        lambda p: p if os.path.isabs(p) else os.path.join(base, p),
    )
    cfg = RefineConfig(
        iterations=args.iterations,
        emboss_iterations=args.emboss_iterations,
        step=args.step,
        subdivide=args.subdivide,
    )
    if args.mode == "emboss":
        out_mesh, pos, frozen = emboss_mesh(mesh, mesh.vertices, fld, cfg)
        save_obj(out_mesh.with_vertices(pos), args.out)
        print(f"embossed -> {args.out} ({int(frozen.sum())} frozen vertices)")
        return 0
    pos, trace = optimize_template(mesh, mesh.vertices, fld, cfg)
    save_obj(mesh.with_vertices(pos), args.out)
    trace_path = args.trace or os.path.splitext(args.out)[0] + "_trace.json"
    payload = {
        "weights": trace[0].weights,
        "iterations": [t.values for t in trace],
        "weighted_total": [t.weighted_total() for t in trace],
    }
    tensorio.atomic_write_text(trace_path, json.dumps(payload, indent=1))
    figure = args.figure or os.path.splitext(args.out)[0] + "_trace.png"
    report.loss_trace_figure(trace, figure)
    print(
        f"optimized {len(trace) - 1} accepted steps; total "
        f"{payload['weighted_total'][0]:.6g} -> {payload['weighted_total'][-1]:.6g}; "
        f"trace -> {trace_path}, figure -> {figure}"
    )
    return 0


def cmd_losses(args) -> int:
    if not args.check_gradients:
        raise ValueError("losses currently only supports --check-gradients")
    from trivatar import gradcheck

    results = gradcheck.run_all(seed=args.seed)
    tensorio.atomic_write_text(args.out, json.dumps(results, indent=1))
    figure = args.figure or os.path.splitext(args.out)[0] + ".png"
    report.gradient_report_figure(results, figure)
    worst = max(results.values())
    for name, err in results.items():
        print(f"{name}: max_rel_err={err:.3e}")
    print(f"wrote {args.out} and {figure}; worst {worst:.3e}")
    return 0 if worst <= 1e-5 else 1


def cmd_serve(args) -> int:
    import uvicorn

    from trivatar.service import create_app, load_assets

    assets = load_assets(args.assets)
    app = create_app(assets, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_demo(args) -> int:
    manifest = demo.write_demo_assets(args.out)
    print(f"demo avatar written to {args.out} ({len(manifest)} manifest entries)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trivatar",
        description="Deformable-avatar geometry kernel: pose, map, render, refine.",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for stochastic steps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deform", help="pose the template through graph + skinning")
    p.add_argument("--template", required=True)
    p.add_argument("--skin-weights", help="sidecar .npy with per-vertex joint weights")
    p.add_argument("--graph", required=True)
    p.add_argument("--params")
    p.add_argument("--skeleton", required=True)
    p.add_argument("--motion", required=True)
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_deform)

    p = sub.add_parser("map", help="map points into texture space")
    p.add_argument("--mesh", required=True)
    p.add_argument("--positions", help="posed vertices tensor overriding the OBJ")
    p.add_argument("--points", required=True)
    p.add_argument("--dmax", type=float, default=config.D_MAX_SCHEDULE[0])
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_map)

    p = sub.add_parser("collisions", help="collision census over a d_max sweep")
    p.add_argument("--mesh", required=True)
    p.add_argument("--positions")
    p.add_argument("--points", help="query tensor; omit to sample off the surface")
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--offset", type=float, default=0.08, help="surface offset range (m)")
    p.add_argument("--dmax", default="0.01,0.02,0.04,0.08")
    p.add_argument("--out", required=True)
    p.add_argument("--figure")
    p.set_defaults(fn=cmd_collisions)

    p = sub.add_parser("bake-textures", help="bake motion textures from 3 frames")
    p.add_argument("--mesh", required=True)
    p.add_argument("--frames", nargs=3, required=True, metavar="OBJ")
    p.add_argument("--resolution", type=int, default=config.MOTION_TEXTURE_RESOLUTION)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(fn=cmd_bake_textures)

    p = sub.add_parser("render", help="render a scene description")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("refine", help="emboss or optimize a template against a field")
    p.add_argument("--mesh", required=True)
    p.add_argument("--field", required=True, help="JSON field description (or scene)")
    p.add_argument("--mode", choices=("emboss", "optimize"), default="emboss")
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--emboss-iterations", type=int, default=2)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--subdivide", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.add_argument("--figure")
    p.set_defaults(fn=cmd_refine)

    p = sub.add_parser("losses", help="loss utilities")
    p.add_argument("--check-gradients", action="store_true")
    p.add_argument("--out", default="gradient_report.json")
    p.add_argument("--figure")
    p.set_defaults(fn=cmd_losses)

    p = sub.add_parser("serve", help="run the interactive steering service")
    p.add_argument("--assets", required=True, help="asset directory with avatar.json")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8793)
    p.add_argument("--ui", help="static directory to serve at / (the viewer bundle)")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("demo", help="write the demo avatar asset bundle")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
