"""Interactive steering service: WebSocket protocol over the render stack.

Mirrors the two-stage runtime split: explicit asset preparation (pose the
deformable template) feeding implicit evaluation (map samples, evaluate
the field, integrate).  One session per connection; a reader task accepts
and coalesces control messages (newest wins per message type) while a
single worker computes, so bursts of slider updates never queue up more
than one frame of work.

Protocol (JSON text frames unless noted):
  client -> server:
    {"type": "set_mode",   "mode": "replay"|"edit"|"orbit", "generation": int?}
    {"type": "set_frame",  "frame": int, ...}
    {"type": "set_dofs",   "dofs": [float; P], ...}
    {"type": "set_camera", "azimuth": deg, "elevation": deg,
     "distance": m, "target": [x,y,z], "width": int?, "height": int?, ...}
    {"type": "get_snapshot"}
  server -> client:
    {"type": "hello", "dofs": [{"name", "range", "value"}], "frames": N,
     "fps": f, "faces": [[a,b,c]...], "render_size": [W,H]}
    {"type": "mesh", "generation": g, "binary": "trit"}  + one binary frame
      holding the (N, 3) vertex tensor in the TRIT layout
    {"type": "render", "generation": g, "png": base64, "width": W, "height": H}
    {"type": "stats", "generation": g, "timings_ms": {...}}
    {"type": "snapshot", ...full session state...}
    {"type": "error", "reason": str}
"""

from __future__ import annotations

import asyncio
import base64
import io
import json
import os
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from starlette.concurrency import run_in_threadpool

from trivatar import config, tensorio
from trivatar.deform import (
    EmbeddedGraph,
    GraphParams,
    deformable_model,
    load_graph,
    load_params,
)
from trivatar.mesh import TriangleMesh, load_obj
from trivatar.render import Camera, Scene, render_image
from trivatar.skeleton import Skeleton, load_motion, load_skeleton, motion_window
from trivatar.utts import build_index

DEFAULT_RENDER_SIZE = 256
MODES = ("replay", "edit", "orbit")


@dataclass(frozen=True, eq=False)
class AvatarAssets:
    template: TriangleMesh
    skeleton: Skeleton
    poses: np.ndarray
    fps: float
    graph: EmbeddedGraph
    params: GraphParams
    field_spec: dict
    sharpness: float
    d_max: float


def load_assets(directory) -> AvatarAssets:
    """Read an avatar bundle via its avatar.json manifest."""
    with open(os.path.join(directory, "avatar.json")) as fh:
        manifest = json.load(fh)

    def resolve(name):
        return os.path.join(directory, manifest[name])

    template = load_obj(resolve("template"))
    if "skin_weights" in manifest:
        weights = np.load(resolve("skin_weights"))
        template = TriangleMesh(template.vertices, template.faces, template.uv, weights)
    skeleton = load_skeleton(resolve("skeleton"))
    poses, fps = load_motion(resolve("motion"))
    graph = load_graph(resolve("graph"))
    params = (
        load_params(resolve("params"))
        if "params" in manifest
        else GraphParams.identity(graph.n_nodes, template.n_vertices)
    )
    return AvatarAssets(
        template=template,
        skeleton=skeleton,
        poses=poses,
        fps=fps,
        graph=graph,
        params=params,
        field_spec=manifest.get("field", {"type": "mesh"}),
        sharpness=float(manifest.get("sharpness", 2000.0)),
        d_max=float(manifest.get("d_max", config.D_MAX_SCHEDULE[0])),
    )


class ProtocolError(ValueError):
    """Client message failed validation."""


@dataclass
class SessionState:
    """Mutable per-connection state; owned by one worker at a time."""

    assets: AvatarAssets
    mode: str = "replay"
    frame: int = 0
    dof_overrides: np.ndarray | None = None
    azimuth: float = 0.0
    elevation: float = 10.0
    distance: float = 2.5
    target: tuple = (0.0, 0.0, 0.5)
    width: int = DEFAULT_RENDER_SIZE
    height: int = DEFAULT_RENDER_SIZE
    generation: int = 0

    def __post_init__(self):
        if self.dof_overrides is None:
            self.dof_overrides = np.array(self.assets.poses[0], dtype=np.float64)

    def apply(self, msg: dict) -> None:
        kind = msg.get("type")
        if kind == "set_mode":
            mode = msg.get("mode")
            if mode not in MODES:
                raise ProtocolError(f"unknown mode {mode!r}")
            self.mode = mode
        elif kind == "set_frame":
            frame = msg.get("frame")
            if not isinstance(frame, int) or not 0 <= frame < len(self.assets.poses):
                raise ProtocolError(f"frame {frame!r} outside the loaded sequence")
            self.frame = frame
            self.dof_overrides = np.array(self.assets.poses[frame], dtype=np.float64)
        elif kind == "set_dofs":
            dofs = msg.get("dofs")
            P = self.assets.skeleton.n_dofs
            if not isinstance(dofs, list) or len(dofs) != P:
                raise ProtocolError(f"dofs must be a list of length {P}")
            self.dof_overrides = np.asarray(dofs, dtype=np.float64)
            self.mode = "edit"
        elif kind == "set_camera":
            for key in ("azimuth", "elevation", "distance"):
                if key in msg:
                    setattr(self, key, float(msg[key]))
            if self.distance <= 0:
                raise ProtocolError("camera distance must be positive")
            if "target" in msg:
                target = msg["target"]
                if not isinstance(target, list) or len(target) != 3:
                    raise ProtocolError("camera target must be [x, y, z]")
                self.target = tuple(float(v) for v in target)
            if "width" in msg:
                self.width = int(msg["width"])
            if "height" in msg:
                self.height = int(msg["height"])
        else:
            raise ProtocolError(f"unknown message type {kind!r}")
        if "generation" in msg:
            self.generation = int(msg["generation"])
        else:
            self.generation += 1

    def effective_pose(self) -> np.ndarray:
        if self.mode == "edit":
            return self.dof_overrides
        return self.assets.poses[self.frame]

    def camera(self) -> Camera:
        az = np.deg2rad(self.azimuth)
        el = np.deg2rad(self.elevation)
        offset = self.distance * np.array(
            [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)]
        )
        eye = np.asarray(self.target) + offset
        return Camera.look_at(
            eye=eye,
            target=self.target,
            up=(0, 0, 1),
            fov_deg=40.0,
            width=self.width,
            height=self.height,
        )

    def snapshot(self) -> dict:
        return {
            "type": "snapshot",
            "mode": self.mode,
            "frame": self.frame,
            "dofs": self.dof_overrides.tolist(),
            "camera": {
                "azimuth": self.azimuth,
                "elevation": self.elevation,
                "distance": self.distance,
                "target": list(self.target),
                "width": self.width,
                "height": self.height,
            },
            "generation": self.generation,
        }

    def compute(self) -> dict:
        """Pose, render, and package one frame (runs on a worker thread)."""
        assets = self.assets
        t0 = time.perf_counter()
        pose = self.effective_pose()
        window = motion_window(
            np.vstack([assets.poses, pose[None]]),
            frame=len(assets.poses),
            k=config.MOTION_WINDOW,
            fps=assets.fps,
        )
        posed = deformable_model(
            assets.template, assets.graph, assets.params, assets.skeleton, window
        )
        t1 = time.perf_counter()

        index = build_index(assets.template, posed)
        from trivatar.cli import build_field

        fld = build_field(assets.field_spec, assets.template, posed)
        scene = Scene(
            mesh=assets.template,
            field=fld,
            camera=self.camera(),
            positions=posed,
            sharpness=assets.sharpness,
            d_max=assets.d_max,
            samples_per_ray=config.INTERACTIVE_SAMPLES_PER_RAY,
            flat_color=(0.9, 0.9, 0.92),
        )
        result = render_image(scene, index=index)
        t2 = time.perf_counter()

        timings = {"deform_ms": (t1 - t0) * 1e3}
        timings.update(result.timings_ms)
        timings["total_ms"] = (t2 - t0) * 1e3
        return {
            "generation": self.generation,
            "vertices": posed,
            "color": result.color,
            "opacity": result.opacity,
            "timings": timings,
        }


def _encode_png(color: np.ndarray) -> str:
    from PIL import Image

    arr = (np.clip(color, 0, 1) * 255.0 + 0.5).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(assets: AvatarAssets, ui_dir=None):
    """FastAPI app exposing /ws plus optional static viewer files."""
    app = FastAPI(title="avatar steering service")

    # warm the compiled kernels and caches so the first client round trip
    # pays render cost only
    warmup = SessionState(assets)
    warmup.width = warmup.height = 32
    warmup.compute()

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "frames": len(assets.poses)}

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        session = SessionState(assets)
        send_lock = asyncio.Lock()

        async def send_json(payload: dict):
            async with send_lock:
                await websocket.send_text(json.dumps(payload))

        hello = {
            "type": "hello",
            "dofs": [
                {
                    "name": d.name or f"dof_{i}",
                    "range": list(d.range),
                    "value": float(assets.poses[0][i]),
                }
                for i, d in enumerate(assets.skeleton.dofs)
            ],
            "frames": len(assets.poses),
            "fps": assets.fps,
            "faces": assets.template.faces.tolist(),
            "render_size": [session.width, session.height],
        }
        await send_json(hello)

        pending: dict[str, dict] = {}
        wake = asyncio.Event()
        done = asyncio.Event()

        async def reader():
            try:
                while True:
                    raw = await websocket.receive_text()
                    try:
                        msg = json.loads(raw)
                        if not isinstance(msg, dict) or "type" not in msg:
                            raise ProtocolError("messages must be objects with a type")
                    except (json.JSONDecodeError, ProtocolError) as exc:
                        await send_json({"type": "error", "reason": str(exc)})
                        continue
                    if msg["type"] == "get_snapshot":
                        await send_json(session.snapshot())
                        continue
                    # newest wins per message type; insertion order preserved
                    pending.pop(msg["type"], None)
                    pending[msg["type"]] = msg
                    wake.set()
            except WebSocketDisconnect:
                pass
            finally:
                done.set()
                wake.set()

        reader_task = asyncio.create_task(reader())
        try:
            while not done.is_set():
                await wake.wait()
                wake.clear()
                if done.is_set():
                    break
                batch = list(pending.values())
                pending.clear()
                if not batch:
                    continue
                bad = False
                for msg in batch:
                    try:
                        session.apply(msg)
                    except ProtocolError as exc:
                        await send_json({"type": "error", "reason": str(exc)})
                        bad = True
                if bad and len(batch) == 1:
                    continue
                result = await run_in_threadpool(session.compute)
                async with send_lock:
                    await websocket.send_text(
                        json.dumps(
                            {
                                "type": "mesh",
                                "generation": result["generation"],
                                "binary": "trit",
                                "vertex_count": len(result["vertices"]),
                            }
                        )
                    )
                    await websocket.send_bytes(tensorio.tensor_bytes(result["vertices"]))
                await send_json(
                    {
                        "type": "render",
                        "generation": result["generation"],
                        "png": _encode_png(result["color"]),
                        "width": session.width,
                        "height": session.height,
                    }
                )
                await send_json(
                    {
                        "type": "stats",
                        "generation": result["generation"],
                        "timings_ms": result["timings"],
                    }
                )
        finally:
            reader_task.cancel()

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="viewer")

    return app
