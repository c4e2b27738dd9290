"""Self-contained demo avatar: a rigged capsule-ish figure with motion.

Ships with the CLI so the steering service and the browser viewer have
something to drive without external capture data: a skinned cylinder body
with a two-bone "leg" chain, a swing motion, an embedded graph, and an
analytic field matching the template.
"""

from __future__ import annotations

import json
import os

import numpy as np

from trivatar import config, procedural
from trivatar.deform import GraphParams, build_graph
from trivatar.mesh import TriangleMesh, save_obj
from trivatar.skeleton import DofSpec, Skeleton, save_motion, save_skeleton


def demo_template(n_around: int = 20, n_along: int = 24) -> TriangleMesh:
    """Capped cylinder 'limb' along +z, 1 m long, with smooth skin weights."""
    base = procedural.cylinder(n_around, n_along, radius=0.09, length=1.0)
    z = base.vertices[:, 2]
    # three joints: hip (z=1, the root end), knee (z=0.5), foot (z=0)
    w_hip = np.clip((z - 0.5) / 0.5, 0.0, 1.0)
    w_knee = 1.0 - np.abs(z - 0.5) / 0.5
    w_foot = np.clip((0.5 - z) / 0.5, 0.0, 1.0)
    weights = np.stack([w_hip, np.clip(w_knee, 0, 1), w_foot], axis=1)
    weights = weights / weights.sum(axis=1, keepdims=True)
    return TriangleMesh(base.vertices, base.faces, base.uv, skin_weights=weights)


def demo_skeleton() -> Skeleton:
    def trans(t):
        m = np.eye(4)
        m[:3, 3] = t
        return m

    rest = np.stack([trans([0, 0, 1.0]), trans([0, 0, -0.5]), trans([0, 0, -0.5])])
    dofs = [
        DofSpec(0, "x", "translation", "root_tx", (-1.0, 1.0)),
        DofSpec(0, "y", "translation", "root_ty", (-1.0, 1.0)),
        DofSpec(0, "z", "translation", "root_tz", (-1.0, 1.0)),
        DofSpec(0, "x", "rotation", "hip_rx", (-1.2, 1.2)),
        DofSpec(0, "y", "rotation", "hip_ry", (-1.2, 1.2)),
        DofSpec(1, "x", "rotation", "knee_rx", (-2.0, 0.2)),
        DofSpec(2, "x", "rotation", "ankle_rx", (-0.8, 0.8)),
    ]
    return Skeleton(["hip", "knee", "ankle"], [-1, 0, 1], rest, dofs)


def demo_motion(n_frames: int = 100) -> np.ndarray:
    """Swing: hip and knee oscillate out of phase; root sways in x."""
    t = np.linspace(0.0, 2 * np.pi, n_frames)
    poses = np.zeros((n_frames, 7))
    poses[:, 0] = 0.05 * np.sin(t)
    poses[:, 3] = 0.6 * np.sin(t)
    poses[:, 5] = -0.7 * (1 - np.cos(t)) / 2
    return poses


def write_demo_assets(directory) -> dict:
    """Write the full demo bundle; returns the manifest dict."""
    os.makedirs(directory, exist_ok=True)
    template = demo_template()
    skeleton = demo_skeleton()
    poses = demo_motion()

    save_obj(template, os.path.join(directory, "template.obj"))
    save_skeleton(skeleton, os.path.join(directory, "skeleton.json"))
    save_motion(poses, os.path.join(directory, "motion.json"), fps=config.CAPTURE_FPS)

    rng = np.random.default_rng(0)
    anchors = rng.choice(template.n_vertices, size=12, replace=False)
    graph = build_graph(template, anchors, k=4)
    with open(os.path.join(directory, "graph.json"), "w") as fh:
        json.dump(graph.to_json_dict(), fh)
    params = GraphParams.identity(graph.n_nodes, template.n_vertices)
    with open(os.path.join(directory, "params.json"), "w") as fh:
        json.dump(params.to_json_dict(), fh)

    # skin weights ride in a sidecar (OBJ cannot carry them)
    np.save(os.path.join(directory, "skin_weights.npy"), template.skin_weights)

    manifest = {
        "template": "template.obj",
        "skin_weights": "skin_weights.npy",
        "skeleton": "skeleton.json",
        "motion": "motion.json",
        "graph": "graph.json",
        "params": "params.json",
        "field": {"type": "mesh"},
        "sharpness": 2000.0,
        "d_max": config.D_MAX_SCHEDULE[0],
    }
    with open(os.path.join(directory, "avatar.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest
