"""SDF-driven template refinement and the real-time embossing pass.

Embossing displaces each vertex along its pseudo-normal by the local SDF
value (one optional edge subdivision first) and is cheap enough to run per
frame.  The full optimization descends the weighted stage-2 objective
(vertex SDF plus the four surface regularizers) over vertex positions with
a backtracking line search, so the weighted loss trace never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from trivatar import config
from trivatar.field import SdfField, sdf_eval
from trivatar.losses import LossReport, surface_regularizers
from trivatar.mesh import TriangleMesh, subdivide_once, vertex_normals
from trivatar.utts import ClosestPointIndex, map_points


class RefineError(RuntimeError):
    """Refinement diverged or received invalid configuration."""


@dataclass(frozen=True)
class RefineConfig:
    iterations: int = 200
    emboss_iterations: int = 2
    step: float = 1e-3
    subdivide: bool = False
    max_halvings: int = 10
    weights: dict = dataclass_field(
        default_factory=lambda: dict(config.STAGE2_WEIGHTS)
    )
    d_max_schedule: tuple = config.D_MAX_SCHEDULE

    def __post_init__(self):
        if self.iterations < 1 or self.emboss_iterations < 0:
            raise RefineError("iteration counts must be >= 1")
        if self.step <= 0:
            raise RefineError("step must be positive")
        if any(d <= 0 for d in self.d_max_schedule):
            raise RefineError("d_max schedule entries must be positive")


def _vertex_sdf(
    fld: SdfField,
    positions: np.ndarray,
    index: ClosestPointIndex | None,
    d_max: float,
):
    """SDF value per vertex plus an in-band validity mask.

    Global fields evaluate directly.  Texture fields evaluate at the
    vertices' mapped coordinates against a *fixed* index (the mapping is
    frozen during refinement); vertices that leave the height band are
    masked out.
    """
    if fld.domain == "global":
        s, _ = sdf_eval(fld, positions)
        return s, np.ones(len(positions), dtype=bool)
    if index is None:
        raise RefineError("texture-domain fields need a frozen mapping index")
    batch = map_points(index, positions, d_max)
    coords = batch.utts_points()
    valid = ~batch.out_of_range
    coords[:, 2] = np.clip(coords[:, 2], -fld.d_max, fld.d_max)
    s, _ = sdf_eval(fld, coords)
    s = np.where(valid, s, 0.0)
    return s, valid


def _vertex_sdf_spatial_gradient(
    fld: SdfField,
    positions: np.ndarray,
    index: ClosestPointIndex | None,
    d_max: float,
):
    """d s / d vertex position for either field domain.

    For texture fields the chain runs through the face-case mapping: the
    atlas coordinate is affine in the face plane and the height axis
    follows the face normal; edge/vertex (collision-prone) hits are frozen.
    """
    if fld.domain == "global":
        return fld.gradient(positions), np.ones(len(positions), dtype=bool)
    batch = map_points(index, positions, d_max)
    coords = batch.utts_points()
    valid = (~batch.out_of_range) & (batch.element_class == 0)
    coords[:, 2] = np.clip(coords[:, 2], -fld.d_max, fld.d_max)
    g_utts = fld.gradient(coords)  # (N, 3) w.r.t. (u_x, u_y, d)
    grad = np.zeros_like(positions)
    mesh = index.mesh
    sel = np.flatnonzero(valid)
    if sel.size:
        f = batch.face_index[sel]
        va = index.positions[mesh.faces[f, 0]]
        vb = index.positions[mesh.faces[f, 1]]
        vc = index.positions[mesh.faces[f, 2]]
        uv = mesh.uv[f]  # (m, 3, 2)
        n = index.face_normals[f]
        # barycentric gradients in the face plane: lambda_k is affine with
        # grad lambda_a = (perp of edge cb) / (2 area), etc.
        e_ab = vb - va
        e_ac = vc - va
        cross = np.cross(e_ab, e_ac)
        inv_2a = 1.0 / np.einsum("mi,mi->m", cross, cross)
        grad_la = np.cross(vc - vb, cross) * -inv_2a[:, None]
        grad_lb = np.cross(va - vc, cross) * -inv_2a[:, None]
        grad_lc = -grad_la - grad_lb
        du_dx = (
            uv[:, 0, :, None] * grad_la[:, None, :]
            + uv[:, 1, :, None] * grad_lb[:, None, :]
            + uv[:, 2, :, None] * grad_lc[:, None, :]
        )  # (m, 2, 3)
        grad[sel] = (
            np.einsum("mk,mki->mi", g_utts[sel, :2], du_dx)
            + g_utts[sel, 2:3] * n
        )
    return grad, valid


def emboss_mesh(
    mesh: TriangleMesh,
    positions: np.ndarray,
    fld: SdfField,
    cfg: RefineConfig | None = None,
):
    """Displace vertices along pseudo-normals by the SDF magnitude.

    With the subdivision flag the template is subdivided once before any
    displacement.  Vertices whose texture mapping leaves the valid band
    are frozen and flagged.  Returns (mesh, positions, frozen_mask); the
    face list only changes through the one-time subdivision.
    """
    cfg = cfg or RefineConfig()
    positions = np.asarray(positions, dtype=np.float64)
    if cfg.subdivide:
        mesh = subdivide_once(mesh.with_vertices(positions))
        positions = mesh.vertices
    index = None
    if fld.domain == "texture":
        index = ClosestPointIndex(mesh, positions)  # frozen mapping
    d_max = cfg.d_max_schedule[0]
    frozen = np.zeros(len(positions), dtype=bool)
    pos = positions.copy()
    for _ in range(cfg.emboss_iterations):
        normals = vertex_normals(mesh, pos)
        s, valid = _vertex_sdf(fld, pos, index, d_max)
        frozen |= ~valid
        active = ~frozen
        pos[active] -= s[active, None] * normals[active]
    return mesh, pos, frozen


def optimize_template(
    mesh: TriangleMesh,
    positions: np.ndarray,
    fld: SdfField,
    cfg: RefineConfig | None = None,
):
    """Gradient descent on vertex positions under the stage-2 objective.

    The mapping (for texture fields) and the regularizer reference
    Laplacians are frozen at the input positions.  Each iteration runs a
    backtracking line search (step halved on increase, up to the
    configured budget); the weighted loss trace is therefore monotone
    non-increasing.  Raises RefineError if a step cannot be accepted.
    """
    cfg = cfg or RefineConfig()
    before = np.asarray(positions, dtype=np.float64)
    index = None
    if fld.domain == "texture":
        index = ClosestPointIndex(mesh, before)
    d_max = cfg.d_max_schedule[0]
    weights = dict(cfg.weights)

    def evaluate(pos):
        s, valid = _vertex_sdf(fld, pos, index, d_max)
        l_sdf = float(np.abs(s[valid]).mean()) if valid.any() else 0.0
        reg_values, reg_grads = surface_regularizers(mesh, before, pos)
        values = {"sdf": l_sdf, **reg_values}
        return values, (s, valid), reg_grads

    def gradient(pos, s, valid, reg_grads):
        g_s, g_valid = _vertex_sdf_spatial_gradient(fld, pos, index, d_max)
        active = valid & g_valid
        grad = np.zeros_like(pos)
        if active.any():
            n_valid = int(np.count_nonzero(valid))
            grad[active] = (
                np.sign(s[active])[:, None] * g_s[active] / n_valid
            )
        total = weights["sdf"] * grad
        for name, g in reg_grads.items():
            total = total + weights[name] * g
        return total

    pos = before.copy()
    trace: list[LossReport] = []
    values, (s, valid), reg_grads = evaluate(pos)
    report = LossReport(values=dict(values), weights=weights)
    trace.append(report)
    current = report.weighted_total()

    for _ in range(cfg.iterations):
        grad = gradient(pos, s, valid, reg_grads)
        gnorm = np.linalg.norm(grad)
        if gnorm < 1e-14:
            break
        step = cfg.step
        accepted = False
        for _halving in range(cfg.max_halvings + 1):
            candidate = pos - step * grad
            try:
                cand_values, cand_state, cand_reg_grads = evaluate(candidate)
            except Exception:
                step *= 0.5
                continue
            cand_report = LossReport(values=dict(cand_values), weights=weights)
            if cand_report.weighted_total() <= current:
                pos = candidate
                values, (s, valid), reg_grads = cand_values, cand_state, cand_reg_grads
                current = cand_report.weighted_total()
                trace.append(cand_report)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise RefineError(
                f"line search failed after {cfg.max_halvings} halvings "
                f"(loss {current:.6g}); trace length {len(trace)}"
            )
    return pos, trace
