"""Supervision terms with analytic gradients and an FD verification harness.

Every loss returns its scalar value together with the gradient w.r.t. its
declared parameters; check_gradients compares those gradients against
central differences.  The per-stage weight vectors live in config.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.ndimage import convolve1d

from trivatar import config
from trivatar.field import DecodedSdf, SdfField
from trivatar.mesh import TriangleMesh, laplacian_matrix

BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
PYRAMID_LEVELS = 4


class LossError(ValueError):
    """Invalid loss inputs (size mismatch, out-of-domain samples)."""


@dataclass
class LossReport:
    """Named scalar losses plus optional gradients and the weights applied."""

    values: dict[str, float]
    gradients: dict[str, np.ndarray] = dataclass_field(default_factory=dict)
    weights: dict[str, float] = dataclass_field(default_factory=dict)

    def __post_init__(self):
        for name, v in self.values.items():
            if not np.isfinite(v) or v < 0:
                raise LossError(f"loss {name} must be finite and >= 0, got {v}")

    def weighted_total(self) -> float:
        return float(
            sum(self.weights.get(k, 1.0) * v for k, v in self.values.items())
        )


# ---------------------------------------------------------------------------
# image losses


def _blur(img: np.ndarray) -> np.ndarray:
    # zero-padded separable binomial blur; symmetric kernel + zero padding
    # make the operator self-adjoint, which the pyramid adjoint relies on
    out = convolve1d(img, BINOMIAL5, axis=0, mode="constant", cval=0.0)
    return convolve1d(out, BINOMIAL5, axis=1, mode="constant", cval=0.0)


def _down2(img: np.ndarray) -> np.ndarray:
    return img[::2, ::2]


def _up2_zeros(img: np.ndarray, shape) -> np.ndarray:
    out = np.zeros(shape[:2] + img.shape[2:])
    out[::2, ::2] = img
    return out


def laplacian_pyramid(img: np.ndarray, levels: int = PYRAMID_LEVELS) -> list[np.ndarray]:
    """Band-pass decomposition: levels-1 difference bands plus the residual."""
    bands = []
    g = img
    for _ in range(levels - 1):
        low = _blur(g)
        down = _down2(low)
        up = 4.0 * _blur(_up2_zeros(down, g.shape))
        bands.append(g - up)
        g = down
    bands.append(g)
    return bands


def _pyramid_adjoint(cotangents: list[np.ndarray], shape) -> np.ndarray:
    """Adjoint of laplacian_pyramid as a linear map (zero padding throughout)."""
    shapes = [shape]
    for _ in range(PYRAMID_LEVELS - 1):
        h, w = shapes[-1][:2]
        shapes.append(((h + 1) // 2, (w + 1) // 2) + tuple(shape[2:]))
    grad_g = np.asarray(cotangents[-1], dtype=np.float64)
    for k in range(len(cotangents) - 2, -1, -1):
        ct = np.asarray(cotangents[k], dtype=np.float64)
        # forward: band = g - 4 blur(up(down(blur(g)))); g_next = down(blur(g))
        # adjoint: grad_g = ct + blur^T down^T [ grad_next - 4 up^T blur^T ct ]
        inner = grad_g - 4.0 * _down2(_blur(ct))
        grad_g = ct + _blur(_up2_zeros(inner, shapes[k]))
    return grad_g


def image_losses(
    pred_color: np.ndarray,
    pred_opacity: np.ndarray,
    gt_color: np.ndarray,
    gt_mask: np.ndarray,
):
    """Color, mask, and pyramid losses with gradients w.r.t. the predictions.

    The color term is a mean L1 over foreground rays only; the mask term
    compares accumulated opacity against the segmentation per ray; the
    pyramid term sums mean-L1 band differences.
    """
    pred_color = np.asarray(pred_color, dtype=np.float64)
    pred_opacity = np.asarray(pred_opacity, dtype=np.float64)
    gt_color = np.asarray(gt_color, dtype=np.float64)
    gt_mask = np.asarray(gt_mask, dtype=np.float64)
    if pred_color.shape != gt_color.shape or pred_opacity.shape != gt_mask.shape:
        raise LossError("prediction / ground-truth shapes disagree")

    fg = gt_mask > 0.5
    grad_color = np.zeros_like(pred_color)
    if fg.any():
        diff = pred_color[fg] - gt_color[fg]
        l_col = float(np.abs(diff).mean())
        grad_color[fg] = np.sign(diff) / diff.size
    else:
        l_col = 0.0

    mdiff = pred_opacity - gt_mask
    l_mask = float(np.abs(mdiff).mean())
    grad_opacity = np.sign(mdiff) / mdiff.size

    pred_bands = laplacian_pyramid(pred_color)
    gt_bands = laplacian_pyramid(gt_color)
    l_pyr = 0.0
    cotangents = []
    for pb, gb in zip(pred_bands, gt_bands):
        band_diff = pb - gb
        l_pyr += float(np.abs(band_diff).mean())
        cotangents.append(np.sign(band_diff) / band_diff.size)
    grad_pyr = _pyramid_adjoint(cotangents, pred_color.shape)

    values = {"color": l_col, "mask": l_mask, "laplacian_pyramid": l_pyr}
    grads = {
        "color": grad_color,
        "mask": grad_opacity,
        "laplacian_pyramid": grad_pyr,
    }
    return values, grads


# ---------------------------------------------------------------------------
# field losses


def eikonal_loss(fld: SdfField, samples: np.ndarray):
    """Mean squared deviation of the gradient norm from 1.

    The returned gradient is w.r.t. the sample positions and needs second
    derivatives of the field; it is available for variants exposing a
    ``hessian`` (analytic primitives), and None otherwise.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    g = fld.gradient(samples)
    norms = np.linalg.norm(g, axis=1)
    value = float(np.mean((norms - 1.0) ** 2))
    grad = None
    if hasattr(fld, "hessian"):
        H = fld.hessian(samples)  # (N, 3, 3)
        unit = g / norms[:, None]
        coeff = 2.0 * (norms - 1.0) / len(samples)
        grad = coeff[:, None] * np.einsum("nij,nj->ni", H, unit)
    return value, grad


def seam_loss(fld: SdfField, side_a: np.ndarray, side_b: np.ndarray):
    """Mean |s_a - s_b| over seam sample pairs.

    For the decoded variant the gradient w.r.t. the tri-plane grids is
    returned (shape (3, R, R, C)); weights stay fixed.
    """
    side_a = np.atleast_2d(side_a)
    side_b = np.atleast_2d(side_b)
    if len(side_a) != len(side_b) or len(side_a) == 0:
        raise LossError("seam pairs must be non-empty and aligned")
    s_a, _ = _eval_any(fld, side_a)
    s_b, _ = _eval_any(fld, side_b)
    diff = s_a - s_b
    value = float(np.abs(diff).mean())
    grad = None
    if isinstance(fld, DecodedSdf):
        upstream = np.sign(diff) / len(diff)
        grad = fld.grid_gradient(side_a, upstream) + fld.grid_gradient(
            side_b, -upstream
        )
    return value, grad


def sdf_vertex_loss(fld: SdfField, points: np.ndarray):
    """Mean |s| over mapped template vertices, with d loss / d points.

    Texture-domain fields reject points outside the height band, listing
    the offending indices.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if fld.domain == "texture":
        bad = np.flatnonzero(np.abs(points[:, 2]) > fld.d_max + 1e-12)
        if bad.size:
            raise LossError(f"vertices outside the height band: {bad.tolist()}")
    s, _ = _eval_any(fld, points)
    value = float(np.abs(s).mean())
    g = fld.gradient(points)
    grad = np.sign(s)[:, None] * g / len(s)
    return value, grad


def _eval_any(fld: SdfField, x: np.ndarray):
    from trivatar.field import sdf_eval

    return sdf_eval(fld, x)


# ---------------------------------------------------------------------------
# surface regularizers


def _unit_rows(x: np.ndarray):
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 1e-15, norms, 1.0)
    return x / safe[:, None], norms


def surface_regularizers(
    mesh: TriangleMesh, before: np.ndarray, after: np.ndarray
):
    """The four template regularizers and their gradients w.r.t. ``after``.

    laplacian_delta: mean per-vertex norm of the Laplacian difference
    against ``before``; laplacian_zero: mean norm of the Laplacian itself;
    normal_consistency: mean over faces of the average (1 - n_i . n_j)
    against each adjacent face; edge_variance: mean per-face population
    variance of the three edge lengths.
    """
    before = np.asarray(before, dtype=np.float64)
    after = np.asarray(after, dtype=np.float64)
    if before.shape != after.shape or before.shape != (mesh.n_vertices, 3):
        raise LossError("before/after must both be (N, 3) for this topology")

    N = mesh.n_vertices
    L = laplacian_matrix(mesh)
    lap_before = L @ before
    lap_after = L @ after

    diff = lap_after - lap_before
    unit_diff, diff_norms = _unit_rows(diff)
    l_reg = float(diff_norms.mean())
    grad_reg = np.asarray(L.T @ unit_diff) / N

    unit_after, after_norms = _unit_rows(lap_after)
    l_zero = float(after_norms.mean())
    grad_zero = np.asarray(L.T @ unit_after) / N

    l_normal, grad_normal = _normal_consistency(mesh, after)
    l_area, grad_area = _edge_variance(mesh, after)

    values = {
        "laplacian_delta": l_reg,
        "laplacian_zero": l_zero,
        "normal_consistency": l_normal,
        "edge_variance": l_area,
    }
    grads = {
        "laplacian_delta": grad_reg,
        "laplacian_zero": grad_zero,
        "normal_consistency": grad_normal,
        "edge_variance": grad_area,
    }
    return values, grads


def _skew(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _face_normal_jacobians(mesh: TriangleMesh, positions: np.ndarray):
    """Unit face normals and d n / d corner-vertex, (F, 3 corners, 3, 3)."""
    a = positions[mesh.faces[:, 0]]
    b = positions[mesh.faces[:, 1]]
    c = positions[mesh.faces[:, 2]]
    cross = np.cross(b - a, c - a)
    norm = np.linalg.norm(cross, axis=1)
    n = cross / norm[:, None]
    proj = np.eye(3)[None] - n[:, :, None] * n[:, None, :]
    scale = proj / norm[:, None, None]
    # d cross / d corner = skew(opposite edge)
    j_a = scale @ _skew(c - b)
    j_b = scale @ _skew(a - c)
    j_c = scale @ _skew(b - a)
    return n, np.stack([j_a, j_b, j_c], axis=1)


def _face_adjacency(mesh: TriangleMesh):
    from trivatar.mesh import unique_edges

    _, _, edge_faces = unique_edges(mesh)
    adj: list[list[int]] = [[] for _ in range(mesh.n_faces)]
    for fl in edge_faces:
        if len(fl) == 2:
            adj[fl[0]].append(int(fl[1]))
            adj[fl[1]].append(int(fl[0]))
    return adj


def _normal_consistency(mesh: TriangleMesh, positions: np.ndarray):
    n, jac = _face_normal_jacobians(mesh, positions)
    adj = _face_adjacency(mesh)
    F = mesh.n_faces
    total = 0.0
    grad_n = np.zeros((F, 3))  # d loss / d n_f accumulated
    for i, neighbors in enumerate(adj):
        if not neighbors:
            continue
        w = 1.0 / (F * len(neighbors))
        for j in neighbors:
            total += w * (1.0 - float(n[i] @ n[j]))
            grad_n[i] -= w * n[j]
            grad_n[j] -= w * n[i]
    grad = np.zeros_like(positions)
    for corner in range(3):
        contrib = np.einsum("fi,fij->fj", grad_n, jac[:, corner])
        np.add.at(grad, mesh.faces[:, corner], contrib)
    return float(total), grad


def _edge_variance(mesh: TriangleMesh, positions: np.ndarray):
    f = mesh.faces
    F = len(f)
    grads = np.zeros_like(positions)
    total = 0.0
    corners = positions[f]  # (F, 3, 3)
    # edges k: (v_k, v_{k+1})
    e_vec = np.stack([corners[:, (k + 1) % 3] - corners[:, k] for k in range(3)], axis=1)
    e_len = np.linalg.norm(e_vec, axis=2)  # (F, 3)
    mean = e_len.mean(axis=1)
    dev = e_len - mean[:, None]
    total = float((dev**2).mean(axis=1).mean())
    # dVar/de_k = (2/3)(e_k - mean); de_k/dv = -+ unit edge
    coeff = (2.0 / 3.0) * dev / F  # (F, 3)
    unit = e_vec / e_len[:, :, None]
    for k in range(3):
        g = coeff[:, k, None] * unit[:, k]
        np.add.at(grads, f[:, (k + 1) % 3], g)
        np.add.at(grads, f[:, k], -g)
    return total, grads


# ---------------------------------------------------------------------------
# verification harness


def check_gradients(loss_fn, params: np.ndarray, step: float = 1e-5) -> float:
    """Max relative error of an analytic gradient vs central differences.

    ``loss_fn(params) -> (value, grad)`` with grad shaped like params.
    Error metric per coordinate: |g_a - g_fd| / max(1, |g_a|).
    """
    params = np.asarray(params, dtype=np.float64)
    _, grad = loss_fn(params)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.shape:
        raise LossError(f"gradient shape {grad.shape} != params {params.shape}")
    flat = params.reshape(-1)
    fd = np.empty_like(flat)
    for k in range(flat.size):
        bumped = flat.copy()
        bumped[k] += step
        hi, _ = loss_fn(bumped.reshape(params.shape))
        bumped[k] -= 2 * step
        lo, _ = loss_fn(bumped.reshape(params.shape))
        fd[k] = (hi - lo) / (2 * step)
    ga = grad.reshape(-1)
    return float(np.max(np.abs(ga - fd) / np.maximum(1.0, np.abs(ga))))


def stage_weights(stage: int) -> dict[str, float]:
    """Per-stage weight vectors in order of appearance."""
    return {
        1: dict(config.STAGE1_WEIGHTS),
        2: dict(config.STAGE2_WEIGHTS),
        3: dict(config.STAGE3_WEIGHTS),
    }[stage]
