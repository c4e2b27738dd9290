"""Feature tri-planes, shallow MLP decoders, and pluggable SDF fields.

Field weights are loaded from tensor files, never trained here.  Three
kinds of signed-distance evaluator share one interface: closed-form
primitives (total on R^3), mesh-backed signed distance, and the decoded
variant that samples a feature tri-plane in texture space and runs a small
MLP.  All evaluation is deterministic and vectorized over sample batches.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from trivatar import tensorio

POSITION_FREQUENCIES = 6  # encoding bands for texture-space positions
VIEW_FREQUENCIES = 4  # encoding bands for view directions
MOTION_CODE_DIM = 16

ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "softplus": lambda x: np.logaddexp(x, 0.0),
    "sigmoid": lambda x: 1.0 / (1.0 + np.exp(-x)),
    "none": lambda x: x,
}

ACTIVATION_DERIVATIVES = {
    "relu": lambda x: (x > 0.0).astype(np.float64),
    "softplus": lambda x: 1.0 / (1.0 + np.exp(-x)),
    "sigmoid": lambda x: (s := 1.0 / (1.0 + np.exp(-x))) * (1.0 - s),
    "none": lambda x: np.ones_like(x),
}


class FieldError(ValueError):
    """Invalid field data or out-of-domain evaluation."""


def positional_encoding(x: np.ndarray, frequencies: int) -> np.ndarray:
    """Sinusoidal frequency encoding: [x, sin(2^l pi x), cos(2^l pi x)], l < L.

    Input (..., n) maps to (..., n * (1 + 2L)); the raw coordinates pass
    through unscaled, every trigonometric component lies in [-1, 1].
    """
    x = np.asarray(x, dtype=np.float64)
    if frequencies < 0:
        raise FieldError("frequency count must be >= 0")
    parts = [x]
    for level in range(frequencies):
        arg = (2.0**level) * np.pi * x
        parts.append(np.sin(arg))
        parts.append(np.cos(arg))
    return np.concatenate(parts, axis=-1)


def positional_encoding_jacobian(x: np.ndarray, frequencies: int) -> np.ndarray:
    """d encoding / d x as (..., n(1+2L), n) block-diagonal-per-coordinate."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    out_dim = n * (1 + 2 * frequencies)
    jac = np.zeros(x.shape[:-1] + (out_dim, n))
    eye = np.eye(n)
    jac[..., :n, :] = eye
    for level in range(frequencies):
        scale = (2.0**level) * np.pi
        arg = scale * x
        s_block = n * (1 + 2 * level)
        c_block = s_block + n
        for k in range(n):
            jac[..., s_block + k, k] = scale * np.cos(arg[..., k])
            jac[..., c_block + k, k] = -scale * np.sin(arg[..., k])
    return jac


@dataclass(frozen=True, eq=False)
class FeatureTriplane:
    """Three feature grids: surface plane and the two height planes.

    Each grid is (R, R, C); grid node (i, j) sits at coordinate
    (i, j) / (R - 1), so lattice points reproduce stored features exactly.
    Query axes: surface plane at (u_x, u_y), x-height plane at (u_x, d_hat),
    y-height plane at (u_y, d_hat).
    """

    surface: np.ndarray
    x_height: np.ndarray
    y_height: np.ndarray

    def __post_init__(self):
        planes = []
        for name in ("surface", "x_height", "y_height"):
            p = np.asarray(getattr(self, name), dtype=np.float64)
            if p.ndim != 3:
                raise FieldError(f"{name} plane must be (R, R, C)")
            if not np.all(np.isfinite(p)):
                raise FieldError(f"{name} plane contains non-finite values")
            planes.append(p)
        if len({p.shape for p in planes}) != 1:
            raise FieldError("all three planes must share resolution and channels")
        if planes[0].shape[0] != planes[0].shape[1] or planes[0].shape[0] < 2:
            raise FieldError("plane resolution must be square and >= 2")
        object.__setattr__(self, "surface", planes[0])
        object.__setattr__(self, "x_height", planes[1])
        object.__setattr__(self, "y_height", planes[2])

    @property
    def resolution(self) -> int:
        return self.surface.shape[0]

    @property
    def channels(self) -> int:
        return self.surface.shape[2]

    @property
    def feature_dim(self) -> int:
        return 3 * self.channels

    def to_array(self) -> np.ndarray:
        return np.stack([self.surface, self.x_height, self.y_height])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "FeatureTriplane":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 4 or arr.shape[0] != 3:
            raise FieldError("stacked tri-plane must be (3, R, R, C)")
        return cls(arr[0], arr[1], arr[2])

    @classmethod
    def zeros(cls, resolution: int, channels: int) -> "FeatureTriplane":
        z = np.zeros((resolution, resolution, channels))
        return cls(z, z.copy(), z.copy())


def _bilinear(plane: np.ndarray, x: np.ndarray, y: np.ndarray):
    """Bilinear sample at continuous lattice coords in [0, 1]^2.

    Returns (values, d/dx, d/dy, taps) where taps carries the 4 corner
    indices and weights needed to scatter gradients back into the grid.
    """
    R = plane.shape[0]
    gx = x * (R - 1)
    gy = y * (R - 1)
    ix = np.clip(np.floor(gx).astype(np.int64), 0, R - 2)
    iy = np.clip(np.floor(gy).astype(np.int64), 0, R - 2)
    fx = gx - ix
    fy = gy - iy
    p00 = plane[ix, iy]
    p10 = plane[ix + 1, iy]
    p01 = plane[ix, iy + 1]
    p11 = plane[ix + 1, iy + 1]
    w00 = (1 - fx) * (1 - fy)
    w10 = fx * (1 - fy)
    w01 = (1 - fx) * fy
    w11 = fx * fy
    val = (
        w00[:, None] * p00 + w10[:, None] * p10 + w01[:, None] * p01 + w11[:, None] * p11
    )
    ddx = ((p10 - p00) * (1 - fy)[:, None] + (p11 - p01) * fy[:, None]) * (R - 1)
    ddy = ((p01 - p00) * (1 - fx)[:, None] + (p11 - p10) * fx[:, None]) * (R - 1)
    taps = (ix, iy, np.stack([w00, w10, w01, w11], axis=1))
    return val, ddx, ddy, taps


def sample_triplane(tp: FeatureTriplane, coords: np.ndarray) -> np.ndarray:
    """Concatenated bilinear features for texture-space points.

    ``coords`` is (N, 3) of (u_x, u_y, d_hat), all in [0, 1].  The result
    concatenates (surface, x-height, y-height) samples to (N, 3C).
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    if coords.min() < -1e-9 or coords.max() > 1 + 1e-9:
        raise FieldError("tri-plane query outside [0, 1]^3")
    coords = np.clip(coords, 0.0, 1.0)
    ux, uy, dh = coords[:, 0], coords[:, 1], coords[:, 2]
    s, _, _, _ = _bilinear(tp.surface, ux, uy)
    xh, _, _, _ = _bilinear(tp.x_height, ux, dh)
    yh, _, _, _ = _bilinear(tp.y_height, uy, dh)
    return np.concatenate([s, xh, yh], axis=1)


def sample_triplane_with_gradient(tp: FeatureTriplane, coords: np.ndarray):
    """Features plus derivative of the (N, 3C) features w.r.t. (N, 3) coords."""
    coords = np.clip(np.atleast_2d(np.asarray(coords, dtype=np.float64)), 0.0, 1.0)
    ux, uy, dh = coords[:, 0], coords[:, 1], coords[:, 2]
    C = tp.channels
    n = len(coords)
    s, s_dx, s_dy, _ = _bilinear(tp.surface, ux, uy)
    xh, xh_dx, xh_dd, _ = _bilinear(tp.x_height, ux, dh)
    yh, yh_dy, yh_dd, _ = _bilinear(tp.y_height, uy, dh)
    feat = np.concatenate([s, xh, yh], axis=1)
    jac = np.zeros((n, 3 * C, 3))
    jac[:, 0:C, 0] = s_dx
    jac[:, 0:C, 1] = s_dy
    jac[:, C : 2 * C, 0] = xh_dx
    jac[:, C : 2 * C, 2] = xh_dd
    jac[:, 2 * C : 3 * C, 1] = yh_dy
    jac[:, 2 * C : 3 * C, 2] = yh_dd
    return feat, jac


@dataclass(frozen=True, eq=False)
class MlpWeights:
    """Ordered affine layers with activation tags.

    ``layers`` is a list of (matrix (out, in), bias (out,), activation).
    Consecutive dimensions must chain; activations come from
    {relu, softplus, sigmoid, none}.
    """

    layers: list

    def __post_init__(self):
        if not self.layers:
            raise FieldError("MLP needs at least one layer")
        checked = []
        prev_out = None
        for i, (W, b, act) in enumerate(self.layers):
            W = np.asarray(W, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise FieldError(f"layer {i}: matrix/bias shapes {W.shape} {b.shape}")
            if act not in ACTIVATIONS:
                raise FieldError(f"layer {i}: unknown activation {act!r}")
            if prev_out is not None and W.shape[1] != prev_out:
                raise FieldError(
                    f"layer {i}: input dim {W.shape[1]} != previous output {prev_out}"
                )
            prev_out = W.shape[0]
            checked.append((W, b, act))
        object.__setattr__(self, "layers", checked)

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[0]


def mlp_forward(weights: MlpWeights, x: np.ndarray) -> np.ndarray:
    """Sequential affine + activation evaluation over a batch (N, in)."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if h.shape[1] != weights.input_dim:
        raise FieldError(f"input dim {h.shape[1]} != MLP input {weights.input_dim}")
    for W, b, act in weights.layers:
        h = ACTIVATIONS[act](h @ W.T + b)
    return h


def mlp_forward_with_jacobian(weights: MlpWeights, x: np.ndarray):
    """Outputs plus per-sample Jacobian d out / d in, (N, out, in)."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n = h.shape[0]
    jac = np.broadcast_to(np.eye(weights.input_dim), (n, weights.input_dim, weights.input_dim)).copy()
    for W, b, act in weights.layers:
        pre = h @ W.T + b
        dact = ACTIVATION_DERIVATIVES[act](pre)
        jac = dact[:, :, None] * np.einsum("oi,nij->noj", W, jac)
        h = ACTIVATIONS[act](pre)
    return h, jac


def mlp_backward_input(weights: MlpWeights, x: np.ndarray, grad_out: np.ndarray):
    """Vector-Jacobian product: d (grad_out . out) / d in for a batch."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    pres, acts = [], [h]
    for W, b, act in weights.layers:
        pre = h @ W.T + b
        pres.append(pre)
        h = ACTIVATIONS[act](pre)
        acts.append(h)
    g = np.atleast_2d(grad_out)
    for (W, b, act), pre in zip(reversed(weights.layers), reversed(pres)):
        g = (g * ACTIVATION_DERIVATIVES[act](pre)) @ W
    return g


def random_mlp(
    rng: np.random.Generator,
    dims: list[int],
    activation: str = "softplus",
    final_activation: str = "none",
    scale: float = 1.0,
) -> MlpWeights:
    """He-style random weights; handy for fixtures and demo assets."""
    layers = []
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        W = rng.normal(0.0, scale / np.sqrt(fan_in), size=(dims[i + 1], dims[i]))
        b = rng.normal(0.0, 0.1, size=dims[i + 1])
        act = final_activation if i == len(dims) - 2 else activation
        layers.append((W, b, act))
    return MlpWeights(layers)


# ---------------------------------------------------------------------------
# SDF field variants


class SdfField:
    """Signed-distance evaluator; negative inside, positive outside.

    ``domain`` is "global" (evaluated at world points) or "texture"
    (evaluated at (u_x, u_y, d) texture-space coordinates).
    """

    domain = "global"

    def eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Central differences with a 1e-4 m step unless overridden."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        h = 1e-4
        out = np.empty_like(x)
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            out[:, k] = (self.eval(x + dx) - self.eval(x - dx)) / (2 * h)
        return out


@dataclass(frozen=True)
class SphereSdf(SdfField):
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def eval(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.linalg.norm(x - np.asarray(self.center), axis=1) - self.radius

    def gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        diff = x - np.asarray(self.center)
        return diff / np.linalg.norm(diff, axis=1)[:, None]

    def hessian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        diff = x - np.asarray(self.center)
        r = np.linalg.norm(diff, axis=1)
        unit = diff / r[:, None]
        eye = np.eye(3)
        return (eye[None] - unit[:, :, None] * unit[:, None, :]) / r[:, None, None]


@dataclass(frozen=True)
class PlaneSdf(SdfField):
    """s = n . x + offset with unit n (signed distance to a plane)."""

    normal: tuple[float, float, float] = (0.0, 0.0, 1.0)
    offset: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        object.__setattr__(self, "normal", tuple(n / np.linalg.norm(n)))

    def eval(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return x @ np.asarray(self.normal) + self.offset

    def gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.tile(np.asarray(self.normal), (len(x), 1))

    def hessian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.zeros((len(x), 3, 3))


@dataclass(frozen=True)
class CapsuleSdf(SdfField):
    """Distance to the segment ab minus the radius."""

    a: tuple[float, float, float]
    b: tuple[float, float, float]
    radius: float

    def eval(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        a = np.asarray(self.a)
        ab = np.asarray(self.b) - a
        t = np.clip((x - a) @ ab / (ab @ ab), 0.0, 1.0)
        closest = a + t[:, None] * ab
        return np.linalg.norm(x - closest, axis=1) - self.radius

    def gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        a = np.asarray(self.a)
        ab = np.asarray(self.b) - a
        t = np.clip((x - a) @ ab / (ab @ ab), 0.0, 1.0)
        diff = x - (a + t[:, None] * ab)
        return diff / np.linalg.norm(diff, axis=1)[:, None]


@dataclass(frozen=True, eq=False)
class QuadricSdf(SdfField):
    """s = 0.5 x^T A x + b^T x + c; not a distance field, but its gradient
    and Hessian are exact, which makes it the reference fixture for
    gradient-of-loss checks."""

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64).reshape(3, 3)
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64).reshape(3))

    def eval(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return 0.5 * np.einsum("ni,ij,nj->n", x, self.A, x) + x @ self.b + self.c

    def gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return x @ self.A.T + self.b

    def hessian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.broadcast_to(self.A, (len(x), 3, 3)).copy()


@dataclass(frozen=True, eq=False)
class ScaledSdf(SdfField):
    """Wraps another field with s' = scale * s (breaks the eikonal property)."""

    inner: SdfField
    scale: float

    @property
    def domain(self):
        return self.inner.domain

    def eval(self, x):
        return self.scale * self.inner.eval(x)

    def gradient(self, x):
        return self.scale * self.inner.gradient(x)

    def hessian(self, x):
        return self.scale * self.inner.hessian(x)


class MeshSdf(SdfField):
    """Signed distance to a mesh: closest-point distance, pseudo-normal sign."""

    def __init__(self, index):
        self.index = index

    def eval(self, x):
        from trivatar.utts import map_points

        batch = map_points(self.index, np.atleast_2d(x), d_max=np.inf)
        return batch.d


class DecodedSdf(SdfField):
    """Tri-plane features decoded by a shallow MLP in texture space.

    Evaluation takes (u_x, u_y, d) with |d| <= d_max; the height is
    normalized to d_hat before plane lookup and positional encoding.  The
    MLP input is [features, motion code, encoded position]; output channel
    0 is the signed distance (meters), the rest is the shape code.
    """

    domain = "texture"

    def __init__(
        self,
        triplane: FeatureTriplane,
        weights: MlpWeights,
        motion_code: np.ndarray | None = None,
        d_max: float = 0.04,
        frequencies: int = POSITION_FREQUENCIES,
    ):
        self.triplane = triplane
        self.weights = weights
        self.motion_code = (
            np.zeros(0)
            if motion_code is None
            else np.asarray(motion_code, dtype=np.float64).reshape(-1)
        )
        self.d_max = float(d_max)
        self.frequencies = int(frequencies)
        expected = (
            triplane.feature_dim
            + len(self.motion_code)
            + 3 * (1 + 2 * self.frequencies)
        )
        if weights.input_dim != expected:
            raise FieldError(
                f"decoder expects input dim {weights.input_dim}, assembled {expected}"
            )

    def _assemble(self, coords: np.ndarray):
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        d = coords[:, 2]
        if np.any(np.abs(d) > self.d_max + 1e-12):
            raise FieldError("texture-space height outside the d_max band")
        d_hat = (d / self.d_max + 1.0) / 2.0
        pts = np.stack([coords[:, 0], coords[:, 1], d_hat], axis=1)
        feat = sample_triplane(self.triplane, pts)
        enc = positional_encoding(pts, self.frequencies)
        g = np.tile(self.motion_code, (len(coords), 1))
        return np.concatenate([feat, g, enc], axis=1), pts

    def eval_full(self, coords: np.ndarray):
        """(sdf, shape code) for texture-space coordinates (u_x, u_y, d)."""
        inputs, _ = self._assemble(coords)
        out = mlp_forward(self.weights, inputs)
        return out[:, 0], out[:, 1:]

    def eval(self, coords: np.ndarray) -> np.ndarray:
        return self.eval_full(coords)[0]

    def gradient(self, coords: np.ndarray) -> np.ndarray:
        """Analytic d s / d (u_x, u_y, d) via backprop through the stack."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        inputs, pts = self._assemble(coords)
        n = len(coords)
        grad_out = np.zeros((n, self.weights.output_dim))
        grad_out[:, 0] = 1.0
        g_in = mlp_backward_input(self.weights, inputs, grad_out)  # (N, in)
        C3 = self.triplane.feature_dim
        g_feat = g_in[:, :C3]
        g_enc = g_in[:, C3 + len(self.motion_code) :]
        _, feat_jac = sample_triplane_with_gradient(self.triplane, pts)  # (N, 3C, 3)
        enc_jac = positional_encoding_jacobian(pts, self.frequencies)  # (N, E, 3)
        g_pts = np.einsum("nc,nck->nk", g_feat, feat_jac) + np.einsum(
            "ne,nek->nk", g_enc, enc_jac
        )
        # chain d_hat -> d on the height axis
        g_pts[:, 2] /= 2.0 * self.d_max
        return g_pts

    def grid_gradient(self, coords: np.ndarray, upstream: np.ndarray) -> np.ndarray:
        """Scatter d (sum upstream_i * s_i) / d grids into a (3, R, R, C) array."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        inputs, pts = self._assemble(coords)
        n = len(coords)
        grad_out = np.zeros((n, self.weights.output_dim))
        grad_out[:, 0] = np.asarray(upstream, dtype=np.float64)
        g_in = mlp_backward_input(self.weights, inputs, grad_out)
        C = self.triplane.channels
        grids = np.zeros((3,) + self.triplane.surface.shape)
        axes = [(0, 1), (0, 2), (1, 2)]
        planes = [self.triplane.surface, self.triplane.x_height, self.triplane.y_height]
        for pi, (ax, ay) in enumerate(axes):
            g_feat = g_in[:, pi * C : (pi + 1) * C]  # (N, C)
            _, _, _, (ix, iy, w) = _bilinear(planes[pi], pts[:, ax], pts[:, ay])
            for corner, (dx, dy) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)]):
                np.add.at(
                    grids[pi],
                    (ix + dx, iy + dy),
                    w[:, corner, None] * g_feat,
                )
        return grids


def sdf_eval(fld: SdfField, x: np.ndarray):
    """Evaluate a field; returns (s, shape_code_or_None)."""
    if isinstance(fld, DecodedSdf):
        return fld.eval_full(x)
    return fld.eval(x), None


def sdf_gradient(fld: SdfField, x: np.ndarray) -> np.ndarray:
    """Field gradient: analytic where the variant provides one, else FD."""
    return fld.gradient(x)


def motion_code_from_window(weights: MlpWeights, window: np.ndarray) -> np.ndarray:
    """Global motion code: shallow MLP over the flattened pose window."""
    flat = np.asarray(window, dtype=np.float64).reshape(1, -1)
    return mlp_forward(weights, flat)[0]


def decode_color(
    weights: MlpWeights,
    shape_code: np.ndarray,
    sdf: np.ndarray,
    normals: np.ndarray,
    view_dirs: np.ndarray,
    translation: np.ndarray,
    view_frequencies: int = VIEW_FREQUENCIES,
) -> np.ndarray:
    """Appearance decode: [q, s, n, encoded view dir, global translation] -> RGB.

    The final layer output is sigmoid-mapped into [0, 1].
    """
    n = len(sdf)
    enc = positional_encoding(np.atleast_2d(view_dirs), view_frequencies)
    t = np.tile(np.asarray(translation, dtype=np.float64).reshape(1, 3), (n, 1))
    inputs = np.concatenate(
        [np.atleast_2d(shape_code), np.asarray(sdf).reshape(-1, 1), np.atleast_2d(normals), enc, t],
        axis=1,
    )
    out = mlp_forward(weights, inputs)
    return 1.0 / (1.0 + np.exp(-out))


# ---------------------------------------------------------------------------
# weight and field serialization


def save_mlp(weights: MlpWeights, directory, name: str) -> str:
    """Write layer tensors plus a JSON manifest; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    manifest = {"layers": []}
    for i, (W, b, act) in enumerate(weights.layers):
        wfile = f"{name}_l{i}_w.trit"
        bfile = f"{name}_l{i}_b.trit"
        tensorio.write_tensor(os.path.join(directory, wfile), W)
        tensorio.write_tensor(os.path.join(directory, bfile), b)
        manifest["layers"].append({"weight": wfile, "bias": bfile, "activation": act})
    path = os.path.join(directory, f"{name}.mlp.json")
    tensorio.atomic_write_text(path, json.dumps(manifest, indent=1))
    return path


def load_mlp(manifest_path) -> MlpWeights:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.fspath(manifest_path))
    layers = []
    for layer in manifest["layers"]:
        W = tensorio.read_tensor(os.path.join(base, layer["weight"]))
        b = tensorio.read_tensor(os.path.join(base, layer["bias"]))
        layers.append((W, b, layer["activation"]))
    return MlpWeights(layers)


def save_triplane(tp: FeatureTriplane, path) -> None:
    tensorio.write_tensor(path, tp.to_array())


def load_triplane(path) -> FeatureTriplane:
    return FeatureTriplane.from_array(tensorio.read_tensor(path))
