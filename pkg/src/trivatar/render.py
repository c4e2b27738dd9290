"""Pinhole camera, software rasterizer, and unbiased SDF volume rendering.

The render path mirrors the runtime pipeline: rasterize the posed template
for a depth prior, place samples only in the height band around the hit,
map them into texture space, evaluate the SDF field, convert signed
distances to opacities with the unbiased estimator, and alpha-composite.
Also bakes the motion textures that condition the tri-plane generator and
composites rasterized texture edits over rendered imagery.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from trivatar import config
from trivatar.field import DecodedSdf, SdfField, decode_color, sdf_eval, sdf_gradient
from trivatar.mesh import TriangleMesh, vertex_normals
from trivatar.utts import ClosestPointIndex, map_points


class RenderError(ValueError):
    """Invalid camera, scene, or raster input."""


@dataclass(frozen=True, eq=False)
class Camera:
    """Pinhole camera: intrinsics in pixels, world-to-camera rigid transform."""

    fx: float
    fy: float
    cx: float
    cy: float
    world_to_camera: np.ndarray  # (4, 4)
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise RenderError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise RenderError("image size must be >= 1")
        m = np.asarray(self.world_to_camera, dtype=np.float64).reshape(4, 4)
        object.__setattr__(self, "world_to_camera", m)

    @classmethod
    def look_at(
        cls,
        eye,
        target,
        up=(0.0, 0.0, 1.0),
        fov_deg: float = 45.0,
        width: int = 128,
        height: int = 128,
    ) -> "Camera":
        """Camera at ``eye`` looking toward ``target``; +z is the view axis."""
        eye = np.asarray(eye, dtype=np.float64)
        fwd = np.asarray(target, dtype=np.float64) - eye
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(up, dtype=np.float64))
        if np.linalg.norm(right) < 1e-12:
            right = np.cross(fwd, np.array([0.0, 1.0, 0.0]))
        right /= np.linalg.norm(right)
        down = np.cross(fwd, right)
        R = np.stack([right, down, fwd])  # camera x right, y down, z forward
        m = np.eye(4)
        m[:3, :3] = R
        m[:3, 3] = -R @ eye
        f = 0.5 * width / np.tan(np.deg2rad(fov_deg) / 2.0)
        return cls(f, f, width / 2.0, height / 2.0, m, width, height)

    @property
    def camera_to_world(self) -> np.ndarray:
        R = self.world_to_camera[:3, :3]
        t = self.world_to_camera[:3, 3]
        out = np.eye(4)
        out[:3, :3] = R.T
        out[:3, 3] = -R.T @ t
        return out

    @property
    def origin(self) -> np.ndarray:
        return self.camera_to_world[:3, 3]

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return pts @ self.world_to_camera[:3, :3].T + self.world_to_camera[:3, 3]

    def project(self, points: np.ndarray):
        """World points to (pixel xy, camera depth z)."""
        cam = self.to_camera(points)
        z = cam[:, 2]
        px = self.fx * cam[:, 0] / z + self.cx
        py = self.fy * cam[:, 1] / z + self.cy
        return np.stack([px, py], axis=1), z


@dataclass(frozen=True, eq=False)
class RaySampleBatch:
    """Per-ray sample depths for the foreground rays of one view."""

    origins: np.ndarray  # (M, 3)
    directions: np.ndarray  # (M, 3) unit
    t: np.ndarray  # (M, S) strictly increasing sample depths
    foreground: np.ndarray  # (M,) bool; background rays carry no samples

    def __post_init__(self):
        norms = np.linalg.norm(self.directions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise RenderError("ray directions must be unit length")
        if self.t.size and np.any(np.diff(self.t, axis=1) <= 0):
            raise RenderError("sample depths must be strictly increasing")

    def points(self) -> np.ndarray:
        """(M, S, 3) sample positions for foreground rays."""
        fg = self.foreground
        return (
            self.origins[fg][:, None, :]
            + self.t[:, :, None] * self.directions[fg][:, None, :]
        )


def generate_rays(camera: Camera, pixels: np.ndarray):
    """World-space rays through the centers of the given (x, y) pixels."""
    pixels = np.atleast_2d(np.asarray(pixels))
    if (
        pixels[:, 0].min() < 0
        or pixels[:, 1].min() < 0
        or pixels[:, 0].max() >= camera.width
        or pixels[:, 1].max() >= camera.height
    ):
        raise RenderError("pixel outside image bounds")
    x = (pixels[:, 0] + 0.5 - camera.cx) / camera.fx
    y = (pixels[:, 1] + 0.5 - camera.cy) / camera.fy
    dirs_cam = np.stack([x, y, np.ones_like(x)], axis=1)
    dirs_cam /= np.linalg.norm(dirs_cam, axis=1)[:, None]
    R = camera.world_to_camera[:3, :3]
    dirs = dirs_cam @ R  # R^T @ d per row
    origins = np.tile(camera.origin, (len(pixels), 1))
    return origins, dirs


def all_pixels(camera: Camera) -> np.ndarray:
    xs, ys = np.meshgrid(np.arange(camera.width), np.arange(camera.height))
    return np.stack([xs.ravel(), ys.ravel()], axis=1)


@dataclass(frozen=True, eq=False)
class Raster:
    """Z-buffered coverage: ray depth t, winning face, perspective-correct
    barycentric weights per pixel."""

    t: np.ndarray  # (H, W), +inf background
    face: np.ndarray  # (H, W) int, -1 background
    bary: np.ndarray  # (H, W, 3)

    @property
    def mask(self) -> np.ndarray:
        return self.face >= 0


def rasterize(mesh: TriangleMesh, positions: np.ndarray, camera: Camera) -> Raster:
    """Software rasterizer: nearest surface per pixel.

    Perspective-correct attributes via 1/z interpolation; a top-left fill
    rule decides boundary pixels.  Triangles with any vertex behind the
    camera are skipped (no near-plane clipping).
    """
    H, W = camera.height, camera.width
    zbuf = np.full((H, W), np.inf)
    fbuf = np.full((H, W), -1, dtype=np.int64)
    bbuf = np.zeros((H, W, 3))

    cam = camera.to_camera(positions)
    z = cam[:, 2]
    px = camera.fx * cam[:, 0] / np.where(z > 1e-9, z, 1.0) + camera.cx
    py = camera.fy * cam[:, 1] / np.where(z > 1e-9, z, 1.0) + camera.cy
    screen = np.stack([px, py], axis=1)

    faces = mesh.faces
    tri_screen = screen[faces]  # (F, 3, 2)
    tri_z = z[faces]
    visible = np.all(tri_z > 1e-9, axis=1)

    # precompute per-pixel direction z-components for t = z / dz
    xs = (np.arange(W) + 0.5 - camera.cx) / camera.fx
    ys = (np.arange(H) + 0.5 - camera.cy) / camera.fy
    gx, gy = np.meshgrid(xs, ys)
    inv_dz = np.sqrt(gx * gx + gy * gy + 1.0)  # t = z * ||(x, y, 1)|| per unit-dir ray

    for f in np.flatnonzero(visible):
        p0, p1, p2 = tri_screen[f]
        area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        if area == 0.0:
            continue
        lo = np.floor(np.minimum(np.minimum(p0, p1), p2) - 0.5).astype(int)
        hi = np.ceil(np.maximum(np.maximum(p0, p1), p2) - 0.5).astype(int)
        x0, y0 = np.maximum(lo, 0)
        x1 = min(hi[0], W - 1)
        y1 = min(hi[1], H - 1)
        if x1 < x0 or y1 < y0:
            continue
        pxs = np.arange(x0, x1 + 1) + 0.5
        pys = np.arange(y0, y1 + 1) + 0.5
        mx, my = np.meshgrid(pxs, pys)

        def edge(a, b):
            return (b[0] - a[0]) * (my - a[1]) - (b[1] - a[1]) * (mx - a[0])

        e12 = edge(p1, p2)
        e20 = edge(p2, p0)
        e01 = edge(p0, p1)
        if area < 0.0:
            e12, e20, e01, tri_area = -e12, -e20, -e01, -area
        else:
            tri_area = area

        def top_left(a, b):
            # after orientation fix the edge (a, b) winds counter-clockwise
            return (a[1] == b[1] and b[0] < a[0]) or (b[1] > a[1])

        pairs = [(p1, p2), (p2, p0), (p0, p1)] if area > 0 else [(p2, p1), (p0, p2), (p1, p0)]
        inside = np.ones_like(e12, dtype=bool)
        for e, (a, b) in zip((e12, e20, e01), pairs):
            inside &= (e > 0) | ((e == 0) & top_left(a, b))
        if not inside.any():
            continue
        l0 = e12 / tri_area
        l1 = e20 / tri_area
        l2 = e01 / tri_area
        # perspective-correct: interpolate 1/z, weight bary by 1/z
        z0, z1_, z2 = tri_z[f]
        inv_z = l0 / z0 + l1 / z1_ + l2 / z2
        zpix = 1.0 / inv_z
        tpix = zpix * inv_dz[y0 : y1 + 1, x0 : x1 + 1]
        sub_z = zbuf[y0 : y1 + 1, x0 : x1 + 1]
        win = inside & (tpix < sub_z)
        if not win.any():
            continue
        sub_z[win] = tpix[win]
        fbuf[y0 : y1 + 1, x0 : x1 + 1][win] = f
        w0 = (l0 / z0) * zpix
        w1 = (l1 / z1_) * zpix
        w2 = (l2 / z2) * zpix
        bb = bbuf[y0 : y1 + 1, x0 : x1 + 1]
        bb[win] = np.stack([w0[win], w1[win], w2[win]], axis=1)

    return Raster(t=zbuf, face=fbuf, bary=bbuf)


def rasterize_depth(mesh: TriangleMesh, positions: np.ndarray, camera: Camera):
    """Depth map (ray distance, +inf background) and foreground mask."""
    raster = rasterize(mesh, positions, camera)
    return raster.t, raster.mask


def filter_samples(
    origins: np.ndarray,
    directions: np.ndarray,
    t_hit: np.ndarray,
    d_max: float,
    n_samples: int,
    jitter_rng: np.random.Generator | None = None,
) -> RaySampleBatch:
    """Place samples only on rays that hit the depth prior.

    Foreground rays get ``n_samples`` depths uniformly spanning
    [t_hit - d_max, t_hit + d_max] (strictly increasing, clamped in front
    of the camera); background rays get none.  Optional stratified jitter
    keeps the spacing but displaces each sample within its stratum.
    """
    t_hit = np.asarray(t_hit, dtype=np.float64).reshape(-1)
    return band_samples(
        origins, directions, t_hit - d_max, t_hit + d_max, n_samples, jitter_rng
    )


def band_samples(
    origins: np.ndarray,
    directions: np.ndarray,
    t_lo: np.ndarray,
    t_hi: np.ndarray,
    n_samples: int,
    jitter_rng: np.random.Generator | None = None,
) -> RaySampleBatch:
    """Uniform samples within per-ray [t_lo, t_hi] bands; empty bands are
    background."""
    t_lo = np.asarray(t_lo, dtype=np.float64).reshape(-1)
    t_hi = np.asarray(t_hi, dtype=np.float64).reshape(-1)
    fg = np.isfinite(t_lo) & np.isfinite(t_hi) & (t_hi > t_lo)
    m = int(np.count_nonzero(fg))
    if n_samples < 2:
        raise RenderError("need at least 2 samples per ray")
    lo = np.maximum(t_lo[fg], 1e-6)
    hi = t_hi[fg]
    steps = np.linspace(0.0, 1.0, n_samples)
    t = lo[:, None] + steps[None, :] * (hi - lo)[:, None]
    if jitter_rng is not None and m:
        width = (hi - lo) / (n_samples - 1)
        t[:, 1:-1] += (jitter_rng.uniform(size=(m, n_samples - 2)) - 0.5) * width[:, None] * 0.999
    return RaySampleBatch(
        origins=np.asarray(origins, dtype=np.float64),
        directions=np.asarray(directions, dtype=np.float64),
        t=t,
        foreground=fg,
    )


def aabb_band(
    origins: np.ndarray,
    directions: np.ndarray,
    positions: np.ndarray,
    d_max: float,
):
    """Fallback near/far bands when no depth prior is available.

    Intersects each ray with the positions' bounding box inflated by d_max;
    returns (t_near, t_far) per ray, +inf/-inf on misses.
    """
    lo = positions.min(axis=0) - d_max
    hi = positions.max(axis=0) + d_max
    origins = np.atleast_2d(origins)
    directions = np.atleast_2d(directions)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - origins) / directions
        t2 = (hi - origins) / directions
    t_near = np.maximum(np.nanmax(np.minimum(t1, t2), axis=1), 1e-6)
    t_far = np.nanmin(np.maximum(t1, t2), axis=1)
    miss = (t_far < t_near) | ~np.isfinite(t_far)
    return np.where(miss, np.inf, t_near), np.where(miss, -np.inf, t_far)


def sdf_to_alpha(s: np.ndarray, z: float) -> np.ndarray:
    """Unbiased SDF-to-opacity conversion along each ray.

    With the sharpness-scaled sigmoid Phi(s) = 1 / (1 + exp(-z s)),
    alpha_i = max((Phi(s_i) - Phi(s_{i+1})) / Phi(s_i), 0).  The final
    sample of each ray gets alpha 0.  Scaling s by c and z by 1/c leaves
    every alpha unchanged.
    """
    if z <= 0:
        raise RenderError("sharpness z must be positive")
    s = np.atleast_2d(np.asarray(s, dtype=np.float64))
    with np.errstate(over="ignore"):
        phi = 1.0 / (1.0 + np.exp(-z * s))
    head, tail = phi[:, :-1], phi[:, 1:]
    alpha = np.zeros_like(s)
    # deep inside the surface phi underflows to exactly 0; those segments
    # carry no crossing information and stay transparent
    np.divide(head - tail, head, out=alpha[:, :-1], where=head > 0.0)
    return np.maximum(alpha, 0.0)


def volume_integrate(alphas: np.ndarray, colors: np.ndarray, t: np.ndarray | None = None):
    """Front-to-back compositing with transmittance weights.

    Returns (color, opacity, expected_depth).  The expected depth is the
    opacity-normalized first moment of the weights; rays with zero opacity
    report +inf (background).
    """
    a = np.atleast_2d(np.asarray(alphas, dtype=np.float64))
    c = np.asarray(colors, dtype=np.float64)
    if c.ndim == 2:
        c = c[None]
    if a.shape != c.shape[:2]:
        raise RenderError(f"alphas {a.shape} and colors {c.shape} disagree")
    trans = np.cumprod(1.0 - a, axis=1)
    T = np.concatenate([np.ones((len(a), 1)), trans[:, :-1]], axis=1)
    w = T * a
    color = np.einsum("ms,msc->mc", w, c)
    opacity = w.sum(axis=1)
    if t is None:
        return color, opacity, np.full(len(a), np.inf)
    t = np.atleast_2d(np.asarray(t, dtype=np.float64))
    with np.errstate(invalid="ignore", divide="ignore"):
        depth = np.where(opacity > 0, np.einsum("ms,ms->m", w, t) / opacity, np.inf)
    return color, opacity, depth


@dataclass(frozen=True, eq=False)
class Scene:
    """Everything one render call needs."""

    mesh: TriangleMesh
    field: SdfField
    camera: Camera
    positions: np.ndarray | None = None  # posed vertices; template if None
    sharpness: float = 1e4
    d_max: float = config.D_MAX_SCHEDULE[0]
    samples_per_ray: int = config.TRAINING_SAMPLES_PER_RAY
    flat_color: tuple[float, float, float] = (1.0, 1.0, 1.0)
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    color_weights: object = None  # appearance MLP for decoded fields
    global_translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    depth_filter: bool = True  # False: band rays by the inflated mesh AABB

    def resolved_positions(self) -> np.ndarray:
        return self.mesh.vertices if self.positions is None else self.positions


@dataclass(frozen=True, eq=False)
class RenderResult:
    color: np.ndarray  # (H, W, 3) in [0, 1]
    opacity: np.ndarray  # (H, W)
    depth: np.ndarray  # (H, W), +inf background
    timings_ms: dict = dataclass_field(default_factory=dict)


def render_image(scene: Scene, index: ClosestPointIndex | None = None) -> RenderResult:
    """Render one view: depth filter, texture-space mapping, SDF shading.

    Out-of-band samples contribute zero opacity.  The color per sample is
    the scene's flat color unless the field is the decoded variant and an
    appearance MLP is supplied.
    """
    cam = scene.camera
    positions = scene.resolved_positions()
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    if index is None:
        index = ClosestPointIndex(scene.mesh, positions)
    pixels = all_pixels(cam)
    origins, dirs = generate_rays(cam, pixels)
    if scene.depth_filter:
        raster = rasterize(scene.mesh, positions, cam)
        t_flat = raster.t.reshape(-1)
        batch = filter_samples(origins, dirs, t_flat, scene.d_max, scene.samples_per_ray)
    else:
        t_near, t_far = aabb_band(origins, dirs, positions, scene.d_max)
        batch = band_samples(origins, dirs, t_near, t_far, scene.samples_per_ray)
    t1 = time.perf_counter()
    timings["rasterize_ms"] = (t1 - t0) * 1e3
    H, W = cam.height, cam.width
    color_img = np.tile(np.asarray(scene.background, dtype=np.float64), (H * W, 1))
    opacity_img = np.zeros(H * W)
    depth_img = np.full(H * W, np.inf)
    fg = batch.foreground
    m = int(np.count_nonzero(fg))
    if m == 0:
        return RenderResult(
            color_img.reshape(H, W, 3), opacity_img.reshape(H, W), depth_img.reshape(H, W), timings
        )

    pts = batch.points().reshape(-1, 3)
    t2 = time.perf_counter()
    mapped = map_points(index, pts, scene.d_max)
    t3 = time.perf_counter()
    timings["map_ms"] = (t3 - t2) * 1e3

    if scene.field.domain == "texture":
        s, q = sdf_eval(scene.field, _clamp_band(mapped.utts_points(), scene.d_max))
    else:
        s, q = sdf_eval(scene.field, pts)
    t4 = time.perf_counter()
    timings["field_ms"] = (t4 - t3) * 1e3

    S = scene.samples_per_ray
    s = s.reshape(m, S)
    alphas = sdf_to_alpha(s, scene.sharpness)
    alphas[mapped.out_of_range.reshape(m, S)] = 0.0

    if scene.field.domain == "texture" and scene.color_weights is not None:
        normals = sdf_gradient(scene.field, _clamp_band(mapped.utts_points(), scene.d_max))
        view = np.repeat(batch.directions[fg], S, axis=0)
        rgb = decode_color(
            scene.color_weights,
            q,
            s.reshape(-1),
            normals,
            view,
            np.asarray(scene.global_translation),
        ).reshape(m, S, 3)
    else:
        rgb = np.tile(np.asarray(scene.flat_color, dtype=np.float64), (m, S, 1))

    # depth moments use segment midpoints: alpha_i covers [t_i, t_{i+1}]
    t_mid = batch.t.copy()
    t_mid[:, :-1] = 0.5 * (batch.t[:, :-1] + batch.t[:, 1:])
    color, opacity, depth = volume_integrate(alphas, rgb, t_mid)
    t5 = time.perf_counter()
    timings["integrate_ms"] = (t5 - t4) * 1e3

    bg = np.asarray(scene.background, dtype=np.float64)
    color_img[fg] = color + (1.0 - opacity[:, None]) * bg
    opacity_img[fg] = opacity
    depth_img[fg] = depth
    return RenderResult(
        color_img.reshape(H, W, 3),
        opacity_img.reshape(H, W),
        depth_img.reshape(H, W),
        timings,
    )


def _clamp_band(utts_points: np.ndarray, d_max: float) -> np.ndarray:
    out = np.array(utts_points, copy=True)
    out[:, 2] = np.clip(out[:, 2], -d_max, d_max)
    return out


@dataclass(frozen=True, eq=False)
class MotionTextureSet:
    """Atlas-space maps of the deforming surface over a 3-frame window."""

    position: np.ndarray  # (R, R, 3) root-normalized, scaled to [-1, 1]
    velocity: np.ndarray  # (R, R, 3) forward difference f - (f-1)
    acceleration: np.ndarray  # (R, R, 3) second difference
    uv_id: np.ndarray  # (R, R, 2) texel atlas coordinate where covered
    normal: np.ndarray  # (R, R, 3) unit where covered
    mask: np.ndarray  # (R, R) bool
    scale: float  # meters-to-unit normalization applied to p/v/a


def bake_motion_textures(
    mesh: TriangleMesh,
    frames: np.ndarray,
    resolution: int = config.MOTION_TEXTURE_RESOLUTION,
    root_translations: np.ndarray | None = None,
    scale: float | None = None,
) -> MotionTextureSet:
    """Inverse texture mapping of a three-frame window of posed vertices.

    ``frames`` is (3, N, 3) ordered (f-2, f-1, f).  Positions are root
    normalized (per-frame root translation subtracted) and scaled by the
    final frame's maximum coordinate magnitude so the position texture
    lands in [-1, 1]; velocity and acceleration share that scale, so the
    acceleration texture is exactly the texel-wise forward difference of
    velocity.  Pass ``scale`` to pin the normalization across a sequence
    of bakes.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[0] != 3:
        raise RenderError("motion textures need a 3-frame window")
    if root_translations is None:
        root_translations = np.zeros((3, 3))
    rel = frames - np.asarray(root_translations, dtype=np.float64)[:, None, :]
    if scale is None:
        scale = max(np.abs(rel[2]).max(), 1e-12)
    rel = rel / scale

    R = resolution
    pos_tex = np.zeros((R, R, 3))
    vel_tex = np.zeros((R, R, 3))
    acc_tex = np.zeros((R, R, 3))
    uv_tex = np.zeros((R, R, 2))
    nrm_tex = np.zeros((R, R, 3))
    mask = np.zeros((R, R), dtype=bool)

    vnormals = vertex_normals(mesh, frames[2])
    p_f = rel[2]
    v_f = rel[2] - rel[1]
    a_f = rel[2] - 2 * rel[1] + rel[0]

    for fi in range(mesh.n_faces):
        uv = mesh.uv[fi] * (R - 1)  # texel-grid coordinates
        lo = np.clip(np.floor(uv.min(axis=0)).astype(int), 0, R - 1)
        hi = np.clip(np.ceil(uv.max(axis=0)).astype(int), 0, R - 1)
        if np.any(hi < lo):
            continue
        gx, gy = np.meshgrid(
            np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij"
        )
        det = (uv[1, 0] - uv[0, 0]) * (uv[2, 1] - uv[0, 1]) - (uv[1, 1] - uv[0, 1]) * (
            uv[2, 0] - uv[0, 0]
        )
        if det == 0.0:
            continue
        dx = gx - uv[0, 0]
        dy = gy - uv[0, 1]
        lb = ((uv[2, 1] - uv[0, 1]) * dx - (uv[2, 0] - uv[0, 0]) * dy) / det
        lc = (-(uv[1, 1] - uv[0, 1]) * dx + (uv[1, 0] - uv[0, 0]) * dy) / det
        la = 1.0 - lb - lc
        inside = (la >= -1e-9) & (lb >= -1e-9) & (lc >= -1e-9)
        if not inside.any():
            continue
        vids = mesh.faces[fi]
        bar = np.stack([la, lb, lc], axis=-1)[inside]  # (m, 3)
        ix = gx[inside]
        iy = gy[inside]
        pos_tex[ix, iy] = bar @ p_f[vids]
        vel_tex[ix, iy] = bar @ v_f[vids]
        acc_tex[ix, iy] = bar @ a_f[vids]
        n = bar @ vnormals[vids]
        nrm_tex[ix, iy] = n / np.linalg.norm(n, axis=1)[:, None]
        uv_tex[ix, iy, 0] = ix / (R - 1)
        uv_tex[ix, iy, 1] = iy / (R - 1)
        mask[ix, iy] = True

    return MotionTextureSet(
        position=pos_tex,
        velocity=vel_tex,
        acceleration=acc_tex,
        uv_id=uv_tex,
        normal=nrm_tex,
        mask=mask,
        scale=scale,
    )


def composite_texture_edit(
    rendered: np.ndarray,
    mesh: TriangleMesh,
    positions: np.ndarray,
    camera: Camera,
    edit_texture: np.ndarray,
) -> np.ndarray:
    """Alpha-blend a rasterized, textured template over a rendered image.

    ``edit_texture`` is an (Rt, Rt, 4) RGBA atlas image in [0, 1]; its
    color and alpha are looked up at the rasterized UVs (bilinear), depth
    tested against the template itself, and composited as
    icon_alpha * icon_rgb + (1 - icon_alpha) * rendered.
    """
    rendered = np.asarray(rendered, dtype=np.float64)
    tex = np.asarray(edit_texture, dtype=np.float64)
    if tex.ndim != 3 or tex.shape[2] != 4:
        raise RenderError("edit texture must be (R, R, 4) RGBA")
    raster = rasterize(mesh, positions, camera)
    out = np.array(rendered, copy=True)
    cover = raster.mask
    if not cover.any():
        return out
    faces = raster.face[cover]
    bary = raster.bary[cover]
    uv = np.einsum("mk,mki->mi", bary, mesh.uv[faces])
    rgba = _sample_texture(tex, uv)
    alpha = rgba[:, 3:4]
    out[cover] = alpha * rgba[:, :3] + (1.0 - alpha) * out[cover]
    return out


def _sample_texture(tex: np.ndarray, uv: np.ndarray) -> np.ndarray:
    R0, R1 = tex.shape[0], tex.shape[1]
    gx = np.clip(uv[:, 0], 0, 1) * (R0 - 1)
    gy = np.clip(uv[:, 1], 0, 1) * (R1 - 1)
    ix = np.clip(np.floor(gx).astype(int), 0, R0 - 2)
    iy = np.clip(np.floor(gy).astype(int), 0, R1 - 2)
    fx = (gx - ix)[:, None]
    fy = (gy - iy)[:, None]
    return (
        tex[ix, iy] * (1 - fx) * (1 - fy)
        + tex[ix + 1, iy] * fx * (1 - fy)
        + tex[ix, iy + 1] * (1 - fx) * fy
        + tex[ix + 1, iy + 1] * fx * fy
    )
