"""Central-difference verification of every analytic loss gradient.

Runs each in-scope loss on a randomized small fixture (well under 200
vertices) and reports the max relative error against the FD harness.
The fixtures keep every L1 kink and grid-cell boundary far from the
1e-5 stencil so truncation, not non-smoothness, bounds the error.
"""

from __future__ import annotations

import numpy as np

from trivatar import procedural
from trivatar.field import (
    DecodedSdf,
    FeatureTriplane,
    QuadricSdf,
    random_mlp,
)
from trivatar.losses import (
    check_gradients,
    eikonal_loss,
    image_losses,
    sdf_vertex_loss,
    seam_loss,
    surface_regularizers,
)


def _decoded_fixture(rng, d_max=0.5):
    channels, resolution, code_dim = 3, 6, 2
    tp = FeatureTriplane(
        *[rng.normal(size=(resolution, resolution, channels)) for _ in range(3)]
    )
    in_dim = 3 * channels + code_dim + 3 * (1 + 2 * 6)
    weights = random_mlp(rng, [in_dim, 24, 4], activation="softplus")
    return DecodedSdf(tp, weights, rng.normal(size=code_dim), d_max=d_max)


def _texture_coords(rng, n, d_max):
    return np.stack(
        [
            rng.uniform(0.15, 0.85, n),
            rng.uniform(0.15, 0.85, n),
            rng.uniform(-0.8 * d_max, 0.8 * d_max, n),
        ],
        axis=1,
    )


def run_all(seed: int = 0) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    results: dict[str, float] = {}

    # image losses over an 8x8 pair with offsets far from the L1 kink
    gt = rng.uniform(0.3, 0.7, size=(8, 8, 3))
    mask = (rng.uniform(size=(8, 8)) > 0.4).astype(float)
    pred = np.clip(
        gt + rng.choice([-1.0, 1.0], gt.shape) * rng.uniform(0.05, 0.2, gt.shape), 0, 1
    )
    opacity = np.clip(
        mask + rng.choice([-1.0, 1.0], mask.shape) * rng.uniform(0.05, 0.2, mask.shape),
        0,
        1,
    )

    def color_fn(p):
        values, grads = image_losses(p.reshape(pred.shape), opacity, gt, mask)
        return values["color"], grads["color"].reshape(-1)

    results["color"] = check_gradients(color_fn, pred.reshape(-1))

    def mask_fn(p):
        values, grads = image_losses(pred, p.reshape(opacity.shape), gt, mask)
        return values["mask"], grads["mask"].reshape(-1)

    results["mask"] = check_gradients(mask_fn, opacity.reshape(-1))

    def pyr_fn(p):
        values, grads = image_losses(p.reshape(pred.shape), opacity, gt, mask)
        return values["laplacian_pyramid"], grads["laplacian_pyramid"].reshape(-1)

    results["laplacian_pyramid"] = check_gradients(pyr_fn, pred.reshape(-1))

    # eikonal on the quadric (exact Hessian available)
    quadric = QuadricSdf(rng.normal(size=(3, 3)) * 0.3, rng.normal(size=3), 0.1)
    eik_pts = rng.normal(size=(6, 3))

    def eik_fn(p):
        value, grad = eikonal_loss(quadric, p.reshape(-1, 3))
        return value, grad.reshape(-1)

    results["eikonal"] = check_gradients(eik_fn, eik_pts.reshape(-1))

    # seam loss w.r.t. the tri-plane grids of a decoded field
    fld = _decoded_fixture(rng)
    side_a = _texture_coords(rng, 6, fld.d_max)
    side_b = side_a.copy()
    side_b[:, 0] = rng.uniform(0.15, 0.85, 6)
    grids0 = fld.triplane.to_array()

    def seam_fn(flat):
        tp = FeatureTriplane.from_array(flat.reshape(grids0.shape))
        f2 = DecodedSdf(tp, fld.weights, fld.motion_code, fld.d_max)
        value, grad = seam_loss(f2, side_a, side_b)
        return value, grad.reshape(-1)

    results["seam"] = check_gradients(seam_fn, grids0.reshape(-1))

    # vertex SDF loss w.r.t. texture coordinates of a decoded field
    verts = _texture_coords(rng, 8, fld.d_max)

    def sdf_fn(p):
        value, grad = sdf_vertex_loss(fld, p.reshape(-1, 3))
        return value, grad.reshape(-1)

    results["sdf"] = check_gradients(sdf_fn, verts.reshape(-1))

    # surface regularizers on a noisy icosphere (42 vertices)
    mesh = procedural.icosphere(1)
    before = mesh.vertices
    after = mesh.vertices + rng.normal(0, 0.03, before.shape)
    for name in (
        "laplacian_delta",
        "laplacian_zero",
        "normal_consistency",
        "edge_variance",
    ):

        def reg_fn(p, name=name):
            values, grads = surface_regularizers(mesh, before, p.reshape(-1, 3))
            return values[name], grads[name].reshape(-1)

        results[name] = check_gradients(reg_fn, after.reshape(-1))

    return results
