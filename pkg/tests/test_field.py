import numpy as np
import pytest

from trivatar import procedural
from trivatar.field import (
    CapsuleSdf,
    DecodedSdf,
    FeatureTriplane,
    FieldError,
    MeshSdf,
    MlpWeights,
    PlaneSdf,
    QuadricSdf,
    ScaledSdf,
    SphereSdf,
    decode_color,
    load_mlp,
    load_triplane,
    mlp_forward,
    mlp_forward_with_jacobian,
    motion_code_from_window,
    positional_encoding,
    positional_encoding_jacobian,
    random_mlp,
    sample_triplane,
    sample_triplane_with_gradient,
    save_mlp,
    save_triplane,
    sdf_eval,
    sdf_gradient,
)
from trivatar.tensorio import read_tensor, write_tensor, TensorFormatError
from trivatar.utts import build_index


class TestTensorIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        arr = rng.normal(size=(3, 4, 5)).astype(np.float32).astype(np.float64)
        path = tmp_path / "t.trit"
        write_tensor(path, arr)
        back = read_tensor(path)
        np.testing.assert_array_equal(back, arr)
        assert back.shape == (3, 4, 5)

    def test_layout_is_exact(self, tmp_path):
        path = tmp_path / "t.trit"
        write_tensor(path, np.array([[1.0, 2.0], [3.0, 4.0]]))
        raw = path.read_bytes()
        assert raw[:4] == b"TRIT"
        assert raw[4:8] == (2).to_bytes(4, "little")
        assert raw[8:12] == (2).to_bytes(4, "little")
        assert raw[12:16] == (2).to_bytes(4, "little")
        assert np.frombuffer(raw[16:], dtype="<f4").tolist() == [1, 2, 3, 4]

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.trit"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(TensorFormatError, match="magic"):
            read_tensor(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "t.trit"
        write_tensor(path, np.ones((4, 4)))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(TensorFormatError, match="payload"):
            read_tensor(path)


class TestPositionalEncoding:
    def test_zero_input(self):
        out = positional_encoding(np.zeros((1, 3)), 4)
        n = 3
        np.testing.assert_allclose(out[0, :n], 0.0)
        for level in range(4):
            s = out[0, n * (1 + 2 * level) : n * (2 + 2 * level)]
            c = out[0, n * (2 + 2 * level) : n * (3 + 2 * level)]
            np.testing.assert_allclose(s, 0.0, atol=1e-15)
            np.testing.assert_allclose(c, 1.0, atol=1e-15)

    def test_dimension_formula(self):
        out = positional_encoding(np.zeros((2, 3)), 6)
        assert out.shape == (2, 3 * (1 + 2 * 6)) == (2, 39)

    def test_matches_scalar_evaluation(self):
        x = np.array([[1.0, 0.0, 0.0]])
        out = positional_encoding(x, 2)[0]
        expect = [1, 0, 0]
        for level in range(2):
            f = 2.0**level * np.pi
            expect += [np.sin(f * 1), np.sin(0.0), np.sin(0.0)]
            expect += [np.cos(f * 1), np.cos(0.0), np.cos(0.0)]
        # interleaving is [x, sin l0, cos l0, sin l1, cos l1]
        manual = np.concatenate(
            [
                x[0],
                np.sin(np.pi * x[0]),
                np.cos(np.pi * x[0]),
                np.sin(2 * np.pi * x[0]),
                np.cos(2 * np.pi * x[0]),
            ]
        )
        np.testing.assert_allclose(out, manual, atol=1e-15)

    def test_components_bounded(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-3, 3, size=(50, 3))
        out = positional_encoding(x, 5)
        assert np.all(np.abs(out[:, 3:]) <= 1.0 + 1e-12)

    def test_jacobian_matches_fd(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, size=(5, 3))
        jac = positional_encoding_jacobian(x, 3)
        h = 1e-6
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            fd = (positional_encoding(x + dx, 3) - positional_encoding(x - dx, 3)) / (2 * h)
            np.testing.assert_allclose(jac[:, :, k], fd, atol=1e-6)


class TestSampleTriplane:
    def test_constant_planes(self):
        tp = FeatureTriplane(
            np.full((4, 4, 2), 1.5), np.full((4, 4, 2), -0.5), np.full((4, 4, 2), 2.0)
        )
        out = sample_triplane(tp, [[0.3, 0.7, 0.5]])
        np.testing.assert_allclose(out[0], [1.5, 1.5, -0.5, -0.5, 2.0, 2.0], atol=1e-15)

    def test_lattice_points_exact(self):
        rng = np.random.default_rng(3)
        R, C = 5, 3
        tp = FeatureTriplane(*[rng.normal(size=(R, R, C)) for _ in range(3)])
        i, j, k = 2, 4, 1
        coords = np.array([[i / (R - 1), j / (R - 1), k / (R - 1)]])
        out = sample_triplane(tp, coords)[0]
        np.testing.assert_allclose(out[:C], tp.surface[i, j], atol=1e-12)
        np.testing.assert_allclose(out[C : 2 * C], tp.x_height[i, k], atol=1e-12)
        np.testing.assert_allclose(out[2 * C :], tp.y_height[j, k], atol=1e-12)

    def test_interior_matches_manual_bilerp(self):
        rng = np.random.default_rng(4)
        R, C = 4, 2
        tp = FeatureTriplane(*[rng.normal(size=(R, R, C)) for _ in range(3)])
        ux, uy, dh = 0.41, 0.13, 0.77

        def manual(plane, x, y):
            gx, gy = x * (R - 1), y * (R - 1)
            ix, iy = int(gx), int(gy)
            fx, fy = gx - ix, gy - iy
            return (
                plane[ix, iy] * (1 - fx) * (1 - fy)
                + plane[ix + 1, iy] * fx * (1 - fy)
                + plane[ix, iy + 1] * (1 - fx) * fy
                + plane[ix + 1, iy + 1] * fx * fy
            )

        out = sample_triplane(tp, [[ux, uy, dh]])[0]
        np.testing.assert_allclose(out[:C], manual(tp.surface, ux, uy), atol=1e-12)
        np.testing.assert_allclose(out[C : 2 * C], manual(tp.x_height, ux, dh), atol=1e-12)
        np.testing.assert_allclose(out[2 * C :], manual(tp.y_height, uy, dh), atol=1e-12)

    def test_affine_along_cell_segment(self):
        # inside one cell the sample is affine in the parameter
        rng = np.random.default_rng(5)
        tp = FeatureTriplane(*[rng.normal(size=(6, 6, 2)) for _ in range(3)])
        t = np.linspace(0.0, 1.0, 7)
        lo = np.array([0.42, 0.61, 0.25])
        hi = np.array([0.55, 0.61, 0.25])  # x varies within cell [2,3)/5
        coords = lo[None] + t[:, None] * (hi - lo)[None]
        vals = sample_triplane(tp, coords)
        # second difference of an affine sequence vanishes
        dd = vals[2:] - 2 * vals[1:-1] + vals[:-2]
        np.testing.assert_allclose(dd, 0.0, atol=1e-12)

    def test_out_of_range_rejected(self):
        tp = FeatureTriplane.zeros(4, 1)
        with pytest.raises(FieldError, match="outside"):
            sample_triplane(tp, [[1.2, 0.0, 0.0]])

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(6)
        tp = FeatureTriplane(*[rng.normal(size=(8, 8, 2)) for _ in range(3)])
        coords = rng.uniform(0.05, 0.95, size=(10, 3))
        _, jac = sample_triplane_with_gradient(tp, coords)
        h = 1e-7
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            fd = (sample_triplane(tp, coords + dx) - sample_triplane(tp, coords - dx)) / (
                2 * h
            )
            np.testing.assert_allclose(jac[:, :, k], fd, atol=1e-5)


class TestMlp:
    def test_zero_weights_return_bias(self):
        w = MlpWeights([(np.zeros((3, 2)), np.array([1.0, -2.0, 0.5]), "none")])
        out = mlp_forward(w, np.array([[4.0, 5.0]]))
        np.testing.assert_allclose(out[0], [1.0, -2.0, 0.5], atol=1e-15)

    def test_identity_layer(self):
        w = MlpWeights([(np.eye(3), np.zeros(3), "none")])
        x = np.array([[0.1, -0.7, 2.0]])
        np.testing.assert_allclose(mlp_forward(w, x), x, atol=1e-15)

    def test_two_layer_relu_hand_computation(self):
        W1 = np.array([[1.0, -1.0], [0.5, 2.0]])
        b1 = np.array([0.0, -1.0])
        W2 = np.array([[1.0, 1.0]])
        b2 = np.array([0.25])
        w = MlpWeights([(W1, b1, "relu"), (W2, b2, "none")])
        x = np.array([[2.0, 1.0]])
        h = np.maximum(W1 @ x[0] + b1, 0)  # (1, 2) -> relu([1, 2]) = [1, 2]
        expect = W2 @ h + b2
        np.testing.assert_allclose(mlp_forward(w, x)[0], expect, atol=1e-15)

    def test_dimension_mismatch(self):
        w = MlpWeights([(np.eye(3), np.zeros(3), "none")])
        with pytest.raises(FieldError, match="input dim"):
            mlp_forward(w, np.zeros((1, 4)))
        with pytest.raises(FieldError, match="chain|previous"):
            MlpWeights(
                [(np.eye(3), np.zeros(3), "none"), (np.eye(4), np.zeros(4), "none")]
            )

    def test_jacobian_matches_fd(self):
        rng = np.random.default_rng(7)
        w = random_mlp(rng, [4, 8, 3], activation="softplus")
        x = rng.normal(size=(5, 4))
        out, jac = mlp_forward_with_jacobian(w, x)
        np.testing.assert_allclose(out, mlp_forward(w, x), atol=1e-12)
        h = 1e-6
        for k in range(4):
            dx = np.zeros(4)
            dx[k] = h
            fd = (mlp_forward(w, x + dx) - mlp_forward(w, x - dx)) / (2 * h)
            np.testing.assert_allclose(jac[:, :, k], fd, atol=1e-6)

    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        w = random_mlp(rng, [3, 5, 2])
        # float32 storage: quantize before comparing
        manifest = save_mlp(w, tmp_path, "demo")
        back = load_mlp(manifest)
        for (W1, b1, a1), (W2, b2, a2) in zip(w.layers, back.layers):
            np.testing.assert_allclose(W2, W1.astype(np.float32), atol=1e-7)
            assert a1 == a2


class TestSdfFields:
    def test_unit_sphere_point_value(self):
        s, q = sdf_eval(SphereSdf((0, 0, 0), 1.0), np.array([[2.0, 0.0, 0.0]]))
        assert s[0] == pytest.approx(1.0, abs=1e-12)
        assert q is None

    def test_sphere_gradient_radial(self):
        g = sdf_gradient(SphereSdf((0, 0, 0), 1.0), np.array([[2.0, 0.0, 0.0]]))
        np.testing.assert_allclose(g[0], [1, 0, 0], atol=1e-12)

    def test_plane_gradient_exact(self):
        fld = PlaneSdf((0, 3, 4), offset=0.2)
        x = np.random.default_rng(0).normal(size=(10, 3))
        g = sdf_gradient(fld, x)
        np.testing.assert_allclose(g, np.tile([0, 0.6, 0.8], (10, 1)), atol=1e-12)

    def test_analytic_eikonal_property(self):
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(200, 3)) * 2
        for fld in (
            SphereSdf((0.1, -0.2, 0.3), 0.7),
            PlaneSdf((1, 2, -1), 0.1),
            CapsuleSdf((0, 0, -0.5), (0, 0, 0.5), 0.3),
        ):
            g = sdf_gradient(fld, pts)
            np.testing.assert_allclose(np.linalg.norm(g, axis=1), 1.0, atol=1e-9)

    def test_mesh_sdf_matches_analytic_box(self):
        half = np.array([0.4, 0.3, 0.5])
        mesh = procedural.box(half)
        index = build_index(mesh)
        fld = MeshSdf(index)

        def box_sdf(pts):
            q = np.abs(pts) - half
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
            inside = np.minimum(q.max(axis=1), 0.0)
            return outside + inside

        # sample points whose nearest feature is a face interior: lift from
        # shrunken faces so edges/corners stay distant
        rng = np.random.default_rng(10)
        pts = []
        for axis in range(3):
            for sign in (-1.0, 1.0):
                uv_axes = [a for a in range(3) if a != axis]
                p = np.zeros((100, 3))
                p[:, axis] = sign * half[axis]
                for a in uv_axes:
                    p[:, a] = rng.uniform(-0.5, 0.5, 100) * half[a]
                p[:, axis] += sign * rng.uniform(-0.2, 0.3, 100)
                pts.append(p)
        pts = np.concatenate(pts)
        s = fld.eval(pts)
        np.testing.assert_allclose(s, box_sdf(pts), atol=1e-6)

    def test_scaled_field_breaks_eikonal(self):
        fld = ScaledSdf(SphereSdf((0, 0, 0), 1.0), 2.0)
        g = sdf_gradient(fld, np.array([[2.0, 0.0, 0.0]]))
        assert np.linalg.norm(g[0]) == pytest.approx(2.0, abs=1e-12)

    def test_quadric_gradient_and_hessian(self):
        rng = np.random.default_rng(11)
        fld = QuadricSdf(rng.normal(size=(3, 3)), rng.normal(size=3), 0.3)
        x = rng.normal(size=(7, 3))
        h = 1e-6
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            fd = (fld.eval(x + dx) - fld.eval(x - dx)) / (2 * h)
            np.testing.assert_allclose(fld.gradient(x)[:, k], fd, atol=1e-6)
            fd_h = (fld.gradient(x + dx) - fld.gradient(x - dx)) / (2 * h)
            np.testing.assert_allclose(fld.hessian(x)[:, :, k], fd_h, atol=1e-6)


def make_decoded(rng, channels=4, resolution=8, code_dim=3, d_max=0.04,
                 activation="softplus"):
    tp = FeatureTriplane(*[rng.normal(size=(resolution, resolution, channels)) for _ in range(3)])
    in_dim = 3 * channels + code_dim + 3 * (1 + 2 * 6)
    w = random_mlp(rng, [in_dim, 16, 5], activation=activation)
    code = rng.normal(size=code_dim)
    return DecodedSdf(tp, w, code, d_max=d_max)


class TestDecodedSdf:
    def test_constant_bias_decode(self):
        tp = FeatureTriplane.zeros(4, 2)
        in_dim = 6 + 0 + 39
        W = np.zeros((3, in_dim))
        b = np.array([0.07, 0.0, 0.0])
        fld = DecodedSdf(tp, MlpWeights([(W, b, "none")]), None, d_max=0.04)
        rng = np.random.default_rng(12)
        coords = np.stack(
            [
                rng.uniform(0, 1, 20),
                rng.uniform(0, 1, 20),
                rng.uniform(-0.04, 0.04, 20),
            ],
            axis=1,
        )
        s, q = sdf_eval(fld, coords)
        np.testing.assert_allclose(s, 0.07, atol=1e-15)
        assert q.shape == (20, 2)

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        fld = make_decoded(rng)
        coords = np.array([[0.3, 0.4, 0.01], [0.9, 0.2, -0.03]])
        a = fld.eval(coords)
        b = fld.eval(coords)
        np.testing.assert_array_equal(a, b)

    def test_out_of_band_rejected(self):
        rng = np.random.default_rng(14)
        fld = make_decoded(rng, d_max=0.02)
        with pytest.raises(FieldError, match="d_max"):
            fld.eval(np.array([[0.5, 0.5, 0.03]]))

    def test_analytic_gradient_matches_fd(self):
        rng = np.random.default_rng(15)
        fld = make_decoded(rng, activation="softplus")
        coords = np.stack(
            [
                rng.uniform(0.1, 0.9, 30),
                rng.uniform(0.1, 0.9, 30),
                rng.uniform(-0.03, 0.03, 30),
            ],
            axis=1,
        )
        grad = fld.gradient(coords)
        h = 1e-6
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            fd = (fld.eval(coords + dx) - fld.eval(coords - dx)) / (2 * h)
            rel = np.abs(grad[:, k] - fd) / np.maximum(1.0, np.abs(grad[:, k]))
            assert rel.max() < 1e-5

    def test_triplane_round_trip(self, tmp_path):
        rng = np.random.default_rng(16)
        tp = FeatureTriplane(*[rng.normal(size=(4, 4, 2)).astype(np.float32) for _ in range(3)])
        save_triplane(tp, tmp_path / "tp.trit")
        back = load_triplane(tmp_path / "tp.trit")
        np.testing.assert_allclose(back.surface, tp.surface, atol=1e-7)


class TestAuxiliaryDecoders:
    def test_motion_code_shape(self):
        rng = np.random.default_rng(17)
        w = random_mlp(rng, [9, 128, 128, 16])
        code = motion_code_from_window(w, rng.normal(size=(3, 3)))
        assert code.shape == (16,)

    def test_color_decode_in_unit_range(self):
        rng = np.random.default_rng(18)
        q = rng.normal(size=(10, 4))
        s = rng.normal(size=10)
        n = rng.normal(size=(10, 3))
        d = rng.normal(size=(10, 3))
        in_dim = 4 + 1 + 3 + 3 * (1 + 2 * 4) + 3
        w = random_mlp(rng, [in_dim, 32, 3])
        rgb = decode_color(w, q, s, n, d, np.array([0.1, 0.2, 0.3]))
        assert rgb.shape == (10, 3)
        assert rgb.min() >= 0 and rgb.max() <= 1
