import numpy as np
import pytest

from trivatar.skeleton import (
    DofSpec,
    DualQuaternionSet,
    Skeleton,
    SkeletalMotion,
    SkeletonError,
    dq_multiply,
    dq_skin,
    dq_to_matrices,
    forward_kinematics,
    joint_world_matrices,
    load_skeleton,
    motion_window,
    normalize_motion,
    save_skeleton,
    skinning_transforms,
)


def translation(t):
    m = np.eye(4)
    m[:3, 3] = t
    return m


def two_bone_chain():
    """Root at origin, joint1 at +x 1, joint2 at +x 2; z-rotation DoF each."""
    rest = np.stack([np.eye(4), translation([1, 0, 0]), translation([1, 0, 0])])
    dofs = [
        DofSpec(0, "x", "translation", "root_tx"),
        DofSpec(0, "y", "translation", "root_ty"),
        DofSpec(0, "z", "translation", "root_tz"),
        DofSpec(0, "z", "rotation", "root_rz"),
        DofSpec(1, "z", "rotation", "j1_rz"),
        DofSpec(2, "z", "rotation", "j2_rz"),
    ]
    return Skeleton(["root", "j1", "j2"], [-1, 0, 1], rest, dofs)


class TestSkeletonModel:
    def test_topological_order_enforced(self):
        with pytest.raises(SkeletonError):
            Skeleton(
                ["a", "b"],
                [1, -1],
                np.stack([np.eye(4)] * 2),
                [DofSpec(0, "x", "rotation")],
            )

    def test_single_root_enforced(self):
        with pytest.raises(SkeletonError):
            Skeleton(
                ["a", "b"],
                [-1, -1],
                np.stack([np.eye(4)] * 2),
                [DofSpec(0, "x", "rotation")],
            )

    def test_json_round_trip(self, tmp_path):
        skel = two_bone_chain()
        path = tmp_path / "skel.json"
        save_skeleton(skel, path)
        loaded = load_skeleton(path)
        assert loaded.joint_names == skel.joint_names
        np.testing.assert_array_equal(loaded.parents, skel.parents)
        np.testing.assert_allclose(loaded.rest, skel.rest)
        assert [d.name for d in loaded.dofs] == [d.name for d in skel.dofs]


class TestForwardKinematics:
    def test_zero_pose_is_rest(self):
        skel = two_bone_chain()
        world = joint_world_matrices(skel, np.zeros(skel.n_dofs))
        np.testing.assert_allclose(world[0], np.eye(4), atol=1e-15)
        np.testing.assert_allclose(world[1][:3, 3], [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(world[2][:3, 3], [2, 0, 0], atol=1e-15)

    def test_root_translation_transports_all_joints(self):
        skel = two_bone_chain()
        pose = np.zeros(skel.n_dofs)
        pose[:3] = [0.5, -0.2, 1.0]
        world = joint_world_matrices(skel, pose)
        rest = joint_world_matrices(skel, np.zeros(skel.n_dofs))
        for j in range(3):
            np.testing.assert_allclose(
                world[j][:3, 3], rest[j][:3, 3] + pose[:3], atol=1e-15
            )

    def test_ninety_degree_elbow_matches_hand_matrix(self):
        skel = two_bone_chain()
        pose = np.zeros(skel.n_dofs)
        pose[4] = np.pi / 2  # joint 1 z-rotation
        world = joint_world_matrices(skel, pose)
        # hand-composed: joint2 = T(1,0,0) @ Rz(90) @ T(1,0,0)
        Rz = np.array(
            [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float
        )
        oracle = translation([1, 0, 0]) @ Rz @ translation([1, 0, 0])
        np.testing.assert_allclose(world[2], oracle, atol=1e-12)
        np.testing.assert_allclose(world[2][:3, 3], [1, 1, 0], atol=1e-12)

    def test_dq_output_satisfies_invariants(self):
        skel = two_bone_chain()
        rng = np.random.default_rng(0)
        dqs = forward_kinematics(skel, rng.uniform(-1, 1, skel.n_dofs))
        np.testing.assert_allclose(np.linalg.norm(dqs.real, axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(
            np.einsum("ij,ij->i", dqs.real, dqs.dual), 0.0, atol=1e-9
        )

    def test_fk_recomposition_from_local_transforms(self):
        # composing per-joint local DQs along the chain equals matrix FK
        skel = two_bone_chain()
        rng = np.random.default_rng(5)
        pose = rng.uniform(-1, 1, skel.n_dofs)
        world = joint_world_matrices(skel, pose)
        dq_world = forward_kinematics(skel, pose)
        locals_ = []
        for j in range(skel.n_joints):
            p = skel.parents[j]
            local = world[j] if p < 0 else np.linalg.inv(world[p]) @ world[j]
            locals_.append(DualQuaternionSet.from_matrices(local[None]).data[0])
        acc = locals_[0]
        chain = [acc]
        for j in range(1, skel.n_joints):
            acc = dq_multiply(acc, locals_[j])
            chain.append(acc)
        recomposed = dq_to_matrices(np.stack(chain))
        np.testing.assert_allclose(recomposed, dq_world.to_matrices(), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(SkeletonError, match="pose length"):
            forward_kinematics(two_bone_chain(), np.zeros(2))


class TestDqSkin:
    def test_identity_dqs_fix_vertices(self):
        rng = np.random.default_rng(1)
        Y = rng.normal(size=(20, 3))
        W = rng.dirichlet(np.ones(3), size=20)
        out = dq_skin(Y, W, DualQuaternionSet.identity(3))
        np.testing.assert_allclose(out, Y, atol=1e-12)

    def test_single_joint_translation(self):
        Y = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
        t = np.array([0.3, -0.4, 0.1])
        dqs = DualQuaternionSet.from_matrices(translation(t)[None])
        out = dq_skin(Y, np.ones((2, 1)), dqs)
        np.testing.assert_allclose(out, Y + t, atol=1e-12)

    def test_blend_of_equal_rotations_is_exact(self):
        rng = np.random.default_rng(2)
        from scipy.spatial.transform import Rotation

        R = Rotation.from_rotvec([0.3, -0.2, 0.9]).as_matrix()
        m = np.eye(4)
        m[:3, :3] = R
        dqs = DualQuaternionSet.from_matrices(np.stack([m, m]))
        Y = rng.normal(size=(10, 3))
        W = np.tile([0.4, 0.6], (10, 1))
        out = dq_skin(Y, W, dqs)
        np.testing.assert_allclose(out, Y @ R.T, atol=1e-12)

    def test_single_rigid_transform_equals_direct_application(self):
        # all joints share one rigid transform -> exact linear-blend agreement
        rng = np.random.default_rng(3)
        from scipy.spatial.transform import Rotation

        m = np.eye(4)
        m[:3, :3] = Rotation.from_rotvec([0.5, 0.1, -0.7]).as_matrix()
        m[:3, 3] = [0.2, 0.4, -0.3]
        dqs = DualQuaternionSet.from_matrices(np.stack([m, m, m]))
        Y = rng.normal(size=(50, 3))
        W = rng.dirichlet(np.ones(3), size=50)
        out = dq_skin(Y, W, dqs)
        oracle = Y @ m[:3, :3].T + m[:3, 3]
        np.testing.assert_allclose(out, oracle, atol=1e-12)

    def test_antipode_invariance(self):
        rng = np.random.default_rng(4)
        skel = two_bone_chain()
        pose = rng.uniform(-0.8, 0.8, skel.n_dofs)
        dqs = skinning_transforms(skel, pose)
        Y = rng.normal(size=(30, 3))
        W = rng.dirichlet(np.ones(3), size=30)
        base = dq_skin(Y, W, dqs)
        flipped = dqs.data.copy()
        flipped[1] = -flipped[1]
        out = dq_skin(Y, W, DualQuaternionSet(flipped))
        np.testing.assert_allclose(out, base, atol=1e-12)

    def test_antipodal_cancellation_detected(self):
        # The sign-pivot rule makes cancellation impossible for nonnegative
        # weights (blend . pivot >= pivot weight), so the guard is exercised
        # with a mixed-sign row that still sums to 1.
        data = np.zeros((3, 8))
        data[0, :4] = [1, 0, 0, 0]
        data[1, :4] = [0, 1, 0, 0]
        data[2, :4] = [np.sqrt(0.5), np.sqrt(0.5), 0, 0]
        sets = DualQuaternionSet(data)
        c = 1.0 / (2.0 - np.sqrt(2.0))
        W = np.array([[c, c, -np.sqrt(2.0) * c]])
        Y = np.zeros((1, 3))
        with pytest.raises(SkeletonError, match=r"vertices \[0\]"):
            dq_skin(Y, W, sets)


class TestSkinningTransforms:
    def test_zero_pose_gives_identity(self):
        skel = two_bone_chain()
        dqs = skinning_transforms(skel, np.zeros(skel.n_dofs))
        np.testing.assert_allclose(
            dqs.to_matrices(), np.tile(np.eye(4), (3, 1, 1)), atol=1e-12
        )


class TestNormalizeMotion:
    def test_already_zero_unchanged(self):
        skel = two_bone_chain()
        window = np.zeros((3, skel.n_dofs))
        window[:, 4] = [0.1, 0.2, 0.3]  # rotations untouched
        motion = SkeletalMotion(window, frame=2)
        out = normalize_motion(skel, motion)
        np.testing.assert_allclose(out.window, window)

    def test_constant_translation_removed(self):
        skel = two_bone_chain()
        window = np.zeros((3, skel.n_dofs))
        window[:, :3] = [0.5, 1.0, -2.0]
        out = normalize_motion(skel, SkeletalMotion(window, frame=2))
        np.testing.assert_allclose(out.window[:, :3], 0.0, atol=1e-15)

    def test_linear_translation_shifted(self):
        skel = two_bone_chain()
        t = np.array([0.1, 0.0, 0.2])
        window = np.zeros((3, skel.n_dofs))
        window[0, :3] = 0 * t
        window[1, :3] = 1 * t
        window[2, :3] = 2 * t
        out = normalize_motion(skel, SkeletalMotion(window, frame=2))
        np.testing.assert_allclose(out.window[0, :3], -2 * t, atol=1e-15)
        np.testing.assert_allclose(out.window[1, :3], -1 * t, atol=1e-15)
        np.testing.assert_allclose(out.window[2, :3], 0 * t, atol=1e-15)

    def test_idempotent(self):
        skel = two_bone_chain()
        rng = np.random.default_rng(6)
        motion = SkeletalMotion(rng.normal(size=(4, skel.n_dofs)), frame=10)
        once = normalize_motion(skel, motion)
        twice = normalize_motion(skel, once)
        np.testing.assert_allclose(twice.window, once.window, atol=1e-15)

    def test_rotations_untouched(self):
        skel = two_bone_chain()
        rng = np.random.default_rng(7)
        window = rng.normal(size=(3, skel.n_dofs))
        out = normalize_motion(skel, SkeletalMotion(window, frame=2))
        np.testing.assert_allclose(out.window[:, 3:], window[:, 3:], atol=1e-15)


class TestMotionWindow:
    def test_window_repeats_first_frame(self):
        poses = np.arange(12, dtype=float).reshape(4, 3)
        w = motion_window(poses, frame=0, k=3)
        np.testing.assert_allclose(w.window, [poses[0], poses[0], poses[0]])
        w2 = motion_window(poses, frame=2, k=3)
        np.testing.assert_allclose(w2.window, [poses[0], poses[1], poses[2]])
