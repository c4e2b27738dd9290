"""Skeletal DoF model, forward kinematics, and dual-quaternion skinning.

A skeleton is a topologically sorted joint tree plus an ordered list of
scalar degrees of freedom (rotations in radians, translations in meters).
Pose vectors index that DoF list.  Skinning blends per-joint rigid
transforms in dual-quaternion space (blend, then normalize), with
antipodality resolved against each vertex's highest-weight joint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

AXES = {"x": 0, "y": 1, "z": 2}


class SkeletonError(ValueError):
    """Invalid skeleton, pose, or motion data."""


@dataclass(frozen=True)
class DofSpec:
    joint: int
    axis: str
    kind: str  # "rotation" | "translation"
    name: str = ""
    range: tuple[float, float] = (-np.pi, np.pi)

    def __post_init__(self):
        if self.axis not in AXES:
            raise SkeletonError(f"bad axis {self.axis!r}")
        if self.kind not in ("rotation", "translation"):
            raise SkeletonError(f"bad dof kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Joint tree with rest transforms and a DoF map of length P."""

    joint_names: list[str]
    parents: np.ndarray  # (J,) int, parent[j] < j, root = -1
    rest: np.ndarray  # (J, 4, 4) local rest transforms
    dofs: list[DofSpec] = field(default_factory=list)

    def __post_init__(self):
        parents = np.asarray(self.parents, dtype=np.int64)
        rest = np.asarray(self.rest, dtype=np.float64)
        J = len(self.joint_names)
        if parents.shape != (J,) or rest.shape != (J, 4, 4):
            raise SkeletonError("joint_names / parents / rest sizes disagree")
        if np.count_nonzero(parents == -1) != 1 or parents[0] != -1:
            raise SkeletonError("exactly one root (joint 0) required")
        if np.any(parents >= np.arange(J)):
            raise SkeletonError("parents must be topologically sorted (parent < joint)")
        if not self.dofs:
            raise SkeletonError("at least one DoF required")
        for d in self.dofs:
            if not 0 <= d.joint < J:
                raise SkeletonError(f"dof references joint {d.joint} out of range")
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "rest", rest)

    @property
    def n_joints(self) -> int:
        return len(self.joint_names)

    @property
    def n_dofs(self) -> int:
        return len(self.dofs)

    def root_translation_dofs(self) -> list[int]:
        """Indices of translational DoFs on the root joint, in DoF order."""
        return [
            i
            for i, d in enumerate(self.dofs)
            if d.joint == 0 and d.kind == "translation"
        ]

    def to_json_dict(self) -> dict:
        return {
            "joints": [
                {
                    "name": self.joint_names[j],
                    "parent": int(self.parents[j]),
                    "rest": self.rest[j].tolist(),
                }
                for j in range(self.n_joints)
            ],
            "dofs": [
                {
                    "joint": d.joint,
                    "axis": d.axis,
                    "type": d.kind,
                    "name": d.name,
                    "range": list(d.range),
                }
                for d in self.dofs
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Skeleton":
        joints = data["joints"]
        dofs = [
            DofSpec(
                joint=int(d["joint"]),
                axis=d["axis"],
                kind=d["type"],
                name=d.get("name", ""),
                range=tuple(d.get("range", (-np.pi, np.pi))),
            )
            for d in data["dofs"]
        ]
        return cls(
            joint_names=[j["name"] for j in joints],
            parents=np.array([j["parent"] for j in joints], dtype=np.int64),
            rest=np.array([j["rest"] for j in joints], dtype=np.float64),
            dofs=dofs,
        )


def load_skeleton(path) -> Skeleton:
    with open(path) as fh:
        return Skeleton.from_json_dict(json.load(fh))


def save_skeleton(skeleton: Skeleton, path) -> None:
    with open(path, "w") as fh:
        json.dump(skeleton.to_json_dict(), fh, indent=1)


@dataclass(frozen=True, eq=False)
class SkeletalMotion:
    """Window of k consecutive pose vectors; the last row is frame ``frame``."""

    window: np.ndarray  # (k, P)
    frame: int = 0
    fps: float = 25.0

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.window, dtype=np.float64))
        if w.ndim != 2 or len(w) < 1:
            raise SkeletonError("window must be a (k, P) array with k >= 1")
        object.__setattr__(self, "window", w)

    @property
    def k(self) -> int:
        return len(self.window)

    @property
    def current_pose(self) -> np.ndarray:
        return self.window[-1]


def load_motion(path) -> tuple[np.ndarray, float]:
    """Read a motion file: JSON object with ``poses`` (list of P-vectors) and ``fps``."""
    with open(path) as fh:
        data = json.load(fh)
    poses = np.asarray(data["poses"], dtype=np.float64)
    return poses, float(data.get("fps", 25.0))


def save_motion(poses: np.ndarray, path, fps: float = 25.0) -> None:
    with open(path, "w") as fh:
        json.dump({"fps": fps, "poses": np.asarray(poses).tolist()}, fh)


def motion_window(poses: np.ndarray, frame: int, k: int = 3, fps: float = 25.0) -> SkeletalMotion:
    """Sliding window ending at ``frame``; the first frames repeat pose 0."""
    rows = [poses[max(0, frame - (k - 1 - i))] for i in range(k)]
    return SkeletalMotion(np.stack(rows), frame=frame, fps=fps)


# ---------------------------------------------------------------------------
# dual quaternions


@dataclass(frozen=True, eq=False)
class DualQuaternionSet:
    """Per-joint unit dual quaternions, stored (J, 8) as [real wxyz, dual wxyz]."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64).reshape(-1, 8)
        real_norm = np.linalg.norm(d[:, :4], axis=1)
        if np.any(np.abs(real_norm - 1.0) > 1e-9):
            raise SkeletonError("dual quaternion real parts must be unit-norm")
        ortho = np.einsum("ij,ij->i", d[:, :4], d[:, 4:])
        if np.any(np.abs(ortho) > 1e-9):
            raise SkeletonError("dual part must be orthogonal to real part")
        object.__setattr__(self, "data", d)

    def __len__(self) -> int:
        return len(self.data)

    @property
    def real(self) -> np.ndarray:
        return self.data[:, :4]

    @property
    def dual(self) -> np.ndarray:
        return self.data[:, 4:]

    @classmethod
    def identity(cls, n: int) -> "DualQuaternionSet":
        d = np.zeros((n, 8))
        d[:, 0] = 1.0
        return cls(d)

    @classmethod
    def from_matrices(cls, mats: np.ndarray) -> "DualQuaternionSet":
        """Convert (J, 4, 4) rigid transforms to unit dual quaternions."""
        mats = np.asarray(mats, dtype=np.float64).reshape(-1, 4, 4)
        q_xyzw = Rotation.from_matrix(mats[:, :3, :3]).as_quat().reshape(-1, 4)
        q_real = np.concatenate([q_xyzw[:, 3:4], q_xyzw[:, :3]], axis=1)
        t = np.zeros_like(q_real)
        t[:, 1:] = mats[:, :3, 3]
        q_dual = 0.5 * quat_multiply(t, q_real)
        return cls(np.concatenate([q_real, q_dual], axis=1))

    def to_matrices(self) -> np.ndarray:
        return dq_to_matrices(self.data)


def quat_multiply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product of (..., 4) quaternions in wxyz order."""
    pw, px, py, pz = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    qw, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    out = np.array(q, copy=True)
    out[..., 1:] = -out[..., 1:]
    return out


def dq_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dual-quaternion product; composes the transforms a then b (a @ b)."""
    ar, ad = a[..., :4], a[..., 4:]
    br, bd = b[..., :4], b[..., 4:]
    real = quat_multiply(ar, br)
    dual = quat_multiply(ar, bd) + quat_multiply(ad, br)
    return np.concatenate([real, dual], axis=-1)


def dq_to_matrices(dq: np.ndarray) -> np.ndarray:
    """Convert unit dual quaternions (..., 8) to 4x4 rigid transforms."""
    dq = np.asarray(dq, dtype=np.float64)
    flat = dq.reshape(-1, 8)
    q_real, q_dual = flat[:, :4], flat[:, 4:]
    q_xyzw = np.concatenate([q_real[:, 1:], q_real[:, :1]], axis=1)
    R = Rotation.from_quat(q_xyzw).as_matrix().reshape(-1, 3, 3)
    t = 2.0 * quat_multiply(q_dual, quat_conjugate(q_real))[:, 1:]
    out = np.tile(np.eye(4), (len(flat), 1, 1))
    out[:, :3, :3] = R
    out[:, :3, 3] = t
    return out.reshape(dq.shape[:-1] + (4, 4))


# ---------------------------------------------------------------------------
# kinematics and skinning


def _dof_matrix(dof: DofSpec, value: float) -> np.ndarray:
    m = np.eye(4)
    axis = AXES[dof.axis]
    if dof.kind == "translation":
        m[axis, 3] = value
        return m
    c, s = np.cos(value), np.sin(value)
    i, j = [(1, 2), (2, 0), (0, 1)][axis]
    m[i, i] = c
    m[j, j] = c
    m[i, j] = -s
    m[j, i] = s
    return m


def joint_world_matrices(skeleton: Skeleton, pose: np.ndarray) -> np.ndarray:
    """World transform per joint.

    A joint's DoFs act in its own frame (after the rest offset), composed in
    DoF-map order; three rotation DoFs on axes x, y, z therefore realize an
    intrinsic XYZ Euler rotation about the joint origin.
    """
    pose = np.asarray(pose, dtype=np.float64).reshape(-1)
    if pose.shape != (skeleton.n_dofs,):
        raise SkeletonError(
            f"pose length {pose.shape[0]} != {skeleton.n_dofs} DoFs"
        )
    J = skeleton.n_joints
    local = [np.eye(4) for _ in range(J)]
    for i, dof in enumerate(skeleton.dofs):
        local[dof.joint] = local[dof.joint] @ _dof_matrix(dof, pose[i])
    world = np.zeros((J, 4, 4))
    for j in range(J):
        own = skeleton.rest[j] @ local[j]
        p = skeleton.parents[j]
        world[j] = own if p < 0 else world[p] @ own
    return world


def forward_kinematics(skeleton: Skeleton, pose: np.ndarray) -> DualQuaternionSet:
    """Per-joint world transforms as unit dual quaternions."""
    return DualQuaternionSet.from_matrices(joint_world_matrices(skeleton, pose))


def skinning_transforms(skeleton: Skeleton, pose: np.ndarray) -> DualQuaternionSet:
    """Rest-relative transforms: world(pose) composed with inverse rest world.

    At the zero pose these are identities, so skinning leaves vertices fixed.
    """
    world = joint_world_matrices(skeleton, pose)
    rest_world = joint_world_matrices(skeleton, np.zeros(skeleton.n_dofs))
    inv = np.array([_rigid_inverse(m) for m in rest_world])
    return DualQuaternionSet.from_matrices(world @ inv)


def _rigid_inverse(m: np.ndarray) -> np.ndarray:
    out = np.eye(4)
    out[:3, :3] = m[:3, :3].T
    out[:3, 3] = -m[:3, :3].T @ m[:3, 3]
    return out


def dq_skin(
    rest_vertices: np.ndarray,
    weights: np.ndarray,
    dqs: DualQuaternionSet,
) -> np.ndarray:
    """Dual-quaternion linear blending: blend, normalize, transform.

    ``weights`` is (N, J) with rows summing to 1.  Each joint quaternion is
    sign-flipped to the hemisphere of the vertex's highest-weight joint
    before blending.  Raises if the blended real part cancels out.
    """
    Y = np.asarray(rest_vertices, dtype=np.float64)
    W = np.asarray(weights, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != len(Y):
        raise SkeletonError(f"weights must be (N, J), got {W.shape}")
    if W.shape[1] != len(dqs):
        raise SkeletonError(
            f"weights reference {W.shape[1]} joints, have {len(dqs)}"
        )
    if np.any(np.abs(W.sum(axis=1) - 1.0) > 1e-6):
        raise SkeletonError("weight rows must sum to 1")

    q_real = dqs.real  # (J, 4)
    pivot = np.argmax(W, axis=1)  # (N,)
    dots = q_real[pivot] @ q_real.T  # (N, J)
    signs = np.where(dots < 0.0, -1.0, 1.0)
    Weff = W * signs
    blended = Weff @ dqs.data  # (N, 8)
    real_norm = np.linalg.norm(blended[:, :4], axis=1)
    dead = np.flatnonzero(real_norm < 1e-9)
    if dead.size:
        raise SkeletonError(
            f"antipodal cancellation: blended rotation vanishes at vertices {dead.tolist()}"
        )
    unit = blended / real_norm[:, None]
    mats = dq_to_matrices(unit)
    return np.einsum("nij,nj->ni", mats[:, :3, :3], Y) + mats[:, :3, 3]


def normalize_motion(skeleton: Skeleton, motion: SkeletalMotion) -> SkeletalMotion:
    """Shift root-translation DoFs so the final frame's root translation is zero.

    Rotational DoFs (and every non-root DoF) are untouched; the operation is
    idempotent.
    """
    idx = skeleton.root_translation_dofs()
    if not idx:
        raise SkeletonError("skeleton has no translational root DoFs")
    window = motion.window.copy()
    window[:, idx] -= window[-1, idx]
    return SkeletalMotion(window, frame=motion.frame, fps=motion.fps)
