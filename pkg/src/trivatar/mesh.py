"""Triangle-mesh data model, OBJ I/O, differential operators, and subdivision.

Meshes carry a per-face-corner (wedge) UV atlas so that texture seams are
representable: the same 3D vertex may own different UV coordinates in the
two faces meeting across a seam edge.  All types are immutable after
construction and all operations are pure functions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np


class MeshError(ValueError):
    """Invalid mesh data or operation input."""


class ObjParseError(MeshError):
    """Malformed Wavefront OBJ content.  Carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Triangle mesh with wedge UVs and optional skinning weights.

    Parameters
    ----------
    vertices : (N, 3) float array
        Vertex positions in meters.
    faces : (F, 3) int array
        Vertex indices, counter-clockwise winding.
    uv : (F, 3, 2) float array
        Per-face-corner atlas coordinates in [0, 1]^2.
    skin_weights : (N, J) float array, optional
        Per-vertex joint weights; each row sums to 1 within 1e-6.
    """

    vertices: np.ndarray
    faces: np.ndarray
    uv: np.ndarray
    skin_weights: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        t = np.ascontiguousarray(np.asarray(self.uv, dtype=np.float64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (N, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (F, 3), got {f.shape}")
        if t.shape != (len(f), 3, 2):
            raise MeshError(f"uv must be (F, 3, 2) = {(len(f), 3, 2)}, got {t.shape}")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        if len(f):
            a, b, c = f[:, 0], f[:, 1], f[:, 2]
            bad = np.flatnonzero((a == b) | (b == c) | (a == c))
            if bad.size:
                raise MeshError(f"faces with repeated vertex indices: {bad.tolist()}")
        if t.size and (t.min() < -1e-12 or t.max() > 1 + 1e-12):
            raise MeshError("uv coordinates outside [0, 1]^2")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "uv", np.clip(t, 0.0, 1.0))
        if self.skin_weights is not None:
            w = np.ascontiguousarray(np.asarray(self.skin_weights, dtype=np.float64))
            if w.ndim != 2 or w.shape[0] != len(v):
                raise MeshError(f"skin_weights must be (N, J), got {w.shape}")
            sums = w.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > 1e-6):
                raise MeshError("skin weight rows must sum to 1 within 1e-6")
            object.__setattr__(self, "skin_weights", w)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def with_vertices(self, positions: np.ndarray) -> "TriangleMesh":
        """Same topology and UVs with replaced vertex positions."""
        return TriangleMesh(positions, self.faces, self.uv, self.skin_weights)


@dataclass(frozen=True, eq=False)
class SeamEdgeList:
    """Paired half-edges that share geometry but split in the UV atlas.

    Arrays are indexed per seam pair.  Side a / side b correspond to the two
    faces adjacent to the seam edge; both sides parameterize the edge in the
    same world direction, so equal interpolation factors land on the same
    3D point.

    Fields
    ------
    vertex_pairs : (S, 2) int
        The two mesh vertices of each seam edge (start, end).
    faces : (S, 2) int
        Adjacent face index on side a and side b.
    uv_start_a, uv_start_b : (S, 2) float
        UV image of the edge start vertex on each side.
    uv_edge_a, uv_edge_b : (S, 2) float
        Oriented UV edge vectors (start -> end) on each side.
    uv_normal_a, uv_normal_b : (S, 2) float
        Unit UV normals of the edge, oriented into the adjacent face's chart.
    """

    vertex_pairs: np.ndarray
    faces: np.ndarray
    uv_start_a: np.ndarray
    uv_start_b: np.ndarray
    uv_edge_a: np.ndarray
    uv_edge_b: np.ndarray
    uv_normal_a: np.ndarray
    uv_normal_b: np.ndarray

    def __len__(self) -> int:
        return len(self.vertex_pairs)


def load_obj(path) -> TriangleMesh:
    """Load a Wavefront OBJ with ``v``, ``vt`` and ``f v/vt`` records.

    Every face corner must reference a texture coordinate; faces must be
    triangles.  Positions are meters, UVs are clamped atlas coordinates.
    """
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_obj(fh)


def loads_obj(text: str) -> TriangleMesh:
    """Parse OBJ content from a string (see :func:`load_obj`)."""
    return _parse_obj(io.StringIO(text))


def _parse_obj(fh) -> TriangleMesh:
    verts: list[list[float]] = []
    uvs: list[list[float]] = []
    face_v: list[list[int]] = []
    face_t: list[list[int]] = []
    for line_no, raw in enumerate(fh, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError(line_no, "vertex needs 3 coordinates")
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise ObjParseError(line_no, "bad vertex coordinate") from None
        elif tag == "vt":
            if len(parts) < 3:
                raise ObjParseError(line_no, "texture coordinate needs 2 values")
            try:
                uvs.append([float(parts[1]), float(parts[2])])
            except ValueError:
                raise ObjParseError(line_no, "bad texture coordinate") from None
        elif tag == "f":
            corners = parts[1:]
            if len(corners) != 3:
                raise ObjParseError(line_no, f"expected triangle, got {len(corners)} corners")
            vi, ti = [], []
            for corner in corners:
                fields = corner.split("/")
                if len(fields) < 2 or not fields[1]:
                    raise ObjParseError(line_no, f"face corner '{corner}' lacks a vt reference")
                try:
                    v_idx = int(fields[0])
                    t_idx = int(fields[1])
                except ValueError:
                    raise ObjParseError(line_no, f"bad face corner '{corner}'") from None
                # OBJ indices are 1-based; negative indices count from the end.
                v_idx = v_idx - 1 if v_idx > 0 else len(verts) + v_idx
                t_idx = t_idx - 1 if t_idx > 0 else len(uvs) + t_idx
                if not 0 <= v_idx < len(verts):
                    raise ObjParseError(line_no, f"vertex index {fields[0]} out of range")
                if not 0 <= t_idx < len(uvs):
                    raise ObjParseError(line_no, f"texture index {fields[1]} out of range")
                vi.append(v_idx)
                ti.append(t_idx)
            face_v.append(vi)
            face_t.append(ti)
        # other records (vn, o, g, s, usemtl, ...) are ignored
    if not face_v:
        raise MeshError("OBJ contains no faces")
    uv_arr = np.asarray(uvs, dtype=np.float64)[np.asarray(face_t, dtype=np.int64)]
    if uv_arr.size and (uv_arr.min() < -1e-9 or uv_arr.max() > 1 + 1e-9):
        raise MeshError("OBJ texture coordinates outside [0, 1]^2")
    return TriangleMesh(
        vertices=np.asarray(verts, dtype=np.float64),
        faces=np.asarray(face_v, dtype=np.int64),
        uv=np.clip(uv_arr, 0.0, 1.0),
    )


def save_obj(mesh: TriangleMesh, path) -> None:
    """Write the mesh as ASCII OBJ with per-corner ``vt`` records (atomic)."""
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    uv_flat = mesh.uv.reshape(-1, 2)
    for t in uv_flat:
        lines.append(f"vt {t[0]:.9g} {t[1]:.9g}")
    for fi, f in enumerate(mesh.faces):
        t0, t1, t2 = 3 * fi + 1, 3 * fi + 2, 3 * fi + 3
        lines.append(f"f {f[0] + 1}/{t0} {f[1] + 1}/{t1} {f[2] + 1}/{t2}")
    text = "\n".join(lines) + "\n"
    from trivatar.tensorio import atomic_write_text

    atomic_write_text(path, text)


def face_geometry(mesh: TriangleMesh, positions: np.ndarray | None = None):
    """Per-face unit normals and areas.

    Normals follow counter-clockwise winding.  Raises for degenerate faces
    (area <= 1e-12 m^2), listing the offending face indices.

    Returns
    -------
    normals : (F, 3) float array
    areas : (F,) float array
    """
    pos = mesh.vertices if positions is None else np.asarray(positions, dtype=np.float64)
    a = pos[mesh.faces[:, 0]]
    b = pos[mesh.faces[:, 1]]
    c = pos[mesh.faces[:, 2]]
    cross = np.cross(b - a, c - a)
    double_area = np.linalg.norm(cross, axis=1)
    areas = 0.5 * double_area
    bad = np.flatnonzero(areas <= 1e-12)
    if bad.size:
        raise MeshError(f"degenerate faces (area <= 1e-12 m^2): {bad.tolist()}")
    normals = cross / double_area[:, None]
    return normals, areas


def vertex_neighbors(mesh: TriangleMesh) -> list[np.ndarray]:
    """1-ring vertex neighborhoods (sorted, unique) for every vertex."""
    n = mesh.n_vertices
    pairs = np.concatenate(
        [mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]], axis=0
    )
    both = np.concatenate([pairs, pairs[:, ::-1]], axis=0)
    both = np.unique(both, axis=0)
    split = np.searchsorted(both[:, 0], np.arange(n + 1))
    return [both[split[i] : split[i + 1], 1] for i in range(n)]


def vertex_laplacian(mesh: TriangleMesh, positions: np.ndarray) -> np.ndarray:
    """Uniform (umbrella) Laplacian: L_v = x_v - mean(1-ring of v).

    Raises for isolated vertices (no neighbors).
    """
    pos = np.asarray(positions, dtype=np.float64)
    if pos.shape != (mesh.n_vertices, 3):
        raise MeshError(f"positions must be ({mesh.n_vertices}, 3), got {pos.shape}")
    L = laplacian_matrix(mesh)
    return L @ pos


def laplacian_matrix(mesh: TriangleMesh):
    """Sparse uniform Laplacian L with L @ x = x - ring_mean(x)."""
    from scipy import sparse

    n = mesh.n_vertices
    neighbors = vertex_neighbors(mesh)
    isolated = [i for i, nb in enumerate(neighbors) if len(nb) == 0]
    if isolated:
        raise MeshError(f"isolated vertices (no neighbors): {isolated}")
    rows, cols, vals = [], [], []
    for i, nb in enumerate(neighbors):
        rows.append(i)
        cols.append(i)
        vals.append(1.0)
        w = -1.0 / len(nb)
        for j in nb:
            rows.append(i)
            cols.append(int(j))
            vals.append(w)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def unique_edges(mesh: TriangleMesh):
    """Undirected edge table of the mesh.

    Returns
    -------
    edges : (E, 2) int array
        Unique vertex pairs with edges[:, 0] < edges[:, 1].
    face_edges : (F, 3) int array
        Global edge id of each face edge; edge k of face f connects
        corners k and (k + 1) % 3.
    edge_faces : list of (E,) int arrays
        Adjacent face indices per edge (1 for boundary, 2 for interior,
        more for non-manifold input).
    """
    f = mesh.faces
    halfedges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    keys = np.sort(halfedges, axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    face_edges = inverse.reshape(3, -1).T.copy()
    edge_faces: list[list[int]] = [[] for _ in range(len(edges))]
    n_faces = len(f)
    for he_idx, e_idx in enumerate(inverse):
        edge_faces[e_idx].append(he_idx % n_faces)
    return edges, face_edges, [np.asarray(lst, dtype=np.int64) for lst in edge_faces]


def vertex_normals(mesh: TriangleMesh, positions: np.ndarray | None = None) -> np.ndarray:
    """Angle-weighted vertex pseudo-normals, unit length."""
    pos = mesh.vertices if positions is None else np.asarray(positions, dtype=np.float64)
    face_n, _ = face_geometry(mesh, pos)
    out = np.zeros((len(pos), 3))
    corners = pos[mesh.faces]  # (F, 3, 3)
    for k in range(3):
        p = corners[:, k]
        q = corners[:, (k + 1) % 3]
        r = corners[:, (k + 2) % 3]
        u = q - p
        w = r - p
        cosang = np.einsum("ij,ij->i", u, w) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)
        )
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        np.add.at(out, mesh.faces[:, k], ang[:, None] * face_n)
    norms = np.linalg.norm(out, axis=1)
    if np.any(norms < 1e-15):
        raise MeshError("vertex with degenerate pseudo-normal")
    return out / norms[:, None]


def subdivide_once(mesh: TriangleMesh) -> TriangleMesh:
    """Split every face into 4 by cutting each edge at its midpoint.

    Midpoint vertices are shared across faces; positions and wedge UVs are
    midpoint-interpolated, so chart boundaries are preserved.  Skinning
    weights of midpoints average the two endpoint rows.
    """
    edges, face_edges, _ = unique_edges(mesh)
    n = mesh.n_vertices
    mid_pos = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    new_vertices = np.concatenate([mesh.vertices, mid_pos], axis=0)

    new_weights = None
    if mesh.skin_weights is not None:
        mid_w = 0.5 * (mesh.skin_weights[edges[:, 0]] + mesh.skin_weights[edges[:, 1]])
        new_weights = np.concatenate([mesh.skin_weights, mid_w], axis=0)

    f = mesh.faces
    m01 = n + face_edges[:, 0]
    m12 = n + face_edges[:, 1]
    m20 = n + face_edges[:, 2]
    new_faces = np.concatenate(
        [
            np.stack([f[:, 0], m01, m20], axis=1),
            np.stack([f[:, 1], m12, m01], axis=1),
            np.stack([f[:, 2], m20, m12], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ],
        axis=0,
    )

    t = mesh.uv
    t01 = 0.5 * (t[:, 0] + t[:, 1])
    t12 = 0.5 * (t[:, 1] + t[:, 2])
    t20 = 0.5 * (t[:, 2] + t[:, 0])
    new_uv = np.concatenate(
        [
            np.stack([t[:, 0], t01, t20], axis=1),
            np.stack([t[:, 1], t12, t01], axis=1),
            np.stack([t[:, 2], t20, t12], axis=1),
            np.stack([t01, t12, t20], axis=1),
        ],
        axis=0,
    )
    return TriangleMesh(new_vertices, new_faces, new_uv, new_weights)


def extract_seams(mesh: TriangleMesh, tol: float = 1e-9) -> SeamEdgeList:
    """Find mesh edges whose two adjacent faces disagree in UV.

    Each seam edge appears exactly once.  Both sides are parameterized from
    the same start vertex so that equal edge parameters correspond to the
    same world point.  Raises on non-manifold edges (> 2 adjacent faces).
    """
    edges, face_edges, edge_faces = unique_edges(mesh)
    non_manifold = [i for i, fl in enumerate(edge_faces) if len(fl) > 2]
    if non_manifold:
        raise MeshError(f"non-manifold edges (>2 adjacent faces): {non_manifold}")

    def corner_uv(face_idx: int, vertex: int) -> np.ndarray:
        local = int(np.flatnonzero(mesh.faces[face_idx] == vertex)[0])
        return mesh.uv[face_idx, local]

    pairs, face_ab = [], []
    st_a, st_b, r_a, r_b, n_a, n_b = [], [], [], [], [], []
    for e_idx, (vi, vj) in enumerate(edges):
        fl = edge_faces[e_idx]
        if len(fl) != 2:
            continue
        fa, fb = int(fl[0]), int(fl[1])
        ua_i, ua_j = corner_uv(fa, vi), corner_uv(fa, vj)
        ub_i, ub_j = corner_uv(fb, vi), corner_uv(fb, vj)
        if max(np.abs(ua_i - ub_i).max(), np.abs(ua_j - ub_j).max()) <= tol:
            continue
        ra = ua_j - ua_i
        rb = ub_j - ub_i
        if np.linalg.norm(ra) <= 0 or np.linalg.norm(rb) <= 0:
            raise MeshError(f"seam edge {e_idx} has zero UV length")
        pairs.append([vi, vj])
        face_ab.append([fa, fb])
        st_a.append(ua_i)
        st_b.append(ub_i)
        r_a.append(ra)
        r_b.append(rb)
        n_a.append(_inward_uv_normal(mesh, fa, vi, vj, ra, ua_i))
        n_b.append(_inward_uv_normal(mesh, fb, vi, vj, rb, ub_i))

    def arr(x, width):
        return (
            np.asarray(x, dtype=np.float64).reshape(-1, width)
            if x
            else np.zeros((0, width))
        )

    return SeamEdgeList(
        vertex_pairs=np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
        faces=np.asarray(face_ab, dtype=np.int64).reshape(-1, 2),
        uv_start_a=arr(st_a, 2),
        uv_start_b=arr(st_b, 2),
        uv_edge_a=arr(r_a, 2),
        uv_edge_b=arr(r_b, 2),
        uv_normal_a=arr(n_a, 2),
        uv_normal_b=arr(n_b, 2),
    )


def _inward_uv_normal(mesh, face_idx, vi, vj, r, start_uv):
    """Unit UV normal of the edge, pointing toward the face's third corner."""
    third = [v for v in mesh.faces[face_idx] if v != vi and v != vj][0]
    local = int(np.flatnonzero(mesh.faces[face_idx] == third)[0])
    opp = mesh.uv[face_idx, local]
    n = np.array([-r[1], r[0]])
    n = n / np.linalg.norm(n)
    if np.dot(opp - start_uv, n) < 0:
        n = -n
    return n
