"""Mapping global points into the undeformed tri-plane texture space.

A query point is dropped onto the posed template via an exact
closest-point search (BVH over triangles, branch-and-bound, no
approximations).  The closest element may be a face, an edge, or a vertex;
the face case yields barycentric atlas coordinates and is bijective within
the height band, while edge/vertex hits are flagged as collision-prone.
Heights are signed by the angle-weighted pseudo-normal of the closest
element so inside and outside points stay distinct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from trivatar import config
from trivatar.mesh import (
    MeshError,
    SeamEdgeList,
    TriangleMesh,
    face_geometry,
    unique_edges,
    vertex_normals,
)

FACE, EDGE, VERTEX = 0, 1, 2
_CLASS_NAMES = ("face", "edge", "vertex")


@dataclass(frozen=True)
class UttsPoint:
    """Texture-space coordinate: atlas position u, signed height d (meters)."""

    u: tuple[float, float]
    d: float
    d_max: float

    @property
    def d_hat(self) -> float:
        """Height normalized to [0, 1]: (d / d_max + 1) / 2."""
        return (self.d / self.d_max + 1.0) / 2.0

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.u[0], self.u[1], self.d])


@dataclass(frozen=True)
class MappingResult:
    """Closest-element classification for one query point."""

    utts: UttsPoint
    element_class: str  # "face" | "edge" | "vertex"
    element_index: int
    face_index: int
    closest_point: np.ndarray
    bary: tuple[float, float] | None  # (lambda_a, lambda_b) in the face case
    out_of_range: bool
    collision_prone: bool


@dataclass(frozen=True, eq=False)
class MappingBatch:
    """Vectorized mapping results for a batch of query points."""

    u: np.ndarray  # (N, 2)
    d: np.ndarray  # (N,) signed height
    element_class: np.ndarray  # (N,) 0 face / 1 edge / 2 vertex
    element_index: np.ndarray  # (N,) face, global edge, or vertex index
    face_index: np.ndarray  # (N,) winning face
    closest_point: np.ndarray  # (N, 3)
    bary: np.ndarray  # (N, 2), NaN outside the face case
    out_of_range: np.ndarray  # (N,) bool
    collision_prone: np.ndarray  # (N,) bool
    d_max: float

    def __len__(self) -> int:
        return len(self.d)

    @property
    def d_hat(self) -> np.ndarray:
        return (self.d / self.d_max + 1.0) / 2.0

    def utts_points(self) -> np.ndarray:
        """(N, 3) array of (u_x, u_y, d)."""
        return np.concatenate([self.u, self.d[:, None]], axis=1)

    def result(self, i: int) -> MappingResult:
        cls = int(self.element_class[i])
        return MappingResult(
            utts=UttsPoint(
                (float(self.u[i, 0]), float(self.u[i, 1])),
                float(self.d[i]),
                self.d_max,
            ),
            element_class=_CLASS_NAMES[cls],
            element_index=int(self.element_index[i]),
            face_index=int(self.face_index[i]),
            closest_point=self.closest_point[i],
            bary=None if cls != FACE else (float(self.bary[i, 0]), float(self.bary[i, 1])),
            out_of_range=bool(self.out_of_range[i]),
            collision_prone=bool(self.collision_prone[i]),
        )


@dataclass(frozen=True)
class CollisionStats:
    """Element-class census of a mapped sample cloud."""

    d_max: float
    n_samples: int
    face_frac: float
    edge_frac: float
    vertex_frac: float
    out_of_range_frac: float

    @property
    def collision_frac(self) -> float:
        return self.edge_frac + self.vertex_frac


# ---------------------------------------------------------------------------
# BVH construction (numpy) and query kernel (numba)


def _build_bvh(tri_verts: np.ndarray, leaf_size: int = 4):
    """Median-split AABB tree over triangles; returns flat node arrays."""
    n_tris = len(tri_verts)
    tri_min = tri_verts.min(axis=1)
    tri_max = tri_verts.max(axis=1)
    centroids = tri_verts.mean(axis=1)

    order = np.arange(n_tris)
    node_min, node_max = [], []
    node_left, node_start, node_count = [], [], []

    def new_node():
        node_min.append(np.zeros(3))
        node_max.append(np.zeros(3))
        node_left.append(-1)
        node_start.append(0)
        node_count.append(0)
        return len(node_left) - 1

    root = new_node()
    stack = [(root, 0, n_tris)]
    while stack:
        idx, lo, hi = stack.pop()
        sel = order[lo:hi]
        node_min[idx] = tri_min[sel].min(axis=0)
        node_max[idx] = tri_max[sel].max(axis=0)
        if hi - lo <= leaf_size:
            node_left[idx] = -1
            node_start[idx] = lo
            node_count[idx] = hi - lo
            continue
        cen = centroids[sel]
        axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
        mid = (hi - lo) // 2
        part = np.argpartition(cen[:, axis], mid)
        order[lo:hi] = sel[part]
        left = new_node()
        right = new_node()
        node_left[idx] = left  # right child is always left + 1
        stack.append((left, lo, lo + mid))
        stack.append((right, lo + mid, hi))

    return (
        np.asarray(node_min),
        np.asarray(node_max),
        np.asarray(node_left, dtype=np.int64),
        np.asarray(node_start, dtype=np.int64),
        np.asarray(node_count, dtype=np.int64),
        order.astype(np.int64),
    )


@njit(inline="always", cache=True)
def _closest_on_triangle(ax, ay, az, bx, by, bz, cx, cy, cz, px, py, pz):
    """Closest point on a triangle with region code.

    Region codes: 0 face, 1 edge ab, 2 edge bc, 3 edge ca,
    4 vertex a, 5 vertex b, 6 vertex c.
    """
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return ax, ay, az, 4
    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bx, by, bz, 5
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return ax + v * abx, ay + v * aby, az + v * abz, 1
    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cx, cy, cz, 6
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return ax + w * acx, ay + w * acy, az + w * acz, 3
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return bx + w * (cx - bx), by + w * (cy - by), bz + w * (cz - bz), 2
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return ax + v * abx + w * acx, ay + v * aby + w * acy, az + v * abz + w * acz, 0


@njit(inline="always", cache=True)
def _aabb_dist2(bmin, bmax, px, py, pz):
    dx = max(bmin[0] - px, 0.0, px - bmax[0])
    dy = max(bmin[1] - py, 0.0, py - bmax[1])
    dz = max(bmin[2] - pz, 0.0, pz - bmax[2])
    return dx * dx + dy * dy + dz * dz


@njit(cache=True, parallel=True)
def _query_kernel(
    points,
    tri,
    node_min,
    node_max,
    node_left,
    node_start,
    node_count,
    sorted_to_orig,
    out_dist2,
    out_point,
    out_face,
    out_region,
    stacks,
    warm_faces,
):
    """Exact nearest-triangle search, parallel over query points.

    Triangles are stored leaf-contiguous (``tri`` already permuted); ties in
    distance break toward the lowest *original* face index, so the result is
    the lexicographic (distance^2, face) minimum regardless of traversal or
    thread scheduling.  ``warm_faces`` seeds each thread's prune bound with
    its previous winner; with spatially sorted queries that bound is usually
    tight immediately.  The seed never changes the final minimum.
    """
    n = len(points)
    for i in prange(n):
        tid = numba.get_thread_id()
        stack = stacks[tid]
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        best_d2 = np.inf
        best_s = np.int64(-1)
        best_region = 0
        bx = by = bz = 0.0
        pf = warm_faces[tid]
        if pf >= 0:
            qx, qy, qz, region = _closest_on_triangle(
                tri[pf, 0, 0], tri[pf, 0, 1], tri[pf, 0, 2],
                tri[pf, 1, 0], tri[pf, 1, 1], tri[pf, 1, 2],
                tri[pf, 2, 0], tri[pf, 2, 1], tri[pf, 2, 2],
                px, py, pz,
            )
            ex, ey, ez = px - qx, py - qy, pz - qz
            best_d2 = ex * ex + ey * ey + ez * ez
            best_s = pf
            best_region = region
            bx, by, bz = qx, qy, qz
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _aabb_dist2(node_min[node], node_max[node], px, py, pz) > best_d2:
                continue
            left = node_left[node]
            if left < 0:
                start = node_start[node]
                for s in range(start, start + node_count[node]):
                    qx, qy, qz, region = _closest_on_triangle(
                        tri[s, 0, 0], tri[s, 0, 1], tri[s, 0, 2],
                        tri[s, 1, 0], tri[s, 1, 1], tri[s, 1, 2],
                        tri[s, 2, 0], tri[s, 2, 1], tri[s, 2, 2],
                        px, py, pz,
                    )
                    ex, ey, ez = px - qx, py - qy, pz - qz
                    d2 = ex * ex + ey * ey + ez * ez
                    if d2 < best_d2 or (
                        d2 == best_d2
                        and (best_s < 0 or sorted_to_orig[s] < sorted_to_orig[best_s])
                    ):
                        best_d2 = d2
                        best_s = s
                        best_region = region
                        bx, by, bz = qx, qy, qz
            else:
                right = left + 1
                dl = _aabb_dist2(node_min[left], node_max[left], px, py, pz)
                dr = _aabb_dist2(node_min[right], node_max[right], px, py, pz)
                # push far child first so the near one is visited first
                if dl <= dr:
                    if dr <= best_d2:
                        stack[sp] = right
                        sp += 1
                    if dl <= best_d2:
                        stack[sp] = left
                        sp += 1
                else:
                    if dl <= best_d2:
                        stack[sp] = left
                        sp += 1
                    if dr <= best_d2:
                        stack[sp] = right
                        sp += 1
        out_dist2[i] = best_d2
        out_point[i, 0] = bx
        out_point[i, 1] = by
        out_point[i, 2] = bz
        out_face[i] = sorted_to_orig[best_s]
        out_region[i] = best_region
        warm_faces[tid] = best_s


class ClosestPointIndex:
    """Exact nearest-element queries against one posed mesh.

    Precomputes a BVH over the triangles, per-face frames, and pseudo-normals
    for every vertex (angle-weighted) and edge (area-weighted average of the
    two adjacent face normals).  Immutable after construction; queries are
    pure and safe to run concurrently.
    """

    def __init__(self, mesh: TriangleMesh, positions: np.ndarray | None = None):
        self.mesh = mesh
        pos = mesh.vertices if positions is None else np.asarray(positions, dtype=np.float64)
        if pos.shape != (mesh.n_vertices, 3):
            raise MeshError(f"positions must be ({mesh.n_vertices}, 3)")
        self.positions = pos
        self.face_normals, self.face_areas = face_geometry(mesh, pos)  # degenerate check
        self.tri = np.ascontiguousarray(pos[mesh.faces])  # (F, 3, 3)
        (
            self._node_min,
            self._node_max,
            self._node_left,
            self._node_start,
            self._node_count,
            self._prim_order,
        ) = _build_bvh(self.tri, leaf_size=8)
        self._tri_sorted = np.ascontiguousarray(self.tri[self._prim_order])
        extent = self.tri.reshape(-1, 3).max(axis=0) - self.tri.reshape(-1, 3).min(axis=0)
        self._sort_cell = max(float(extent.max()) / 64.0, 1e-9)

        self.edges, self.face_edges, edge_faces = unique_edges(mesh)
        self.edge_faces = edge_faces
        self.vertex_pseudo_normals = vertex_normals(mesh, pos)
        self.edge_pseudo_normals = self._edge_pseudo_normals(edge_faces)
        # lowest-index adjacent face per edge / per vertex, for deterministic
        # wedge-UV lookup of edge and vertex hits
        self.edge_canonical_face = np.array(
            [int(fl.min()) for fl in edge_faces], dtype=np.int64
        )
        first_face = np.full(mesh.n_vertices, -1, dtype=np.int64)
        for fi in range(mesh.n_faces - 1, -1, -1):
            for v in mesh.faces[fi]:
                first_face[v] = fi
        self.vertex_canonical_face = first_face

    def _edge_pseudo_normals(self, edge_faces) -> np.ndarray:
        out = np.zeros((len(self.edges), 3))
        for e, fl in enumerate(edge_faces):
            w = self.face_areas[fl]
            n = (self.face_normals[fl] * w[:, None]).sum(axis=0)
            norm = np.linalg.norm(n)
            if norm < 1e-15:
                # opposing normals cancel (fold-over); fall back to plain mean
                n = self.face_normals[fl].sum(axis=0)
                norm = np.linalg.norm(n)
                if norm < 1e-15:
                    n = self.face_normals[fl[0]]
                    norm = 1.0
            out[e] = n / norm
        return out

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self._node_left < 0))

    def query(self, points: np.ndarray):
        """Nearest element per query point.

        Returns (dist, closest_point, face, region) where ``region`` is the
        raw per-face region code (0 face, 1..3 edges ab/bc/ca, 4..6 vertices).
        Queries are internally sorted into spatial cells for cache locality;
        outputs are returned in input order.
        """
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        n = len(pts)
        order = None
        if n > 4096:
            cells = np.floor(pts / self._sort_cell)
            order = np.lexsort((cells[:, 2], cells[:, 1], cells[:, 0]))
            pts = np.ascontiguousarray(pts[order])
        dist2 = np.empty(n)
        point = np.empty((n, 3))
        face = np.empty(n, dtype=np.int64)
        region = np.empty(n, dtype=np.int64)
        n_threads = numba.get_num_threads()
        stacks = np.empty((n_threads, 128), dtype=np.int64)
        warm = np.full(n_threads, -1, dtype=np.int64)
        _query_kernel(
            pts,
            self._tri_sorted,
            self._node_min,
            self._node_max,
            self._node_left,
            self._node_start,
            self._node_count,
            self._prim_order,
            dist2,
            point,
            face,
            region,
            stacks,
            warm,
        )
        if order is not None:
            inverse = np.empty_like(order)
            inverse[order] = np.arange(n)
            dist2 = dist2[inverse]
            point = point[inverse]
            face = face[inverse]
            region = region[inverse]
        return np.sqrt(dist2), point, face, region


def build_index(mesh: TriangleMesh, positions: np.ndarray | None = None) -> ClosestPointIndex:
    """Build the closest-point acceleration structure for a posed mesh."""
    return ClosestPointIndex(mesh, positions)


_EDGE_LOCAL = {1: 0, 2: 1, 3: 2}  # region code -> face edge slot (ab, bc, ca)
_VERT_LOCAL = {4: 0, 5: 1, 6: 2}


@njit(cache=True, parallel=True)
def _post_kernel(
    points,
    dist,
    cp,
    face,
    region,
    tri,
    uv,
    faces,
    face_edges,
    edges,
    positions,
    face_n,
    edge_pn,
    vert_pn,
    edge_cf,
    vert_cf,
    out_u,
    out_d,
    out_bary,
    out_class,
    out_elem,
):
    """Classify elements, interpolate wedge UVs, and sign heights."""
    n = len(points)
    for i in prange(n):
        f = face[i]
        r = region[i]
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        out_bary[i, 0] = np.nan
        out_bary[i, 1] = np.nan
        if r == 0:
            out_class[i] = 0
            out_elem[i] = f
            ax, ay, az = tri[f, 0, 0], tri[f, 0, 1], tri[f, 0, 2]
            bx, by, bz = tri[f, 1, 0], tri[f, 1, 1], tri[f, 1, 2]
            cx, cy, cz = tri[f, 2, 0], tri[f, 2, 1], tri[f, 2, 2]
            qx, qy, qz = cp[i, 0], cp[i, 1], cp[i, 2]
            # area-ratio barycentrics: || (c-b) x (p-b) || / || (c-b) x (a-b) ||
            cbx, cby, cbz = cx - bx, cy - by, cz - bz
            abx, aby, abz = ax - bx, ay - by, az - bz
            dx = cby * abz - cbz * aby
            dy = cbz * abx - cbx * abz
            dz = cbx * aby - cby * abx
            denom = np.sqrt(dx * dx + dy * dy + dz * dz)
            pbx, pby, pbz = qx - bx, qy - by, qz - bz
            nx_ = cby * pbz - cbz * pby
            ny_ = cbz * pbx - cbx * pbz
            nz_ = cbx * pby - cby * pbx
            la = np.sqrt(nx_ * nx_ + ny_ * ny_ + nz_ * nz_) / denom
            acx, acy, acz = ax - cx, ay - cy, az - cz
            pcx, pcy, pcz = qx - cx, qy - cy, qz - cz
            mx = acy * pcz - acz * pcy
            my = acz * pcx - acx * pcz
            mz = acx * pcy - acy * pcx
            lb = np.sqrt(mx * mx + my * my + mz * mz) / denom
            out_bary[i, 0] = la
            out_bary[i, 1] = lb
            lc = 1.0 - la - lb
            out_u[i, 0] = la * uv[f, 0, 0] + lb * uv[f, 1, 0] + lc * uv[f, 2, 0]
            out_u[i, 1] = la * uv[f, 0, 1] + lb * uv[f, 1, 1] + lc * uv[f, 2, 1]
            pnx, pny, pnz = face_n[f, 0], face_n[f, 1], face_n[f, 2]
        elif r <= 3:
            e = face_edges[f, r - 1]
            out_class[i] = 1
            out_elem[i] = e
            vi = edges[e, 0]
            vj = edges[e, 1]
            ax, ay, az = positions[vi, 0], positions[vi, 1], positions[vi, 2]
            ex_, ey_, ez_ = (
                positions[vj, 0] - ax,
                positions[vj, 1] - ay,
                positions[vj, 2] - az,
            )
            lam = (ex_ * (px - ax) + ey_ * (py - ay) + ez_ * (pz - az)) / (
                ex_ * ex_ + ey_ * ey_ + ez_ * ez_
            )
            lam = min(max(lam, 0.0), 1.0)
            cf = edge_cf[e]
            li = 0
            lj = 0
            for k in range(3):
                if faces[cf, k] == vi:
                    li = k
                if faces[cf, k] == vj:
                    lj = k
            out_u[i, 0] = (1.0 - lam) * uv[cf, li, 0] + lam * uv[cf, lj, 0]
            out_u[i, 1] = (1.0 - lam) * uv[cf, li, 1] + lam * uv[cf, lj, 1]
            pnx, pny, pnz = edge_pn[e, 0], edge_pn[e, 1], edge_pn[e, 2]
        else:
            v = faces[f, r - 4]
            out_class[i] = 2
            out_elem[i] = v
            cf = vert_cf[v]
            lv = 0
            for k in range(3):
                if faces[cf, k] == v:
                    lv = k
            out_u[i, 0] = uv[cf, lv, 0]
            out_u[i, 1] = uv[cf, lv, 1]
            pnx, pny, pnz = vert_pn[v, 0], vert_pn[v, 1], vert_pn[v, 2]
        side = (px - cp[i, 0]) * pnx + (py - cp[i, 1]) * pny + (pz - cp[i, 2]) * pnz
        out_d[i] = dist[i] if side >= 0.0 else -dist[i]
        out_u[i, 0] = min(max(out_u[i, 0], 0.0), 1.0)
        out_u[i, 1] = min(max(out_u[i, 1], 0.0), 1.0)


def map_points(index: ClosestPointIndex, points: np.ndarray, d_max: float) -> MappingBatch:
    """Map a batch of global points into texture space (vectorized core).

    Face hits interpolate the winning face's wedge UVs with the barycentric
    area ratios; edge hits project onto the edge (squared-norm parameter,
    clamped to [0, 1], with the wedge UVs of the lowest-index adjacent
    face); vertex hits copy that corner's UV.  Heights are signed by the
    element's pseudo-normal.
    """
    if d_max <= 0:
        raise ValueError("d_max must be positive")
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    dist, p, face, region = index.query(pts)
    mesh = index.mesh
    n = len(pts)
    u = np.empty((n, 2))
    d = np.empty(n)
    bary = np.empty((n, 2))
    element_class = np.empty(n, dtype=np.int64)
    element_index = np.empty(n, dtype=np.int64)
    _post_kernel(
        pts,
        dist,
        p,
        face,
        region,
        index.tri,
        index.mesh.uv,
        mesh.faces,
        index.face_edges,
        index.edges,
        index.positions,
        index.face_normals,
        index.edge_pseudo_normals,
        index.vertex_pseudo_normals,
        index.edge_canonical_face,
        index.vertex_canonical_face,
        u,
        d,
        bary,
        element_class,
        element_index,
    )
    return MappingBatch(
        u=u,
        d=d,
        element_class=element_class,
        element_index=element_index,
        face_index=face,
        closest_point=p,
        bary=bary,
        out_of_range=np.abs(d) > d_max,
        collision_prone=element_class != FACE,
        d_max=float(d_max),
    )


def closest_point(index: ClosestPointIndex, x: np.ndarray) -> MappingResult:
    """Single-point nearest-element query (unsigned height, d_max = inf)."""
    batch = map_points(index, np.asarray(x, dtype=np.float64)[None], np.inf)
    res = batch.result(0)
    return MappingResult(
        utts=UttsPoint(res.utts.u, abs(res.utts.d), np.inf),
        element_class=res.element_class,
        element_index=res.element_index,
        face_index=res.face_index,
        closest_point=res.closest_point,
        bary=res.bary,
        out_of_range=False,
        collision_prone=res.collision_prone,
    )


def map_to_utts(index: ClosestPointIndex, x: np.ndarray, d_max: float) -> MappingResult:
    """Single-point texture-space mapping with signed height."""
    return map_points(index, np.asarray(x, dtype=np.float64)[None], d_max).result(0)


def inverse_map(
    index: ClosestPointIndex,
    face_index: np.ndarray,
    bary: np.ndarray,
    d: np.ndarray,
) -> np.ndarray:
    """Reconstruct global points from face-case mapping results.

    x = lambda_a v_a + lambda_b v_b + (1 - lambda_a - lambda_b) v_c + d n_f.
    Barycentrics must lie in the open simplex (face interior).
    """
    face_index = np.atleast_1d(np.asarray(face_index, dtype=np.int64))
    bary = np.atleast_2d(np.asarray(bary, dtype=np.float64))
    d = np.atleast_1d(np.asarray(d, dtype=np.float64))
    la, lb = bary[:, 0], bary[:, 1]
    lc = 1.0 - la - lb
    if np.any(la < 0) or np.any(lb < 0) or np.any(lc < 0):
        raise ValueError("barycentric coordinates outside the face simplex")
    mesh = index.mesh
    pos = index.positions
    va = pos[mesh.faces[face_index, 0]]
    vb = pos[mesh.faces[face_index, 1]]
    vc = pos[mesh.faces[face_index, 2]]
    n = index.face_normals[face_index]
    return la[:, None] * va + lb[:, None] * vb + lc[:, None] * vc + d[:, None] * n


def inverse_map_result(index: ClosestPointIndex, result: MappingResult) -> np.ndarray:
    """Single-result inverse mapping; rejects non-face cases."""
    if result.element_class != "face":
        raise ValueError(f"inverse mapping requires a face hit, got {result.element_class}")
    return inverse_map(
        index, [result.face_index], [list(result.bary)], [result.utts.d]
    )[0]


def collision_ratio(
    index: ClosestPointIndex, samples: np.ndarray, d_max: float
) -> CollisionStats:
    """Fraction of in-range samples whose nearest element is an edge or vertex."""
    samples = np.atleast_2d(samples)
    if len(samples) == 0:
        raise ValueError("samples must be non-empty")
    batch = map_points(index, samples, d_max)
    in_range = ~batch.out_of_range
    n_in = int(np.count_nonzero(in_range))
    if n_in == 0:
        face = edge = vert = 0.0
    else:
        cls = batch.element_class[in_range]
        face = float(np.count_nonzero(cls == FACE)) / n_in
        edge = float(np.count_nonzero(cls == EDGE)) / n_in
        vert = float(np.count_nonzero(cls == VERTEX)) / n_in
    return CollisionStats(
        d_max=float(d_max),
        n_samples=len(samples),
        face_frac=face,
        edge_frac=edge,
        vertex_frac=vert,
        out_of_range_frac=float(np.count_nonzero(batch.out_of_range)) / len(samples),
    )


def sample_offset_points(
    index: ClosestPointIndex,
    count: int,
    h_range: tuple[float, float],
    rng: np.random.Generator,
) -> np.ndarray:
    """Random points lifted off the surface along face normals.

    Faces are drawn proportionally to area; the lift height is uniform in
    ``h_range``.  The resulting cloud has fixed surface offsets, suitable
    for collision-ratio sweeps over d_max.
    """
    mesh = index.mesh
    prob = index.face_areas / index.face_areas.sum()
    faces = rng.choice(mesh.n_faces, size=count, p=prob)
    r1 = np.sqrt(rng.uniform(size=count))
    r2 = rng.uniform(size=count)
    la = 1.0 - r1
    lb = r1 * (1.0 - r2)
    lc = r1 * r2
    pos = index.positions
    base = (
        la[:, None] * pos[mesh.faces[faces, 0]]
        + lb[:, None] * pos[mesh.faces[faces, 1]]
        + lc[:, None] * pos[mesh.faces[faces, 2]]
    )
    h = rng.uniform(h_range[0], h_range[1], size=count)
    return base + h[:, None] * index.face_normals[faces]


def seam_sample_pairs(
    seams: SeamEdgeList,
    count: int,
    epsilon: float = config.SEAM_EPSILON,
    h_range: tuple[float, float] = config.SEAM_HEIGHT_RANGE,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Mirrored texture-space sample pairs straddling UV seams.

    Each pair shares one edge parameter alpha in [0, 1] and one height h
    drawn uniformly from ``h_range``; the two sides are offset by epsilon
    along their respective inward UV edge normals.  Returns two (S, 3)
    arrays of (u_x, u_y, d).
    """
    if len(seams) == 0:
        raise ValueError("seam list is empty")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    rng = np.random.default_rng() if rng is None else rng
    j = rng.integers(0, len(seams), size=count)
    alpha = rng.uniform(size=count)
    h = rng.uniform(h_range[0], h_range[1], size=count)

    def side(start, edge, normal):
        uv = start[j] + alpha[:, None] * edge[j] + epsilon * normal[j]
        return np.concatenate([uv, h[:, None]], axis=1)

    a = side(seams.uv_start_a, seams.uv_edge_a, seams.uv_normal_a)
    b = side(seams.uv_start_b, seams.uv_edge_b, seams.uv_normal_b)
    return a, b
