"""Procedural test meshes: icospheres, grids, cylinders, and variants.

These generators provide deterministic fixtures for tests, the collision
study, and the demo assets shipped with the CLI.  All meshes carry a valid
wedge-UV atlas.
"""

from __future__ import annotations

import numpy as np

from trivatar.mesh import TriangleMesh, subdivide_once


def icosahedron() -> TriangleMesh:
    """Unit icosahedron (12 vertices, 20 faces) with a spherical-chart atlas."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    uv = _spherical_wedge_uv(verts, faces)
    return TriangleMesh(verts, faces, uv)


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriangleMesh:
    """Icosahedron subdivided ``subdivisions`` times, reprojected to ``radius``."""
    mesh = icosahedron()
    for _ in range(subdivisions):
        mesh = subdivide_once(mesh)
        v = mesh.vertices
        v = v / np.linalg.norm(v, axis=1)[:, None]
        mesh = TriangleMesh(v, mesh.faces, _spherical_wedge_uv(v, mesh.faces))
    v = mesh.vertices * radius
    return TriangleMesh(v, mesh.faces, mesh.uv)


def _spherical_wedge_uv(verts: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Longitude/latitude wedge UVs; the date-line wrap is resolved per face."""
    lon = np.arctan2(verts[:, 1], verts[:, 0]) / (2 * np.pi) + 0.5
    lat = np.arccos(np.clip(verts[:, 2], -1.0, 1.0)) / np.pi
    uv = np.stack([lon, lat], axis=1)[faces].copy()  # (F, 3, 2)
    # unwrap faces straddling the +-pi longitude cut toward the majority side
    u = uv[..., 0]
    span = u.max(axis=1) - u.min(axis=1)
    for fi in np.flatnonzero(span > 0.5):
        col = u[fi]
        col[col < 0.5] += 1.0
        u[fi] = col - 1.0 if col.min() >= 1.0 else col
    uv[..., 0] = np.clip(u, 0.0, 1.0)
    return uv


def planar_grid(nx: int = 4, ny: int = 4, size: float = 1.0) -> TriangleMesh:
    """Flat grid in the z=0 plane, single UV chart covering [0, 1]^2."""
    xs = np.linspace(0.0, size, nx + 1)
    ys = np.linspace(0.0, size, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)], axis=1)
    uvs = np.stack([gx.ravel() / size, gy.ravel() / size], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    faces = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces.append([a, b, c])
            faces.append([a, c, d])
    faces = np.asarray(faces, dtype=np.int64)
    return TriangleMesh(verts, faces, uvs[faces])


def cylinder(
    n_around: int = 16,
    n_along: int = 8,
    radius: float = 0.1,
    length: float = 1.0,
    capped: bool = True,
) -> TriangleMesh:
    """Cylinder along +z with the tube chart cut along one generator line.

    The seam runs along the cut: ring vertices are shared in 3D but the
    first/last columns of the chart give them distinct UVs.  Caps (when
    requested) occupy two small disk charts, so their rim edges are seams
    too.
    """
    rows = []
    for iz in range(n_along + 1):
        z = length * iz / n_along
        ring = []
        for ia in range(n_around):
            ang = 2 * np.pi * ia / n_around
            ring.append([radius * np.cos(ang), radius * np.sin(ang), z])
        rows.append(ring)
    verts = np.asarray(rows, dtype=np.float64).reshape(-1, 3)

    def vid(iz, ia):
        return iz * n_around + ia % n_around

    def uv_of(iz, ia):
        # ia may equal n_around at the wrap; the tube chart spans u in [0,1]
        return (ia / n_around, 0.12 + 0.88 * iz / n_along)

    faces, uvs = [], []
    for iz in range(n_along):
        for ia in range(n_around):
            a, b = vid(iz, ia), vid(iz, ia + 1)
            c, d = vid(iz + 1, ia + 1), vid(iz + 1, ia)
            faces.append([a, b, c])
            uvs.append([uv_of(iz, ia), uv_of(iz, ia + 1), uv_of(iz + 1, ia + 1)])
            faces.append([a, c, d])
            uvs.append([uv_of(iz, ia), uv_of(iz + 1, ia + 1), uv_of(iz + 1, ia)])
    verts_list = [verts]
    if capped:
        base = len(verts)
        verts_list.append(np.array([[0, 0, 0], [0, 0, length]], dtype=np.float64))

        def disk_uv(center, ia):
            ang = 2 * np.pi * ia / n_around
            return (center[0] + 0.04 * np.cos(ang), center[1] + 0.04 * np.sin(ang))

        for ia in range(n_around):
            a, b = vid(0, ia), vid(0, ia + 1)
            faces.append([base, b, a])
            uvs.append([(0.25, 0.05), disk_uv((0.25, 0.05), ia + 1), disk_uv((0.25, 0.05), ia)])
            a, b = vid(n_along, ia), vid(n_along, ia + 1)
            faces.append([base + 1, a, b])
            uvs.append([(0.75, 0.05), disk_uv((0.75, 0.05), ia), disk_uv((0.75, 0.05), ia + 1)])
    all_verts = np.concatenate(verts_list, axis=0)
    return TriangleMesh(all_verts, np.asarray(faces, dtype=np.int64), np.asarray(uvs))


def corrugated_cylinder(
    n_around: int = 24,
    n_along: int = 48,
    radius: float = 0.1,
    length: float = 1.0,
    ripple: float = 0.35,
    waves: int = 6,
) -> TriangleMesh:
    """Cylinder with a radial ripple along its axis.

    The ripple valleys create concave rings whose medial axis sits close to
    the surface, so closest-point queries from points lifted off the surface
    increasingly hit edges/vertices as the probe height grows.
    """
    base = cylinder(n_around, n_along, radius, length, capped=True)
    v = base.vertices.copy()
    tube = n_around * (n_along + 1)
    z = v[:tube, 2]
    scale = 1.0 + ripple * np.sin(2 * np.pi * waves * z / length)
    v[:tube, 0] *= scale
    v[:tube, 1] *= scale
    return TriangleMesh(v, base.faces, base.uv)


def two_chart_sphere(
    n_lat: int = 8, n_lon: int = 12, radius: float = 1.0
) -> TriangleMesh:
    """Lat-long sphere whose atlas splits into hemisphere charts at the equator.

    ``n_lat`` must be even so the equator is a vertex ring; every equator
    edge is then a seam between the two orthographic disk charts.
    """
    if n_lat % 2:
        raise ValueError("n_lat must be even")
    rings = []
    for il in range(1, n_lat):
        theta = np.pi * il / n_lat
        ring = []
        for ia in range(n_lon):
            phi = 2 * np.pi * ia / n_lon
            ring.append(
                [
                    radius * np.sin(theta) * np.cos(phi),
                    radius * np.sin(theta) * np.sin(phi),
                    radius * np.cos(theta),
                ]
            )
        rings.append(ring)
    verts = np.asarray(rings, dtype=np.float64).reshape(-1, 3)
    north = len(verts)
    south = len(verts) + 1
    verts = np.concatenate(
        [verts, [[0, 0, radius], [0, 0, -radius]]], axis=0
    )

    def vid(il, ia):
        return (il - 1) * n_lon + ia % n_lon

    faces = []
    for ia in range(n_lon):
        faces.append([north, vid(1, ia), vid(1, ia + 1)])
        faces.append([south, vid(n_lat - 1, ia + 1), vid(n_lat - 1, ia)])
    for il in range(1, n_lat - 1):
        for ia in range(n_lon):
            a, b = vid(il, ia), vid(il, ia + 1)
            c, d = vid(il + 1, ia + 1), vid(il + 1, ia)
            faces.append([a, c, b])
            faces.append([a, d, c])
    faces = np.asarray(faces, dtype=np.int64)

    def chart_uv(vertex, upper):
        x, y = vertex[0] / radius, vertex[1] / radius
        cx = 0.25 if upper else 0.75
        return (cx + 0.2 * x, 0.5 + 0.2 * y)

    centers = verts[faces].mean(axis=1)
    uv = np.zeros((len(faces), 3, 2))
    for fi in range(len(faces)):
        upper = centers[fi, 2] >= 0
        for k in range(3):
            uv[fi, k] = chart_uv(verts[faces[fi, k]], upper)
    return TriangleMesh(verts, faces, np.clip(uv, 0.0, 1.0))


def box(half_extents=(0.5, 0.5, 0.5)) -> TriangleMesh:
    """Axis-aligned box, 12 triangles, one chart per face packed in a 4x2 grid."""
    hx, hy, hz = half_extents
    corners = np.array(
        [
            [-hx, -hy, -hz], [hx, -hy, -hz], [hx, hy, -hz], [-hx, hy, -hz],
            [-hx, -hy, hz], [hx, -hy, hz], [hx, hy, hz], [-hx, hy, hz],
        ]
    )
    quads = [
        (0, 3, 2, 1),  # -z
        (4, 5, 6, 7),  # +z
        (0, 1, 5, 4),  # -y
        (2, 3, 7, 6),  # +y
        (1, 2, 6, 5),  # +x
        (3, 0, 4, 7),  # -x
    ]
    faces, uvs = [], []
    for qi, (a, b, c, d) in enumerate(quads):
        col, row = qi % 4, qi // 4
        u0, v0 = col * 0.25 + 0.02, row * 0.5 + 0.02
        u1, v1 = (col + 1) * 0.25 - 0.02, (row + 1) * 0.5 - 0.02
        quad_uv = [(u0, v0), (u1, v0), (u1, v1), (u0, v1)]
        faces.append([a, b, c])
        uvs.append([quad_uv[0], quad_uv[1], quad_uv[2]])
        faces.append([a, c, d])
        uvs.append([quad_uv[0], quad_uv[2], quad_uv[3]])
    return TriangleMesh(corners, np.asarray(faces, dtype=np.int64), np.asarray(uvs))


def tent(angle_deg: float = 90.0, size: float = 1.0) -> TriangleMesh:
    """Two faces meeting along a ridge at the given dihedral angle."""
    half = np.deg2rad(angle_deg) / 2.0
    dx = size * np.sin(half)
    dz = size * np.cos(half)
    verts = np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, size, 0.0],
            [-dx, 0.0, -dz],
            [-dx, size, -dz],
            [dx, 0.0, -dz],
            [dx, size, -dz],
        ]
    )
    faces = np.array([[0, 2, 3], [0, 3, 1], [0, 1, 5], [0, 5, 4]], dtype=np.int64)
    uv = np.array(
        [
            [[0.5, 0.0], [0.0, 0.0], [0.0, 1.0]],
            [[0.5, 0.0], [0.0, 1.0], [0.5, 1.0]],
            [[0.5, 0.0], [0.5, 1.0], [1.0, 1.0]],
            [[0.5, 0.0], [1.0, 1.0], [1.0, 0.0]],
        ]
    )
    return TriangleMesh(verts, faces, uv)
