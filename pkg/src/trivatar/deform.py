"""Embedded-graph deformation with per-vertex displacements.

A coarse node graph carries per-node Euler rotations and translations;
dense template vertices blend the node transforms with geodesic-distance
weights and add a per-vertex displacement.  Graph topology and parameters
are supplied from files or generators, never learned here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.transform import Rotation

from trivatar.mesh import TriangleMesh
from trivatar.skeleton import Skeleton, SkeletalMotion, dq_skin, skinning_transforms


class DeformError(ValueError):
    """Invalid deformation graph or parameters."""


@dataclass(frozen=True, eq=False)
class EmbeddedGraph:
    """Deformation-node graph bound to a template mesh.

    Fields
    ------
    rest_positions : (K, 3) float
        Node rest positions, meters.
    edges : (Ge, 2) int
        Node connectivity (kept for serialization; not used by evaluation).
    weight_nodes : (N, Knn) int
        Per-vertex retained node indices (-1 padding allowed past the first).
    weight_values : (N, Knn) float
        Matching weights; each row is >= 0 and sums to 1 within 1e-6.
    """

    rest_positions: np.ndarray
    edges: np.ndarray
    weight_nodes: np.ndarray
    weight_values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.rest_positions, dtype=np.float64).reshape(-1, 3)
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        wn = np.asarray(self.weight_nodes, dtype=np.int64)
        wv = np.asarray(self.weight_values, dtype=np.float64)
        if wn.shape != wv.shape or wn.ndim != 2:
            raise DeformError("weight_nodes / weight_values shape mismatch")
        if wn.max(initial=-1) >= len(g):
            raise DeformError("weight node index out of range")
        if np.any(wv < -1e-12):
            raise DeformError("weights must be nonnegative")
        sums = wv.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise DeformError("weight rows must sum to 1 within 1e-6")
        object.__setattr__(self, "rest_positions", g)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "weight_nodes", wn)
        object.__setattr__(self, "weight_values", np.clip(wv, 0.0, None))

    @property
    def n_nodes(self) -> int:
        return len(self.rest_positions)

    def to_json_dict(self) -> dict:
        return {
            "rest_positions": self.rest_positions.tolist(),
            "edges": self.edges.tolist(),
            "weight_nodes": self.weight_nodes.tolist(),
            "weight_values": self.weight_values.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "EmbeddedGraph":
        return cls(
            rest_positions=np.asarray(data["rest_positions"], dtype=np.float64),
            edges=np.asarray(data.get("edges", np.zeros((0, 2))), dtype=np.int64),
            weight_nodes=np.asarray(data["weight_nodes"], dtype=np.int64),
            weight_values=np.asarray(data["weight_values"], dtype=np.float64),
        )


@dataclass(frozen=True, eq=False)
class GraphParams:
    """Per-node Euler angles (radians, intrinsic XYZ) and translations,
    plus per-vertex displacements (meters)."""

    angles: np.ndarray  # (K, 3)
    translations: np.ndarray  # (K, 3)
    displacements: np.ndarray  # (N, 3)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.translations, dtype=np.float64).reshape(-1, 3)
        d = np.asarray(self.displacements, dtype=np.float64).reshape(-1, 3)
        if len(a) != len(t):
            raise DeformError("angles / translations length mismatch")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "translations", t)
        object.__setattr__(self, "displacements", d)

    @classmethod
    def identity(cls, n_nodes: int, n_vertices: int) -> "GraphParams":
        return cls(
            np.zeros((n_nodes, 3)), np.zeros((n_nodes, 3)), np.zeros((n_vertices, 3))
        )

    def to_json_dict(self) -> dict:
        return {
            "angles": self.angles.tolist(),
            "translations": self.translations.tolist(),
            "displacements": self.displacements.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GraphParams":
        return cls(
            np.asarray(data["angles"], dtype=np.float64),
            np.asarray(data["translations"], dtype=np.float64),
            np.asarray(data["displacements"], dtype=np.float64),
        )


def load_graph(path) -> EmbeddedGraph:
    with open(path) as fh:
        return EmbeddedGraph.from_json_dict(json.load(fh))


def load_params(path) -> GraphParams:
    with open(path) as fh:
        return GraphParams.from_json_dict(json.load(fh))


def geodesic_weights(
    mesh: TriangleMesh, anchors: np.ndarray, k: int = 4
) -> tuple[np.ndarray, np.ndarray]:
    """Geodesic blending weights of mesh vertices against graph nodes.

    Each graph node is anchored at a mesh vertex (``anchors`` holds the
    vertex index per node).  Geodesic distances run Dijkstra over the
    edge-length graph.  Per vertex the k nearest nodes are kept with
    weights proportional to (1 - d / d_cut)^2, normalized to sum 1, where
    d_cut is the distance to the (k+1)-th nearest node.  With at most k
    nodes in the graph d_cut is infinite and the kernel degenerates to
    uniform weights.  A vertex at zero distance from an anchor gets that
    node's full weight.

    Returns (weight_nodes, weight_values), both (N, k').
    """
    anchors = np.asarray(anchors, dtype=np.int64).reshape(-1)
    n_nodes = len(anchors)
    if n_nodes == 0:
        raise DeformError("graph must have at least one node")
    n = mesh.n_vertices
    f = mesh.faces
    pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    lengths = np.linalg.norm(
        mesh.vertices[pairs[:, 0]] - mesh.vertices[pairs[:, 1]], axis=1
    )
    adj = csr_matrix(
        (
            np.concatenate([lengths, lengths]),
            (
                np.concatenate([pairs[:, 0], pairs[:, 1]]),
                np.concatenate([pairs[:, 1], pairs[:, 0]]),
            ),
        ),
        shape=(n, n),
    )
    dist = dijkstra(adj, directed=False, indices=anchors)  # (n_nodes, N)
    if np.any(np.isinf(dist.min(axis=0))):
        bad = np.flatnonzero(np.isinf(dist.min(axis=0)))
        raise DeformError(f"vertices unreachable from every node: {bad.tolist()}")

    keep = min(k, n_nodes)
    order = np.argsort(dist, axis=0, kind="stable")  # ties -> lower node index
    nearest = order[:keep].T  # (N, keep)
    rows = np.arange(n)
    d_near = dist[nearest.T, rows].T  # (N, keep)

    values = np.empty_like(d_near)
    if n_nodes > k:
        d_cut = dist[order[k], rows]  # (N,)
        values = (1.0 - d_near / d_cut[:, None]) ** 2
    else:
        values[:] = 1.0  # d_cut = inf -> uniform kernel

    hit = d_near[:, 0] <= 1e-12  # exact anchor hit dominates
    values[hit] = 0.0
    values[hit, 0] = 1.0
    values = values / values.sum(axis=1, keepdims=True)
    return nearest, values


def build_graph(
    mesh: TriangleMesh, anchors: np.ndarray, k: int = 4, edges=None
) -> EmbeddedGraph:
    """Embedded graph with nodes at the given mesh vertices and geodesic weights."""
    anchors = np.asarray(anchors, dtype=np.int64).reshape(-1)
    nodes, values = geodesic_weights(mesh, anchors, k)
    return EmbeddedGraph(
        rest_positions=mesh.vertices[anchors],
        edges=np.zeros((0, 2), dtype=np.int64) if edges is None else edges,
        weight_nodes=nodes,
        weight_values=values,
    )


def embedded_deform(
    template: np.ndarray, graph: EmbeddedGraph, params: GraphParams
) -> np.ndarray:
    """Canonical deformation: blend per-node rigid motions and add displacements.

    Each vertex v with weights w over nodes k maps to
    D_v + sum_k w_k (R(A_k)(M_v - G_k) + G_k + T_k), with R the intrinsic
    XYZ Euler rotation.
    """
    M = np.asarray(template, dtype=np.float64).reshape(-1, 3)
    if len(M) != len(graph.weight_nodes):
        raise DeformError(
            f"template has {len(M)} vertices, weights cover {len(graph.weight_nodes)}"
        )
    if len(params.angles) != graph.n_nodes:
        raise DeformError("params node count mismatch")
    if len(params.displacements) != len(M):
        raise DeformError("displacement count mismatch")
    R = Rotation.from_euler("XYZ", params.angles).as_matrix()  # (K, 3, 3)
    G = graph.rest_positions
    T = params.translations
    nodes = graph.weight_nodes  # (N, Knn)
    w = graph.weight_values  # (N, Knn)
    Rv = R[nodes]  # (N, Knn, 3, 3)
    Gv = G[nodes]  # (N, Knn, 3)
    Tv = T[nodes]
    local = M[:, None, :] - Gv
    moved = np.einsum("nkij,nkj->nki", Rv, local) + Gv + Tv
    return params.displacements + np.einsum("nk,nki->ni", w, moved)


def deformable_model(
    template: TriangleMesh,
    graph: EmbeddedGraph,
    params: GraphParams,
    skeleton: Skeleton,
    motion: SkeletalMotion,
) -> np.ndarray:
    """Posed, non-rigidly deformed vertices: skin the canonical deformation.

    The canonical stage applies the embedded graph to the rest template;
    the posed stage applies dual-quaternion skinning with the motion's
    final-frame pose.  Identity graph parameters reduce this to pure
    skinning of the template.
    """
    if template.skin_weights is None:
        raise DeformError("template has no skinning weights")
    Y = embedded_deform(template.vertices, graph, params)
    dqs = skinning_transforms(skeleton, motion.current_pose)
    return dq_skin(Y, template.skin_weights, dqs)
