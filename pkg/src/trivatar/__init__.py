"""Deformable-avatar geometry kernel.

A library and CLI for posing and deforming a skinned human template
(dual-quaternion skinning over an embedded deformation graph), mapping
global points into the template's undeformed tri-plane texture space,
evaluating tri-plane/MLP signed-distance fields, volume rendering them
with unbiased SDF weights, and refining the template against the field.
"""

from trivatar.mesh import TriangleMesh, SeamEdgeList, load_obj, save_obj
from trivatar.skeleton import Skeleton, SkeletalMotion, DualQuaternionSet
from trivatar.deform import EmbeddedGraph, GraphParams
from trivatar.utts import ClosestPointIndex, MappingBatch, MappingResult, UttsPoint
from trivatar.field import FeatureTriplane, MlpWeights, SdfField
from trivatar.render import Camera, Scene

__all__ = [
    "TriangleMesh",
    "SeamEdgeList",
    "load_obj",
    "save_obj",
    "Skeleton",
    "SkeletalMotion",
    "DualQuaternionSet",
    "EmbeddedGraph",
    "GraphParams",
    "ClosestPointIndex",
    "MappingBatch",
    "MappingResult",
    "UttsPoint",
    "FeatureTriplane",
    "MlpWeights",
    "SdfField",
    "Camera",
    "Scene",
]

__version__ = "0.1.0"
