"""Euclidean and spherical primitives."""
from .mesh import TriMesh, ray_mesh_hits, voxel_separation, voxelize
from .sphere import (
    E1,
    E2,
    E3,
    Cap,
    DirectionSet,
    Sector,
    angular_distance,
    as_direction,
    fibonacci_sphere,
    hausdorff_sphere,
    lattice_pitch,
    rotation_to_pole,
    sector_contains,
    sigma,
    slerp,
    tangent_frame,
    upper_hemisphere,
)

__all__ = [
    "E1", "E2", "E3", "Cap", "DirectionSet", "Sector", "TriMesh",
    "angular_distance", "as_direction", "fibonacci_sphere", "hausdorff_sphere",
    "lattice_pitch", "ray_mesh_hits", "rotation_to_pole", "sector_contains",
    "sigma", "slerp", "tangent_frame", "upper_hemisphere", "voxel_separation",
    "voxelize",
]
