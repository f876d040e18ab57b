"""Exact sphere-vs-point-cloud collision checking.

A cache-friendly implicit tree whose leaves carry affordance sets (every
cloud point a sphere centered in the leaf's cell could touch), enabling
backtrack-free exact collision queries, plus a Z-order-curve point-cloud
filter, brute-force and k-d-tree referees, and a benchmark CLI.
"""

from .cloud import PointCloud
from .geom import (Aabb, Sphere, aabb_of_points, dist_sq_point_aabb,
                   dist_sq_point_point, farthest_corner_dist_sq,
                   sphere_intersects_aabb)
from .io import ParseError, QueryTraceRecord, read_trace, read_xyz, write_trace, write_xyz
from .morton import FilterConfig, MortonKey, filter_cloud, morton_key, reach_filter
from .oracle import (DispersionStats, KdTree, brute_collides, dispersion_stats,
                     filter_oracle, kd_nearest)
from .query import (QueryOutcome, SphereBatch, collides, collides_any,
                    collides_batch, collides_many, collides_unchecked)
from .tree import (BuildParams, BuildStats, Capt, construct, leaf_index,
                   leaf_indices, load_capt, save_capt)

__version__ = "0.1.0"

__all__ = [
    "Aabb", "Sphere", "PointCloud",
    "aabb_of_points", "dist_sq_point_point", "dist_sq_point_aabb",
    "sphere_intersects_aabb", "farthest_corner_dist_sq",
    "MortonKey", "FilterConfig", "morton_key", "filter_cloud", "reach_filter",
    "BuildParams", "BuildStats", "Capt", "construct", "leaf_index",
    "leaf_indices", "save_capt", "load_capt",
    "SphereBatch", "QueryOutcome", "collides", "collides_unchecked",
    "collides_batch", "collides_any", "collides_many",
    "KdTree", "DispersionStats", "brute_collides", "kd_nearest",
    "dispersion_stats", "filter_oracle",
    "ParseError", "QueryTraceRecord", "read_xyz", "write_xyz",
    "read_trace", "write_trace",
]
