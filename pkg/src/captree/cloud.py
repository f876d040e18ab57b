"""Point cloud container: an ordered (n, k) array of finite points.

Coordinates are stored as float32 (sensor precision); all distance math
elsewhere promotes to float64. Padding with infinity points happens inside
tree construction, never in a PointCloud.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .geom import Aabb, aabb_of_points

__all__ = ["PointCloud"]


class PointCloud:
    """Ordered list of k-dimensional points with a cached enclosing AABB."""

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=np.float32)
        if points.ndim != 2:
            raise ValueError(f"points must be (n, k), got shape {points.shape}")
        if points.shape[0] and not np.all(np.isfinite(points)):
            raise ValueError("point cloud contains non-finite coordinates")
        self.points = points

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PointCloud)
            and self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
        )

    @cached_property
    def bounds(self) -> Aabb:
        """Minimal AABB of the cloud. Errors on an empty cloud."""
        return aabb_of_points(self.points)

    def as_float64(self) -> np.ndarray:
        return self.points.astype(np.float64)

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)}, k={self.k})"
