"""Scalar geometric primitives shared by every other module.

Points are plain numpy arrays of shape (k,). A distinguished "infinity
point" (all coordinates +inf) marks padding entries; mixing finite and
infinite coordinates in one point is illegal.

All distance kernels work on squared distances and accumulate in float64
regardless of input dtype, so that the tree path and the brute-force
referee always agree bit-for-bit on boolean collision outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Aabb",
    "Sphere",
    "is_infinity_point",
    "validate_point",
    "dist_sq_point_point",
    "dist_sq_point_aabb",
    "sphere_intersects_aabb",
    "farthest_corner_dist_sq",
    "aabb_of_points",
]


def is_infinity_point(p: np.ndarray) -> bool:
    """True iff every coordinate of `p` is +inf."""
    p = np.asarray(p, dtype=np.float64)
    return bool(np.all(np.isposinf(p)))


def validate_point(p: np.ndarray) -> np.ndarray:
    """Check the all-finite-or-all-+inf invariant; returns `p` as float64."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"point must be 1-D, got shape {p.shape}")
    if np.any(np.isnan(p)):
        raise ValueError("point contains NaN")
    if not (np.all(np.isfinite(p)) or np.all(np.isposinf(p))):
        raise ValueError("point mixes finite and infinite coordinates")
    return p


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box with per-axis lower/upper bounds, possibly unbounded.

    The "empty-at-infinity" box (lo = hi = +inf on every axis) is the box
    of a padding leaf; it intersects no sphere with finite center/radius.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo/hi must be 1-D arrays of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds contain NaN")
        if not np.all(lo <= hi):
            raise ValueError("box has lo > hi on some axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def k(self) -> int:
        return self.lo.shape[0]

    @classmethod
    def unbounded(cls, k: int) -> "Aabb":
        return cls(np.full(k, -np.inf), np.full(k, np.inf))

    @classmethod
    def empty_at_infinity(cls, k: int) -> "Aabb":
        return cls(np.full(k, np.inf), np.full(k, np.inf))

    def contains(self, p: np.ndarray) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(self.lo <= p) and np.all(p <= self.hi))


@dataclass(frozen=True)
class Sphere:
    """Query primitive: finite center and positive finite radius (meters)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("sphere center must be a finite 1-D point")
        r = float(self.radius)
        if not (np.isfinite(r) and r > 0):
            raise ValueError(f"sphere radius must be finite and > 0, got {r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)


def dist_sq_point_point(p: np.ndarray, q: np.ndarray) -> float:
    """Squared Euclidean distance; +inf if either point is the infinity point."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    if is_infinity_point(p) or is_infinity_point(q):
        return np.inf
    d = p - q
    return float((d * d).sum())


def dist_sq_point_aabb(p: np.ndarray, b: Aabb) -> float:
    """Squared distance from finite `p` to the closest point of `b`.

    Zero iff p is inside b; +inf for the empty-at-infinity box.
    """
    p = np.asarray(p, dtype=np.float64)
    r = np.maximum(b.lo - p, 0.0)
    r = np.maximum(r, p - b.hi)
    return float((r * r).sum())


def dist_sq_points_aabb(pts: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Vectorized `dist_sq_point_aabb` for an (m, k) array of finite points."""
    r = np.maximum(lo - pts, 0.0)
    np.maximum(r, pts - hi, out=r)
    return (r * r).sum(axis=-1)


def sphere_intersects_aabb(s: Sphere, b: Aabb) -> bool:
    """True iff some point of `b` lies within s.radius of s.center.

    Tangency counts: the comparison is <=.
    """
    return dist_sq_point_aabb(s.center, b) <= s.radius * s.radius


def farthest_corner_dist_sq(b: Aabb, p: np.ndarray) -> float:
    """Max squared distance from finite `p` to any corner of `b`.

    +inf whenever any bound of `b` is infinite, so unbounded cells never
    satisfy the small-cell shortcut test.
    """
    p = np.asarray(p, dtype=np.float64)
    r = np.maximum(np.abs(p - b.lo), np.abs(p - b.hi))
    return float((r * r).sum())


def aabb_of_points(points: np.ndarray) -> Aabb:
    """Minimal box over a nonempty (m, k) array of points.

    An all-infinity-point input yields the empty-at-infinity box.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("aabb_of_points requires a nonempty (m, k) array")
    return Aabb(points.min(axis=0), points.max(axis=0))
